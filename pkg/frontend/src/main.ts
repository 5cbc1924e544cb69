import { Api } from './api';
import { createApp } from './app';

const base = import.meta.env.VITE_API_BASE ?? '';
createApp(document.getElementById('app') as HTMLElement, new Api(base));
