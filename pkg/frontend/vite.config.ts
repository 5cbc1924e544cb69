import { defineConfig } from 'vitest/config';

export default defineConfig({
  server: {
    proxy: {
      '/videos': 'http://localhost:8765',
      '/jobs': 'http://localhost:8765',
      '/healthz': 'http://localhost:8765',
    },
  },
  test: {
    environment: 'happy-dom',
    testTimeout: 240000,
    hookTimeout: 240000,
  },
});
