/**
 * DOM-level behavior of the editor with a faked API: pure client recompute
 * on slider moves, include-flag semantics, render gating, error states.
 */

import { beforeEach, describe, expect, it, vi } from 'vitest';

import { Api } from '../src/api';
import { createApp } from '../src/app';
import type { ScoresDoc, WindowScore } from '../src/types';

function score(startFrame: number, p: number): WindowScore {
  return {
    start_frame: startFrame,
    end_frame: startFrame + 16,
    start_sec: startFrame / 16.0,
    end_sec: (startFrame + 16) / 16.0,
    p_violence: p,
  };
}

const SCORES: ScoresDoc = {
  video_id: 'v1',
  duration_sec: 4.0,
  checkpoint_id: 'ck',
  stride_frames: 8,
  scores: [score(0, 0.9), score(8, 0.8), score(16, 0.1), score(24, 0.95), score(32, 0.2)],
};

function fakeApi(): Api {
  const api = new Api('http://fake');
  api.health = vi.fn().mockResolvedValue({ status: 'ok', checkpoint_loaded: true });
  api.uploadVideo = vi.fn().mockResolvedValue({
    video_id: 'v1', duration_sec: 4, frame_count: 64, fps: 16, width: 64, height: 64,
  });
  api.createScoreJob = vi.fn().mockResolvedValue('job-1');
  api.getJob = vi.fn().mockResolvedValue({
    id: 'job-1', kind: 'score', video_id: 'v1', state: 'done', error: null,
    artifacts: { scores: 'x' }, state_history: ['queued', 'running', 'done'],
  });
  api.getScores = vi.fn().mockResolvedValue(SCORES);
  api.createRenderJob = vi.fn().mockResolvedValue('job-2');
  return api;
}

async function editingApp() {
  const root = document.createElement('div');
  document.body.append(root);
  const api = fakeApi();
  const app = createApp(root, api);
  await app.startFlow(new File([new Uint8Array([1, 2, 3])], 'clip.avi'));
  return { app, api, root };
}

beforeEach(() => {
  document.body.innerHTML = '';
});

describe('editing flow', () => {
  it('derives segments from scores with the default params', async () => {
    const { app } = await editingApp();
    expect(app.state.phase).toBe('editing');
    // windows 0-1s and 0.5-1.5s merge; 1.5-2.5s violent; all within gap 1.0
    expect(app.state.segments.length).toBe(1);
    expect(app.state.included).toEqual([true]);
  });

  it('slider changes recompute locally without server calls', async () => {
    const { app, api } = await editingApp();
    const callsBefore =
      (api.getScores as ReturnType<typeof vi.fn>).mock.calls.length +
      (api.createScoreJob as ReturnType<typeof vi.fn>).mock.calls.length +
      (api.getJob as ReturnType<typeof vi.fn>).mock.calls.length;
    app.setParam('threshold', 0.85);
    app.setParam('max_gap_sec', 0.0);
    app.setParam('min_len_sec', 0.5);
    const callsAfter =
      (api.getScores as ReturnType<typeof vi.fn>).mock.calls.length +
      (api.createScoreJob as ReturnType<typeof vi.fn>).mock.calls.length +
      (api.getJob as ReturnType<typeof vi.fn>).mock.calls.length;
    expect(callsAfter).toBe(callsBefore);
    expect(app.state.segments.length).toBe(2); // 0.9 and 0.95 windows apart
  });

  it('threshold above 1 clears all segments and disables render', async () => {
    const { app, root } = await editingApp();
    app.setParam('threshold', 1.01);
    expect(app.state.segments).toEqual([]);
    expect((root.querySelector('#render') as HTMLButtonElement).disabled).toBe(true);
  });

  it('deselecting every segment disables the render button', async () => {
    const { app, root } = await editingApp();
    const render = root.querySelector('#render') as HTMLButtonElement;
    expect(render.disabled).toBe(false);
    app.toggleSegment(0, false);
    expect(app.selectedSegments()).toEqual([]);
    expect(render.disabled).toBe(true);
    app.toggleSegment(0, true);
    expect(render.disabled).toBe(false);
  });

  it('render request sends only the selected segments', async () => {
    const { app, api } = await editingApp();
    app.setParam('threshold', 0.85);
    app.setParam('max_gap_sec', 0.0); // keep the two violent windows separate
    app.setParam('min_len_sec', 0.5);
    expect(app.state.segments.length).toBe(2);
    app.toggleSegment(0, false);
    (api.getJob as ReturnType<typeof vi.fn>).mockResolvedValue({
      id: 'job-2', kind: 'highlight', video_id: 'v1', state: 'done', error: null,
      artifacts: { video: 'x' }, state_history: ['queued', 'running', 'done'],
    });
    await app.requestRender();
    const call = (api.createRenderJob as ReturnType<typeof vi.fn>).mock.calls[0];
    const sentSegments = call[3];
    expect(sentSegments.length).toBe(1);
    expect(sentSegments[0].start_sec).toBe(app.state.segments[1].start_sec);
    expect(app.state.downloadUrl).toContain('/jobs/job-2/video');
    expect(app.state.phase).toBe('done');
  });

  it('stale job 404 shows the job-not-found state', async () => {
    const root = document.createElement('div');
    document.body.append(root);
    const api = fakeApi();
    api.getJob = vi.fn().mockRejectedValue(
      new (await import('../src/api')).ApiError(404, 'unknown job'),
    );
    const app = createApp(root, api);
    await app.startFlow(new File([new Uint8Array([1])], 'clip.avi'));
    expect(app.state.phase).toBe('error');
    expect(root.querySelector('#status')?.textContent).toContain('job not found');
  });

  it('failed scoring job surfaces the server error text', async () => {
    const root = document.createElement('div');
    document.body.append(root);
    const api = fakeApi();
    api.getJob = vi.fn().mockResolvedValue({
      id: 'job-1', kind: 'score', video_id: 'v1', state: 'failed',
      error: 'DecodeError: boom', artifacts: {}, state_history: ['queued', 'running', 'failed'],
    });
    const app = createApp(root, api);
    await app.startFlow(new File([new Uint8Array([1])], 'clip.avi'));
    expect(app.state.phase).toBe('error');
    expect(root.querySelector('#status')?.textContent).toContain('DecodeError: boom');
  });
});
