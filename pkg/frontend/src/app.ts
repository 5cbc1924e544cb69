/**
 * Single-page editor: upload -> score job -> timeline -> tune & toggle ->
 * render selected segments -> download.
 *
 * Slider and toggle changes recompute segments purely on the client (the
 * shared merge rule in segments.ts); the server is only contacted for the
 * upload, the scoring job, and the final render.
 */

import { Api, ApiError, pollJob } from './api';
import { recomputeSegments, totalDuration } from './segments';
import { Timeline } from './timeline';
import type { ScoresDoc, Segment, SegmentParams } from './types';

export interface AppState {
  phase: 'idle' | 'uploading' | 'scoring' | 'editing' | 'rendering' | 'done' | 'error';
  videoId: string | null;
  scores: ScoresDoc | null;
  params: SegmentParams;
  segments: Segment[];
  included: boolean[];
  error: string | null;
  downloadUrl: string | null;
  serverCalls: number;
}

const DEFAULT_PARAMS: SegmentParams = { threshold: 0.5, max_gap_sec: 1.0, min_len_sec: 1.0 };

export class App {
  state: AppState = {
    phase: 'idle',
    videoId: null,
    scores: null,
    params: { ...DEFAULT_PARAMS },
    segments: [],
    included: [],
    error: null,
    downloadUrl: null,
    serverCalls: 0,
  };

  private timeline: Timeline | null = null;
  private els: Record<string, HTMLElement> = {};

  constructor(
    private root: HTMLElement,
    private api: Api,
    private doc: Document = document,
  ) {
    this.mount();
  }

  // ------------------------------------------------------------------ DOM

  private mount(): void {
    this.root.innerHTML = `
      <header><h1>clipforge editor</h1><span id="health"></span></header>
      <section class="upload-row">
        <input type="file" id="file" accept="video/*" />
        <button id="upload">Upload &amp; score</button>
        <span id="status" data-phase="idle">pick a video</span>
      </section>
      <section class="player-row">
        <video id="preview" controls muted></video>
      </section>
      <canvas id="timeline" width="860" height="180"></canvas>
      <section class="controls">
        <label>threshold <input type="range" id="threshold" min="0" max="1" step="0.01" value="0.5" />
          <span id="threshold-value">0.50</span></label>
        <label>max gap (s) <input type="range" id="max-gap" min="0" max="5" step="0.25" value="1" />
          <span id="max-gap-value">1.00</span></label>
        <label>min length (s) <input type="range" id="min-len" min="0" max="5" step="0.25" value="1" />
          <span id="min-len-value">1.00</span></label>
      </section>
      <section>
        <ul id="segments" class="segment-list"></ul>
        <div class="render-row">
          <span id="total"></span>
          <button id="render" disabled>Render highlight</button>
          <a id="download" hidden download="highlight.avi">Download highlight</a>
        </div>
      </section>
    `;
    for (const id of [
      'file', 'upload', 'status', 'preview', 'timeline', 'threshold', 'max-gap',
      'min-len', 'threshold-value', 'max-gap-value', 'min-len-value', 'segments',
      'render', 'download', 'total', 'health',
    ]) {
      this.els[id] = this.root.querySelector(`#${id}`) as HTMLElement;
    }
    this.timeline = new Timeline(this.els['timeline'] as HTMLCanvasElement, {
      onThresholdDrag: (v) => this.setParam('threshold', Math.round(v * 100) / 100),
      onSeek: (sec) => {
        (this.els['preview'] as HTMLVideoElement).currentTime = sec;
      },
    });
    this.els['upload'].addEventListener('click', () => void this.startFlow());
    this.bindSlider('threshold', 'threshold');
    this.bindSlider('max-gap', 'max_gap_sec');
    this.bindSlider('min-len', 'min_len_sec');
    this.els['render'].addEventListener('click', () => void this.requestRender());
    void this.refreshHealth();
  }

  private bindSlider(id: string, key: keyof SegmentParams): void {
    this.els[id].addEventListener('input', () => {
      this.setParam(key, parseFloat((this.els[id] as HTMLInputElement).value));
    });
  }

  private setStatus(text: string, phase: AppState['phase']): void {
    this.state.phase = phase;
    this.els['status'].textContent = text;
    this.els['status'].setAttribute('data-phase', phase);
  }

  private async refreshHealth(): Promise<void> {
    try {
      const h = await this.api.health();
      this.els['health'].textContent = h.checkpoint_loaded ? 'model ready' : 'no checkpoint (degraded)';
    } catch {
      this.els['health'].textContent = 'service unreachable';
    }
  }

  // ----------------------------------------------------------------- flow

  async startFlow(file?: File): Promise<void> {
    const input = this.els['file'] as HTMLInputElement;
    const chosen = file ?? input.files?.[0];
    if (!chosen) {
      this.setStatus('pick a video first', 'idle');
      return;
    }
    try {
      this.setStatus('uploading…', 'uploading');
      const preview = this.els['preview'] as HTMLVideoElement;
      if (typeof URL.createObjectURL === 'function') {
        preview.src = URL.createObjectURL(chosen);
      }
      const uploaded = await this.api.uploadVideo(chosen, (chosen as File).name ?? 'upload.avi');
      this.state.videoId = uploaded.video_id;
      this.state.serverCalls += 1;
      this.setStatus('scoring…', 'scoring');
      const jobId = await this.api.createScoreJob(uploaded.video_id);
      const job = await pollJob(this.api, jobId, (j) => {
        this.setStatus(`scoring… (${j.state})`, 'scoring');
      });
      if (job.state === 'failed') {
        this.fail(job.error ?? 'scoring failed');
        return;
      }
      this.state.scores = await this.api.getScores(jobId);
      this.state.params = { ...DEFAULT_PARAMS };
      this.setStatus(`scored ${this.state.scores.scores.length} windows — tune and render`, 'editing');
      this.recompute(true);
    } catch (err) {
      this.fail(err instanceof ApiError && err.status === 404 ? 'job not found' : String(err));
    }
  }

  private fail(message: string): void {
    this.state.error = message;
    this.setStatus(`error: ${message}`, 'error');
  }

  // ------------------------------------------------------------- editing

  setParam(key: keyof SegmentParams, value: number): void {
    this.state.params[key] = value;
    const labels: Record<string, string> = {
      threshold: 'threshold-value',
      max_gap_sec: 'max-gap-value',
      min_len_sec: 'min-len-value',
    };
    const sliders: Record<string, string> = {
      threshold: 'threshold',
      max_gap_sec: 'max-gap',
      min_len_sec: 'min-len',
    };
    (this.els[sliders[key]] as HTMLInputElement).value = String(value);
    this.els[labels[key]].textContent = value.toFixed(2);
    this.recompute(true);
  }

  /** Pure client recompute; never contacts the server. */
  recompute(resetIncluded: boolean): void {
    if (!this.state.scores) return;
    this.state.segments = recomputeSegments(this.state.scores.scores, this.state.params);
    if (resetIncluded || this.state.included.length !== this.state.segments.length) {
      this.state.included = this.state.segments.map(() => true);
    }
    this.renderSegmentList();
    this.timeline?.update(
      this.state.scores.scores,
      this.state.segments,
      this.state.included,
      this.state.scores.duration_sec,
      this.state.params.threshold,
    );
    this.updateRenderButton();
  }

  toggleSegment(index: number, on: boolean): void {
    this.state.included[index] = on;
    this.recompute(false);
  }

  selectedSegments(): Segment[] {
    return this.state.segments.filter((_, i) => this.state.included[i]);
  }

  private renderSegmentList(): void {
    const ul = this.els['segments'];
    ul.innerHTML = '';
    this.state.segments.forEach((seg, i) => {
      const li = this.doc.createElement('li');
      const box = this.doc.createElement('input');
      box.type = 'checkbox';
      box.checked = this.state.included[i];
      box.addEventListener('change', () => this.toggleSegment(i, box.checked));
      const label = this.doc.createElement('span');
      label.textContent =
        `${seg.start_sec.toFixed(2)}–${seg.end_sec.toFixed(2)}s ` +
        `(mean ${seg.mean_score.toFixed(2)}, peak ${seg.peak_score.toFixed(2)})`;
      const play = this.doc.createElement('button');
      play.textContent = 'preview';
      play.addEventListener('click', () => {
        const video = this.els['preview'] as HTMLVideoElement;
        video.currentTime = seg.start_sec;
        void video.play();
      });
      li.append(box, label, play);
      ul.append(li);
    });
  }

  private updateRenderButton(): void {
    const selected = this.selectedSegments();
    const busy = this.state.phase === 'uploading' || this.state.phase === 'scoring'
      || this.state.phase === 'rendering';
    (this.els['render'] as HTMLButtonElement).disabled =
      !this.state.scores || selected.length === 0 || busy;
    this.els['total'].textContent = this.state.scores
      ? `${selected.length} segment(s), ${totalDuration(selected).toFixed(2)}s selected`
      : '';
  }

  // ------------------------------------------------------------- rendering

  async requestRender(): Promise<void> {
    const selected = this.selectedSegments();
    if (!this.state.videoId || !this.state.scores || selected.length === 0) return;
    try {
      this.setStatus('rendering…', 'rendering');
      const jobId = await this.api.createRenderJob(
        this.state.videoId,
        this.state.params,
        this.state.scores.stride_frames,
        selected,
      );
      const job = await pollJob(this.api, jobId, (j) => {
        this.setStatus(`rendering… (${j.state})`, 'rendering');
      });
      if (job.state === 'failed') {
        this.fail(job.error ?? 'render failed');
        return;
      }
      this.state.downloadUrl = this.api.videoArtifactUrl(jobId);
      const link = this.els['download'] as HTMLAnchorElement;
      link.href = this.state.downloadUrl;
      link.hidden = false;
      this.setStatus('highlight ready', 'done');
    } catch (err) {
      this.fail(err instanceof ApiError && err.status === 404 ? 'job not found' : String(err));
    }
  }
}

export function createApp(root: HTMLElement, api: Api): App {
  return new App(root, api);
}
