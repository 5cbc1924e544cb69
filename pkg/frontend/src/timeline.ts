/**
 * Canvas timeline: per-window scores as a step chart, derived segments as
 * shaded bands, and a draggable horizontal threshold line.
 */

import type { Segment, WindowScore } from './types';

export interface TimelineCallbacks {
  onThresholdDrag(value: number): void;
  onSeek(sec: number): void;
}

const PAD = { left: 34, right: 8, top: 8, bottom: 18 };

export class Timeline {
  private dragging = false;

  constructor(
    private canvas: HTMLCanvasElement,
    private callbacks: TimelineCallbacks,
  ) {
    canvas.addEventListener('mousedown', (ev) => this.onDown(ev));
    canvas.addEventListener('mousemove', (ev) => this.onMove(ev));
    window.addEventListener('mouseup', () => {
      this.dragging = false;
    });
  }

  private state = {
    scores: [] as WindowScore[],
    segments: [] as Segment[],
    included: [] as boolean[],
    duration: 0,
    threshold: 0.5,
  };

  update(
    scores: WindowScore[],
    segments: Segment[],
    included: boolean[],
    duration: number,
    threshold: number,
  ): void {
    this.state = { scores, segments, included, duration, threshold };
    this.draw();
  }

  private plotWidth(): number {
    return this.canvas.width - PAD.left - PAD.right;
  }

  private plotHeight(): number {
    return this.canvas.height - PAD.top - PAD.bottom;
  }

  private xOf(sec: number): number {
    return PAD.left + (sec / Math.max(this.state.duration, 1e-9)) * this.plotWidth();
  }

  private yOf(p: number): number {
    return PAD.top + (1 - p) * this.plotHeight();
  }

  private pOf(y: number): number {
    return Math.min(1, Math.max(0, 1 - (y - PAD.top) / this.plotHeight()));
  }

  draw(): void {
    const ctx = this.canvas.getContext('2d');
    if (!ctx) return;
    const { scores, segments, included, threshold } = this.state;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    ctx.fillStyle = '#14161d';
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);

    // segment bands
    segments.forEach((seg, i) => {
      ctx.fillStyle = included[i] ? 'rgba(224, 82, 82, 0.35)' : 'rgba(120, 120, 120, 0.18)';
      const x0 = this.xOf(seg.start_sec);
      ctx.fillRect(x0, PAD.top, this.xOf(seg.end_sec) - x0, this.plotHeight());
    });

    // axes
    ctx.strokeStyle = '#3a3f4d';
    ctx.lineWidth = 1;
    ctx.strokeRect(PAD.left, PAD.top, this.plotWidth(), this.plotHeight());
    ctx.fillStyle = '#8a8fa3';
    ctx.font = '10px sans-serif';
    for (const p of [0, 0.5, 1]) {
      ctx.fillText(p.toFixed(1), 8, this.yOf(p) + 3);
    }
    ctx.fillText('0s', PAD.left, this.canvas.height - 5);
    ctx.fillText(`${this.state.duration.toFixed(1)}s`, this.canvas.width - 40, this.canvas.height - 5);

    // score step chart
    if (scores.length) {
      ctx.strokeStyle = '#6fb7ff';
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      scores.forEach((s, i) => {
        const y = this.yOf(s.p_violence);
        const x0 = this.xOf(s.start_sec);
        const x1 = this.xOf(s.end_sec);
        if (i === 0) ctx.moveTo(x0, y);
        else ctx.lineTo(x0, y);
        ctx.lineTo(x1, y);
      });
      ctx.stroke();
    }

    // threshold line
    const ty = this.yOf(threshold);
    ctx.strokeStyle = '#ffd166';
    ctx.setLineDash([6, 4]);
    ctx.beginPath();
    ctx.moveTo(PAD.left, ty);
    ctx.lineTo(this.canvas.width - PAD.right, ty);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = '#ffd166';
    ctx.fillText(threshold.toFixed(2), this.canvas.width - PAD.right - 28, ty - 4);
  }

  private onDown(ev: MouseEvent): void {
    const rect = this.canvas.getBoundingClientRect();
    const y = ev.clientY - rect.top;
    if (Math.abs(y - this.yOf(this.state.threshold)) < 8) {
      this.dragging = true;
    } else {
      const x = ev.clientX - rect.left;
      const sec = ((x - PAD.left) / Math.max(this.plotWidth(), 1)) * this.state.duration;
      if (sec >= 0 && sec <= this.state.duration) this.callbacks.onSeek(sec);
    }
  }

  private onMove(ev: MouseEvent): void {
    if (!this.dragging) return;
    const rect = this.canvas.getBoundingClientRect();
    this.callbacks.onThresholdDrag(this.pOf(ev.clientY - rect.top));
  }
}
