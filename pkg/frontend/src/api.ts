/** Thin typed client for the clipforge job service. */

import type { Job, ScoresDoc, Segment, SegmentParams, UploadResult } from './types';

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class Api {
  constructor(public baseUrl: string = '') {}

  private async check<T>(res: Response): Promise<T> {
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        if (body && body.detail) detail = String(body.detail);
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  async uploadVideo(file: File | Blob, name = 'upload.avi'): Promise<UploadResult> {
    const form = new FormData();
    form.append('file', file, name);
    const res = await fetch(`${this.baseUrl}/videos`, { method: 'POST', body: form });
    return this.check<UploadResult>(res);
  }

  async createScoreJob(videoId: string, strideFrames = 8): Promise<string> {
    const res = await fetch(`${this.baseUrl}/jobs`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({
        video_id: videoId,
        kind: 'score',
        params: { stride_frames: strideFrames },
      }),
    });
    const body = await this.check<{ job_id: string }>(res);
    return body.job_id;
  }

  async createRenderJob(
    videoId: string,
    params: SegmentParams,
    strideFrames: number,
    segments: Segment[],
  ): Promise<string> {
    const res = await fetch(`${this.baseUrl}/jobs`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({
        video_id: videoId,
        kind: 'highlight',
        params: {
          threshold: params.threshold,
          max_gap_sec: params.max_gap_sec,
          min_len_sec: params.min_len_sec,
          stride_frames: strideFrames,
          segments,
        },
      }),
    });
    const body = await this.check<{ job_id: string }>(res);
    return body.job_id;
  }

  async getJob(jobId: string): Promise<Job> {
    const res = await fetch(`${this.baseUrl}/jobs/${jobId}`);
    return this.check<Job>(res);
  }

  async getScores(jobId: string): Promise<ScoresDoc> {
    const res = await fetch(`${this.baseUrl}/jobs/${jobId}/scores`);
    return this.check<ScoresDoc>(res);
  }

  videoArtifactUrl(jobId: string): string {
    return `${this.baseUrl}/jobs/${jobId}/video`;
  }

  async health(): Promise<{ status: string; checkpoint_loaded: boolean }> {
    const res = await fetch(`${this.baseUrl}/healthz`);
    return this.check(res);
  }
}

/**
 * Poll a job once per second until terminal; at most one request in flight.
 * onUpdate fires for every observed state.
 */
export async function pollJob(
  api: Api,
  jobId: string,
  onUpdate: (job: Job) => void,
  intervalMs = 1000,
): Promise<Job> {
  for (;;) {
    const job = await api.getJob(jobId);
    onUpdate(job);
    if (job.state === 'done' || job.state === 'failed') return job;
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
