export interface WindowScore {
  start_frame: number;
  end_frame: number;
  start_sec: number;
  end_sec: number;
  p_violence: number;
}

export interface Segment {
  start_sec: number;
  end_sec: number;
  mean_score: number;
  peak_score: number;
}

export interface SegmentParams {
  threshold: number;
  max_gap_sec: number;
  min_len_sec: number;
}

export interface ScoresDoc {
  video_id: string;
  duration_sec: number;
  checkpoint_id: string;
  stride_frames: number;
  scores: WindowScore[];
}

export type JobState = 'queued' | 'running' | 'done' | 'failed';

export interface Job {
  id: string;
  kind: 'score' | 'highlight';
  video_id: string;
  state: JobState;
  error: string | null;
  artifacts: Record<string, string>;
  state_history: JobState[];
}

export interface UploadResult {
  video_id: string;
  duration_sec: number;
  frame_count: number;
  fps: number;
  width: number;
  height: number;
}
