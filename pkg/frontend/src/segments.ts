/**
 * Client-side mirror of the server's segment-merge rule.
 *
 * Must reproduce the server byte-for-byte on identical inputs: windows with
 * p_violence >= threshold are unioned, runs separated by gaps <= max_gap_sec
 * merge, merged spans shorter than min_len_sec drop. All arithmetic is IEEE
 * double in the same order as the server (sum-then-divide for the mean), so
 * the fixture suite can assert exact equality.
 */

import type { Segment, SegmentParams, WindowScore } from './types';

export function recomputeSegments(scores: WindowScore[], params: SegmentParams): Segment[] {
  const violent = [...scores]
    .sort((a, b) => a.start_sec - b.start_sec)
    .filter((s) => s.p_violence >= params.threshold);
  const merged: { start: number; end: number; probs: number[] }[] = [];
  for (const s of violent) {
    const last = merged[merged.length - 1];
    if (last && s.start_sec - last.end <= params.max_gap_sec) {
      if (s.end_sec > last.end) last.end = s.end_sec;
      last.probs.push(s.p_violence);
    } else {
      merged.push({ start: s.start_sec, end: s.end_sec, probs: [s.p_violence] });
    }
  }
  const out: Segment[] = [];
  for (const m of merged) {
    if (m.end - m.start >= params.min_len_sec) {
      let sum = 0;
      for (const p of m.probs) sum += p;
      let peak = m.probs[0];
      for (const p of m.probs) if (p > peak) peak = p;
      out.push({
        start_sec: m.start,
        end_sec: m.end,
        mean_score: sum / m.probs.length,
        peak_score: peak,
      });
    }
  }
  return out;
}

export function totalDuration(segments: Segment[]): number {
  let total = 0;
  for (const s of segments) total += s.end_sec - s.start_sec;
  return total;
}
