"""Generate the segment-merge golden fixtures shared with the web client.

The committed segment_golden.json is the contract: the browser-side
recompute must reproduce these segment boundaries byte-for-byte from the
same scores and parameters. Regenerate with `python fixtures/make_segment_golden.py`.
"""

import json
import os

import numpy as np


def _scores(entries):
    from clipforge.highlight import WindowScore

    return [
        WindowScore(
            start_frame=sf,
            end_frame=sf + 16,
            start_sec=sf / 16.0,
            end_sec=(sf + 16) / 16.0,
            p_violence=p,
        )
        for sf, p in entries
    ]


def build_fixtures():
    from clipforge.highlight import segments_from_scores

    gen = np.random.default_rng(20240817)
    cases = []

    def add(kind, entries, threshold, max_gap_sec, min_len_sec):
        scores = _scores(entries)
        segments = segments_from_scores(scores, threshold, max_gap_sec, min_len_sec)
        cases.append(
            {
                "kind": kind,
                "params": {
                    "threshold": threshold,
                    "max_gap_sec": max_gap_sec,
                    "min_len_sec": min_len_sec,
                },
                "scores": [
                    {
                        "start_frame": s.start_frame,
                        "end_frame": s.end_frame,
                        "start_sec": s.start_sec,
                        "end_sec": s.end_sec,
                        "p_violence": s.p_violence,
                    }
                    for s in scores
                ],
                "expected": [
                    {
                        "start_sec": s.start_sec,
                        "end_sec": s.end_sec,
                        "mean_score": s.mean_score,
                        "peak_score": s.peak_score,
                    }
                    for s in segments
                ],
            }
        )

    add("empty", [], 0.5, 1.0, 1.0)
    add("empty", [(i * 8, 0.2) for i in range(12)], 0.5, 1.0, 1.0)
    add("single", [(0, 0.91)], 0.5, 1.0, 1.0)
    add("single", [(16, 0.5)], 0.5, 1.0, 1.0)  # tie counts as violent
    add("merged-gap", [(0, 0.9), (32, 0.8)], 0.5, 1.0, 1.0)  # 1.0s gap closes
    add("merged-gap", [(0, 0.9), (8, 0.3), (16, 0.7), (48, 0.95)], 0.5, 1.0, 1.0)
    add("min-length-filtered", [(0, 0.9)], 0.5, 0.0, 2.0)  # 1s segment dropped
    add("min-length-filtered", [(0, 0.9), (8, 0.85), (64, 0.99)], 0.6, 0.25, 1.5)
    # two random dense grids exercising overlap merging and mixed params
    for stride, thr, gap, min_len in ((4, 0.55, 0.5, 1.0), (12, 0.35, 0.25, 1.5)):
        entries = [
            (i * stride, float(np.round(gen.random(), 3))) for i in range(18)
        ]
        kind = "random-grid"
        add(kind, entries, thr, gap, min_len)
    return {"format": "clipforge-segment-golden", "version": 1, "cases": cases}


def main():
    out = os.path.join(os.path.dirname(__file__), "segment_golden.json")
    with open(out, "w") as fh:
        json.dump(build_fixtures(), fh, indent=2)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
