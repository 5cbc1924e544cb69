"""Command line entry point.

Stages mirror the pipeline: synth -> preprocess -> split -> train ->
evaluate -> score/highlight -> serve. Exit codes: 0 success, 1 domain error
(bad data, empty split, decode failure), 2 usage error. Every run prints the
resolved effective configuration; --json switches stdout to a single
machine-readable JSON document.
"""

import json
import os
import sys

import click

from . import data, highlight as hl, metrics as ev, nn, synth
from .errors import ClipforgeError
from .media import file_id, probe_video
from .service import load_service_config, serve as run_service
from .train import TrainConfig, train


def _emit(as_json, config, summary):
    if as_json:
        click.echo(json.dumps({"config": config, **summary}, indent=2, sort_keys=True))
    else:
        click.echo(f"config: {json.dumps(config, sort_keys=True)}")
        for key, value in summary.items():
            click.echo(f"{key}: {json.dumps(value) if isinstance(value, (dict, list)) else value}")


def _domain_errors(fn):
    import functools

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ClipforgeError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
def main():
    """Fight-scene detection and highlight compilation."""


@main.command("synth")
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@click.option("--n-per-class", default=20, show_default=True)
@click.option("--duration", default=1.0, show_default=True, help="Seconds per clip.")
@click.option("--seed", default=0, show_default=True)
@click.option("--composite", default=None,
              help="Comma-separated violent intervals 'start-end,...'; writes one long video instead of a dataset.")
@click.option("--composite-duration", default=20.0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def synth_cmd(out, n_per_class, duration, seed, composite, composite_duration, as_json):
    """Generate a synthetic labeled dataset (or one composite video)."""
    spec = synth.SynthSpec(n_per_class=n_per_class, duration_sec=duration, seed=seed)
    config = {"out": out, "n_per_class": n_per_class, "duration": duration, "seed": seed,
              "composite": composite, "composite_duration": composite_duration}
    if composite:
        intervals = []
        for part in composite.split(","):
            a, b = part.split("-")
            intervals.append((float(a), float(b)))
        os.makedirs(out, exist_ok=True)
        video, truth = synth.generate_composite(
            spec, intervals, os.path.join(out, "composite.avi"), duration_sec=composite_duration
        )
        _emit(as_json, config, {"video": video, "truth": truth})
    else:
        written = synth.generate(spec, out)
        _emit(as_json, config, {"written": {k: len(v) for k, v in written.items()}})


@main.command("preprocess")
@click.option("--root", required=True, type=click.Path(exists=True), help="Class-per-folder dataset root.")
@click.option("--out", required=True, type=click.Path(), help="Output directory for manifest + archive.")
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def preprocess_cmd(root, out, as_json):
    """Build a manifest and decode every clip into a tensor archive."""
    config = {"root": root, "out": out}
    os.makedirs(out, exist_ok=True)
    manifest = data.build_manifest(root)
    archive = os.path.join(out, "clips.clpa")
    data.preprocess_manifest(manifest, archive)
    manifest_path = manifest.save(os.path.join(out, "manifest.jsonl"))
    per_class = {name: sum(1 for e in manifest.entries if e.class_name == name)
                 for name in data.CLASSES_LIST}
    _emit(as_json, config, {
        "manifest": manifest_path,
        "archive": archive,
        "entries": per_class,
        "skipped": len(manifest.skipped),
    })


@main.command("split")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--fractions", default="0.72,0.08,0.20", show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Output manifest path (defaults to rewriting in place).")
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def split_cmd(manifest_path, seed, fractions, out_path, as_json):
    """Assign the stratified train/val/test split."""
    fracs = tuple(float(x) for x in fractions.split(","))
    if len(fracs) != 3:
        raise click.UsageError("--fractions needs three comma-separated numbers")
    config = {"manifest": manifest_path, "seed": seed, "fractions": list(fracs)}
    manifest = data.DatasetManifest.load(manifest_path)
    try:
        split = data.split_manifest(manifest, fractions=fracs, seed=seed)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    out_path = out_path or manifest_path
    split.save(out_path)
    counts = {s: len(split.by_split(s)) for s in data.SPLIT_NAMES}
    _emit(as_json, config, {"manifest": out_path, "splits": counts})


@main.command("train")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--archive", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--epochs", default=50, show_default=True)
@click.option("--batch-size", default=8, show_default=True)
@click.option("--lr", default=0.01, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--dropout", default=0.0, show_default=True,
              help="Dropout rate; keep 0 for from-scratch desk-scale runs.")
@click.option("--plots", is_flag=True, help="Also render loss/accuracy PNGs.")
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def train_cmd(manifest_path, archive, out_dir, epochs, batch_size, lr, seed, dropout, plots, as_json):
    """Train the classifier on the archive's train/val splits."""
    tcfg = TrainConfig(max_epochs=epochs, batch_size=batch_size, initial_lr=lr, seed=seed)
    model_cfg = nn.ModelConfig(dropout_rate=dropout)
    manifest = data.DatasetManifest.load(manifest_path)
    train_set = data.load_split(manifest, archive, "train")
    val_set = data.load_split(manifest, archive, "val")
    params = nn.init_params(model_cfg, seed=seed)
    model_cfg = nn.calibrate_gains(params, model_cfg, train_set[0][:32])
    config = {"manifest": manifest_path, "archive": archive, "out_dir": out_dir,
              "model": model_cfg.to_dict(), "train": tcfg.to_dict()}
    best, history = train(model_cfg, params, train_set, val_set, tcfg)
    os.makedirs(out_dir, exist_ok=True)
    ckpt_path = os.path.join(out_dir, "model.ckpt")
    nn.save_checkpoint(best, model_cfg, ckpt_path)
    curve_paths = ev.export_curves(history, out_dir, plots=plots)
    last = history.records[-1]
    _emit(as_json, config, {
        "checkpoint": ckpt_path,
        "curves": curve_paths,
        "epochs_run": len(history.records),
        "stopped_early": history.stopped_early,
        "best_epoch": history.best_epoch,
        "final_val_accuracy": last.val_accuracy,
        "final_val_loss": last.val_loss,
    })


@main.command("evaluate")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--archive", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--split", default="test", show_default=True,
              type=click.Choice(data.SPLIT_NAMES))
@click.option("--out", "out_path", default=None, type=click.Path(), help="Metrics JSON path.")
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def evaluate_cmd(manifest_path, archive, checkpoint, split, out_path, as_json):
    """Confusion matrix and metrics on a labeled split."""
    config = {"manifest": manifest_path, "archive": archive,
              "checkpoint": checkpoint, "split": split}
    params, model_cfg = nn.load_checkpoint(checkpoint)
    manifest = data.DatasetManifest.load(manifest_path)
    clips, labels = data.load_split(manifest, archive, split)
    cm, report = ev.evaluate_model(params, clips, labels, model_cfg)
    doc = {
        "split": split,
        "counts": {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn},
        "metrics": report.to_dict(),
    }
    if out_path:
        with open(out_path, "w") as fh:
            json.dump(doc, fh, indent=2)
    if not as_json:
        click.echo(cm.as_table())
    _emit(as_json, config, {"report": doc, "out": out_path})


@main.command("score")
@click.option("--video", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--stride", default=hl.DEFAULT_STRIDE, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def score_cmd(video, checkpoint, out_path, stride, as_json):
    """Per-window violence probabilities over a full video."""
    config = {"video": video, "checkpoint": checkpoint, "stride": stride}
    params, model_cfg = hl.load_scorer(checkpoint)
    meta = probe_video(video)
    scores = hl.score_video(video, params, model_cfg, stride_frames=stride, meta=meta)
    doc = {
        "video_id": meta.source_id,
        "duration_sec": meta.duration_sec,
        "stride_frames": stride,
        "checkpoint_id": nn.checkpoint_id(checkpoint),
        "scores": [
            {"start_frame": s.start_frame, "end_frame": s.end_frame,
             "start_sec": s.start_sec, "end_sec": s.end_sec, "p_violence": s.p_violence}
            for s in scores
        ],
    }
    with open(out_path, "w") as fh:
        json.dump(doc, fh)
    _emit(as_json, config, {"out": out_path, "windows": len(scores)})


@main.command("highlight")
@click.option("--video", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--threshold", default=hl.DEFAULT_THRESHOLD, show_default=True)
@click.option("--stride", default=hl.DEFAULT_STRIDE, show_default=True)
@click.option("--max-gap", default=hl.DEFAULT_MAX_GAP_SEC, show_default=True)
@click.option("--min-len", default=hl.DEFAULT_MIN_LEN_SEC, show_default=True)
@click.option("--no-render", is_flag=True, help="Write the plan only.")
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def highlight_cmd(video, checkpoint, out_dir, threshold, stride, max_gap, min_len, no_render, as_json):
    """Score, merge violent segments and render the highlight reel."""
    config = {"video": video, "checkpoint": checkpoint, "out_dir": out_dir,
              "threshold": threshold, "stride": stride,
              "max_gap_sec": max_gap, "min_len_sec": min_len}
    params, model_cfg = hl.load_scorer(checkpoint)
    meta = probe_video(video)
    scores = hl.score_video(video, params, model_cfg, stride_frames=stride, meta=meta)
    plan = hl.build_plan(
        source_id=meta.source_id, scores=scores, threshold=threshold,
        stride_frames=stride, max_gap_sec=max_gap, min_len_sec=min_len,
        checkpoint_id=nn.checkpoint_id(checkpoint),
    )
    os.makedirs(out_dir, exist_ok=True)
    plan_path = hl.export_plan(plan, os.path.join(out_dir, "plan.json"))
    summary = {
        "plan": plan_path,
        "segments": [[s.start_sec, s.end_sec] for s in plan.segments],
        "total_sec": plan.total_sec,
    }
    if plan.segments and not no_render:
        out_video = os.path.join(out_dir, "highlight.avi")
        hl.render_highlight(plan, video, out_video)
        summary["video"] = out_video
    _emit(as_json, config, summary)


@main.command("serve")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--port", default=None, type=int, help="Override the configured port.")
@_domain_errors
def serve_cmd(config_path, port):
    """Run the HTTP job service."""
    cfg = load_service_config(config_path)
    if port is not None:
        from dataclasses import replace

        cfg = replace(cfg, port=port)
    click.echo(f"config: {json.dumps(cfg.to_dict(), sort_keys=True)}")
    run_service(cfg)


if __name__ == "__main__":
    main()
