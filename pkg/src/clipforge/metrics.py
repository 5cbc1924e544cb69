"""Confusion matrix, derived metrics, model evaluation and curve exports.

Positive class is Violence (index 1). Ratios with a zero denominator come
back as 0.0 and are listed in the report's `undefined` set; F1 is 0.0 when
precision + sensitivity is 0.
"""

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import BadLabel, EmptyHistory, EmptyMatrix, EmptySplit, LengthMismatch
from .labels import onehot
from .train import categorical_crossentropy, predict_probs

CURVE_COLUMNS = ("epoch", "loss", "accuracy", "val_loss", "val_accuracy", "lr")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    def as_table(self):
        """2x2 text table, actual classes as rows."""
        rows = [
            ("", "pred:NonViolence", "pred:Violence"),
            ("true:NonViolence", str(self.tn), str(self.fp)),
            ("true:Violence", str(self.fn), str(self.tp)),
        ]
        widths = [max(len(r[c]) for r in rows) for c in range(3)]
        return "\n".join("  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in rows)


@dataclass(frozen=True)
class MetricsReport:
    sensitivity: float
    specificity: float
    accuracy: float
    precision: float
    f1: float
    loss: float = None
    undefined: tuple = ()

    def to_dict(self):
        d = {
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "f1": self.f1,
            "undefined": list(self.undefined),
        }
        if self.loss is not None:
            d["loss"] = self.loss
        return d


def confusion(predicted, actual):
    """Tally a ConfusionMatrix from 0/1 label arrays (1 = Violence)."""
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if predicted.shape != actual.shape or predicted.ndim != 1 or predicted.size == 0:
        raise LengthMismatch(
            f"predicted {predicted.shape} and actual {actual.shape} must be equal-length 1-d"
        )
    for arr, name in ((predicted, "predicted"), (actual, "actual")):
        bad = ~np.isin(arr, (0, 1))
        if bad.any():
            raise BadLabel(f"{name} contains non-binary label {arr[bad][0]!r}")
    tp = int(np.sum((predicted == 1) & (actual == 1)))
    tn = int(np.sum((predicted == 0) & (actual == 0)))
    fp = int(np.sum((predicted == 1) & (actual == 0)))
    fn = int(np.sum((predicted == 0) & (actual == 1)))
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def _ratio(num, den, name, undefined):
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def metrics(cm, loss=None):
    """Sensitivity, specificity, accuracy, precision and F1 from counts."""
    if cm.total < 1:
        raise EmptyMatrix("confusion matrix has no samples")
    undefined = []
    se = _ratio(cm.tp, cm.tp + cm.fn, "sensitivity", undefined)
    sp = _ratio(cm.tn, cm.tn + cm.fp, "specificity", undefined)
    acc = (cm.tn + cm.tp) / cm.total
    pe = _ratio(cm.tp, cm.tp + cm.fp, "precision", undefined)
    if pe + se == 0:
        f1 = 0.0
        undefined.append("f1")
    else:
        f1 = 2.0 * pe * se / (pe + se)
    return MetricsReport(
        sensitivity=se,
        specificity=sp,
        accuracy=acc,
        precision=pe,
        f1=f1,
        loss=loss,
        undefined=tuple(undefined),
    )


def evaluate_model(params, clips, labels, config, batch_size=32):
    """Eval-mode argmax predictions over a labeled split.

    Returns (ConfusionMatrix, MetricsReport with mean cross-entropy loss).
    Ties in the class probabilities resolve to NonViolence (argmax takes the
    first maximum).
    """
    if len(clips) == 0:
        raise EmptySplit("cannot evaluate an empty split")
    labels = np.asarray(labels, dtype=np.int64)
    probs = predict_probs(params, clips, config, batch_size=batch_size)
    predicted = probs.argmax(axis=1)
    cm = confusion(predicted, labels)
    loss = categorical_crossentropy(probs, onehot(labels, config.num_classes))
    return cm, metrics(cm, loss=loss)


def export_curves(history, out_dir, plots=False):
    """Write history.csv / history.json (and optional PNG plots); returns paths."""
    if not history.records:
        raise EmptyHistory("history has no epoch records")
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    csv_path = os.path.join(out_dir, "history.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for r in history.records:
            writer.writerow([repr(getattr(r, c)) if c != "epoch" else r.epoch for c in CURVE_COLUMNS])
    paths["csv"] = csv_path

    json_path = os.path.join(out_dir, "history.json")
    with open(json_path, "w") as fh:
        json.dump(history.to_dict(), fh, indent=2)
    paths["json"] = json_path

    if plots:
        paths.update(_render_plots(history, out_dir))
    return paths


def _render_plots(history, out_dir):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    epochs = [r.epoch for r in history.records]
    out = {}
    for kind, series in (
        ("loss", [("loss", "loss"), ("val_loss", "val loss")]),
        ("accuracy", [("accuracy", "accuracy"), ("val_accuracy", "val accuracy")]),
    ):
        fig, ax = plt.subplots(figsize=(6, 4))
        for attr, label in series:
            ax.plot(epochs, [getattr(r, attr) for r in history.records], label=label)
        ax.set_xlabel("epoch")
        ax.set_ylabel(kind)
        ax.legend()
        fig.tight_layout()
        path = os.path.join(out_dir, f"{kind}.png")
        fig.savefig(path)
        plt.close(fig)
        out[kind] = path
    return out


def parse_curves_csv(path):
    """Read history.csv back into row dicts (floats except epoch)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for row in reader:
            parsed = {"epoch": int(row["epoch"])}
            for key in CURVE_COLUMNS[1:]:
                parsed[key] = float(row[key])
            rows.append(parsed)
    return rows
