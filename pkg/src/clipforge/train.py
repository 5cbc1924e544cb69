"""Deterministic SGD training with early stopping and LR-plateau reduction.

Per epoch: seeded shuffle, minibatch SGD on cross-entropy, validation pass,
then the plateau callback (monitors val_loss, scales lr by plateau_factor
down to min_lr) and the early stopper (monitors val_accuracy, snapshots the
best weights and halts after a patience budget, restoring the snapshot).
Improvement means beating the best by more than 1e-4 in the watched metric.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptySplit, NonFiniteLoss, ShapeMismatch
from .labels import onehot
from .nn.ops import cross_entropy, loss_and_grads, model_forward

MIN_DELTA = 1e-4


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 50
    batch_size: int = 8
    initial_lr: float = 0.01
    plateau_factor: float = 0.6
    plateau_patience: int = 5
    min_lr: float = 0.00005
    earlystop_patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.plateau_factor < 1.0:
            raise ValueError("plateau_factor must be in (0, 1)")
        if self.min_lr <= 0:
            raise ValueError("min_lr must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")

    def to_dict(self):
        return {k: getattr(self, k) for k in (
            "max_epochs", "batch_size", "initial_lr", "plateau_factor",
            "plateau_patience", "min_lr", "earlystop_patience", "seed")}


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    accuracy: float
    val_loss: float
    val_accuracy: float
    lr: float


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)
    stopped_early: bool = False
    best_epoch: int = 0
    restored_best: bool = False

    def to_dict(self):
        return {
            "records": [r.__dict__ for r in self.records],
            "stopped_early": self.stopped_early,
            "best_epoch": self.best_epoch,
            "restored_best": self.restored_best,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            records=[EpochRecord(**r) for r in d["records"]],
            stopped_early=d["stopped_early"],
            best_epoch=d["best_epoch"],
            restored_best=d["restored_best"],
        )


def categorical_crossentropy(probs, target_onehot):
    """Mean over the batch of -sum_k y_k log(max(p_k, 1e-7))."""
    probs = np.asarray(probs)
    target_onehot = np.asarray(target_onehot)
    if probs.shape != target_onehot.shape or probs.ndim != 2:
        raise ShapeMismatch(f"probs {probs.shape} vs labels {target_onehot.shape}")
    return cross_entropy(probs, target_onehot)


def sgd_update(params, grads, lr):
    """p <- p - lr * g for trainable tensors only; mutates and returns params."""
    for name, g in grads.items():
        if not params.trainable.get(name, False):
            raise ShapeMismatch(f"gradient for non-trainable tensor {name!r}")
        t = params.tensors[name]
        if t.shape != g.shape:
            raise ShapeMismatch(f"{name}: grad {g.shape} vs tensor {t.shape}")
        t -= lr * g
    return params


@dataclass(frozen=True)
class PlateauState:
    lr: float
    factor: float = 0.6
    patience: int = 5
    min_lr: float = 0.00005
    best: float = math.inf
    wait: int = 0


def plateau_step(state, val_loss):
    """Feed one epoch's val_loss; returns (lr for the next epoch, new state)."""
    if val_loss < state.best - MIN_DELTA:
        state = replace(state, best=val_loss, wait=0)
    else:
        wait = state.wait + 1
        if wait >= state.patience:
            state = replace(state, lr=max(state.lr * state.factor, state.min_lr), wait=0)
        else:
            state = replace(state, wait=wait)
    return state.lr, state


@dataclass
class EarlyStopState:
    patience: int = 10
    best: float = -math.inf
    wait: int = 0
    epoch: int = 0
    best_epoch: int = 0
    best_snapshot: object = None


def earlystop_step(state, val_accuracy, params):
    """Feed one epoch's val_accuracy; returns (stop, new state).

    Snapshots params on improvement so the best weights can be restored.
    """
    state = replace(state)
    state.epoch += 1
    if val_accuracy > state.best + MIN_DELTA:
        state.best = val_accuracy
        state.wait = 0
        state.best_epoch = state.epoch
        state.best_snapshot = params.copy()
        return False, state
    state.wait += 1
    return state.wait >= state.patience, state


def predict_probs(params, clips, config, batch_size=32):
    """Eval-mode class probabilities over an array of clips."""
    outs = []
    for lo in range(0, len(clips), batch_size):
        outs.append(model_forward(clips[lo : lo + batch_size], params, config, mode="eval"))
    return np.concatenate(outs, axis=0)


def train(config, params, train_set, val_set, tcfg):
    """Fit the model; returns (best params, TrainHistory).

    The caller's params are not mutated; training runs on a copy and the
    early stopper's best snapshot is returned.
    """
    train_clips, train_labels = train_set
    val_clips, val_labels = val_set
    if len(train_clips) == 0:
        raise EmptySplit("train split is empty")
    if len(val_clips) == 0:
        raise EmptySplit("val split is empty")
    train_labels = np.asarray(train_labels, dtype=np.int64)
    val_labels = np.asarray(val_labels, dtype=np.int64)
    val_onehot = onehot(val_labels, config.num_classes)

    work = params.copy()
    shuffle_rng, dropout_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(tcfg.seed).spawn(2)
    )
    lr = tcfg.initial_lr
    pstate = PlateauState(
        lr=lr, factor=tcfg.plateau_factor, patience=tcfg.plateau_patience, min_lr=tcfg.min_lr
    )
    estate = EarlyStopState(patience=tcfg.earlystop_patience)
    history = TrainHistory()
    n = len(train_clips)

    for epoch in range(1, tcfg.max_epochs + 1):
        perm = shuffle_rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        for lo in range(0, n, tcfg.batch_size):
            idx = perm[lo : lo + tcfg.batch_size]
            xb = train_clips[idx]
            yb = onehot(train_labels[idx], config.num_classes)
            probs, loss, grads = loss_and_grads(work, xb, yb, config, rng=dropout_rng)
            if not math.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss} at epoch {epoch}")
            sgd_update(work, grads, lr)
            loss_sum += loss * len(idx)
            correct += int((probs.argmax(axis=1) == train_labels[idx]).sum())
        val_probs = predict_probs(work, val_clips, config)
        val_loss = categorical_crossentropy(val_probs, val_onehot)
        if not math.isfinite(val_loss):
            raise NonFiniteLoss(f"validation loss became {val_loss} at epoch {epoch}")
        val_acc = float((val_probs.argmax(axis=1) == val_labels).mean())
        history.records.append(
            EpochRecord(
                epoch=epoch,
                loss=loss_sum / n,
                accuracy=correct / n,
                val_loss=val_loss,
                val_accuracy=val_acc,
                lr=lr,
            )
        )
        lr, pstate = plateau_step(pstate, val_loss)
        stop, estate = earlystop_step(estate, val_acc, work)
        if stop:
            history.stopped_early = True
            break

    history.best_epoch = estate.best_epoch
    if estate.best_snapshot is not None:
        history.restored_best = True
        return estate.best_snapshot, history
    return work, history
