"""Trainer: loss/SGD ops, callback state machines (vs straight-line oracles),
and the end-to-end loop mechanics on a tiny model."""

import math

import numpy as np
import pytest

from clipforge import nn
from clipforge.errors import EmptySplit, ShapeMismatch
from clipforge.train import (
    EarlyStopState,
    PlateauState,
    TrainConfig,
    TrainHistory,
    categorical_crossentropy,
    earlystop_step,
    plateau_step,
    sgd_update,
    train,
)

LN2 = 0.6931471805599453


def test_crossentropy_examples():
    perfect = categorical_crossentropy(np.array([[0.0, 1.0]]), np.array([[0.0, 1.0]]))
    assert 0.0 <= perfect <= 1.2e-7
    uniform = categorical_crossentropy(np.array([[0.5, 0.5]]), np.array([[1.0, 0.0]]))
    assert abs(uniform - LN2) < 1e-12
    both = categorical_crossentropy(
        np.array([[0.0, 1.0], [0.5, 0.5]]), np.array([[0.0, 1.0], [1.0, 0.0]])
    )
    assert abs(both - LN2 / 2) < 1.2e-7


def test_crossentropy_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        categorical_crossentropy(np.zeros((2, 2)), np.zeros((3, 2)))


def _one_tensor_params(value=2.0, trainable=True):
    return nn.ModelParams(
        {"w": np.full((3,), value, dtype=np.float32)}, {"w": trainable}
    )


def test_sgd_update_examples():
    p = _one_tensor_params(2.0)
    sgd_update(p, {"w": np.full((3,), 0.5, dtype=np.float32)}, 0.1)
    np.testing.assert_allclose(p.tensors["w"], 1.95, rtol=1e-6)

    p = _one_tensor_params(2.0)
    before = p.tensors["w"].copy()
    sgd_update(p, {"w": np.full((3,), 0.5, dtype=np.float32)}, 0.0)
    np.testing.assert_array_equal(p.tensors["w"], before)

    frozen = _one_tensor_params(2.0, trainable=False)
    with pytest.raises(ShapeMismatch):
        sgd_update(frozen, {"w": np.ones(3, dtype=np.float32)}, 0.1)


def _run_plateau(seq, lr0=0.01, factor=0.6, patience=5, min_lr=0.00005):
    state = PlateauState(lr=lr0, factor=factor, patience=patience, min_lr=min_lr)
    effective = []
    lr = lr0
    for v in seq:
        effective.append(lr)
        lr, state = plateau_step(state, v)
    return effective


def test_plateau_never_reduces_when_improving():
    seq = [1.0 - 0.01 * i for i in range(20)]
    assert _run_plateau(seq) == [0.01] * 20


def test_plateau_hand_simulated_sequence():
    # flat val_loss: counter hits patience at epoch 6, epoch 7 runs at 0.006
    seq = [1.0] * 10
    expected = [0.01] * 6 + [0.006] * 4
    got = _run_plateau(seq)
    assert all(abs(a - b) < 1e-12 for a, b in zip(got, expected))


def test_plateau_floors_at_min_lr():
    seq = [1.0] * 400
    lrs = _run_plateau(seq)
    assert min(lrs) == 0.00005
    assert lrs[-1] == 0.00005
    assert all(b <= a for a, b in zip(lrs, lrs[1:]))  # non-increasing


class _Snap:
    """Stand-in for ModelParams: copy() captures an identity."""

    def __init__(self, tag):
        self.tag = tag

    def copy(self):
        return _Snap(self.tag)


def _run_early(seq, patience=10):
    state = EarlyStopState(patience=patience)
    stop_epoch = None
    for epoch, v in enumerate(seq, 1):
        stop, state = earlystop_step(state, v, _Snap(epoch))
        if stop:
            stop_epoch = epoch
            break
    return stop_epoch, state


def test_earlystop_never_stops_when_improving():
    seq = [0.5 + 0.01 * i for i in range(30)]
    stop_epoch, state = _run_early(seq)
    assert stop_epoch is None
    assert state.best_epoch == 30


def test_earlystop_hand_simulated_flat_sequence():
    seq = [0.9] * 30
    stop_epoch, state = _run_early(seq)
    assert stop_epoch == 11
    assert state.best_epoch == 1
    assert state.best_snapshot.tag == 1


def test_callbacks_match_straightline_simulation():
    gen = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(gen.integers(1, 60))
        values = np.round(gen.random(n), 3).tolist()
        patience = int(gen.integers(1, 6))
        factor = float(gen.uniform(0.3, 0.9))

        # plateau oracle: straight-line replay of the stated rule
        lr, best, wait, oracle_lrs = 0.01, math.inf, 0, []
        for v in values:
            oracle_lrs.append(lr)
            if v < best - 1e-4:
                best, wait = v, 0
            else:
                wait += 1
                if wait >= patience:
                    lr = max(lr * factor, 0.00005)
                    wait = 0
        got = _run_plateau(values, lr0=0.01, factor=factor, patience=patience)
        assert got == oracle_lrs

        # early-stop oracle
        best, wait, best_epoch, stop_at = -math.inf, 0, 0, None
        for epoch, v in enumerate(values, 1):
            if v > best + 1e-4:
                best, wait, best_epoch = v, 0, epoch
            else:
                wait += 1
                if wait >= patience:
                    stop_at = epoch
                    break
        got_stop, state = _run_early(values, patience=patience)
        assert got_stop == stop_at
        assert state.best_epoch == best_epoch
        if best_epoch:
            assert state.best_snapshot.tag == best_epoch


def _tiny_dataset(n_train=16, n_val=8, seed=0):
    cfg = nn.tiny_config(dropout_rate=0.2)
    gen = np.random.default_rng(seed)
    tr = gen.random((n_train, cfg.seq_len, cfg.image_h, cfg.image_w, 3), dtype=np.float32)
    trl = gen.integers(0, 2, n_train)
    va = gen.random((n_val, cfg.seq_len, cfg.image_h, cfg.image_w, 3), dtype=np.float32)
    val = gen.integers(0, 2, n_val)
    return cfg, (tr, trl), (va, val)


def test_train_loop_mechanics_and_determinism():
    cfg, tr, va = _tiny_dataset()
    tcfg = TrainConfig(max_epochs=6, batch_size=4, seed=11)

    def run():
        params = nn.init_params(cfg, seed=5)
        return train(cfg, params, tr, va, tcfg)

    best1, hist1 = run()
    best2, hist2 = run()
    assert len(hist1.records) <= tcfg.max_epochs
    assert hist1.to_dict() == hist2.to_dict()
    assert best1.equals(best2)
    lrs = [r.lr for r in hist1.records]
    assert all(b <= a for a, b in zip(lrs, lrs[1:]))
    assert min(lrs) >= tcfg.min_lr
    for r in hist1.records:
        assert 0.0 <= r.accuracy <= 1.0 and 0.0 <= r.val_accuracy <= 1.0
        assert r.loss >= 0.0 and r.val_loss >= 0.0
    if hist1.best_epoch:
        accs = [r.val_accuracy for r in hist1.records]
        assert accs[hist1.best_epoch - 1] == max(accs[: hist1.best_epoch + 1])


def test_train_does_not_mutate_caller_params_and_respects_freeze():
    cfg = nn.ModelConfig(
        seq_len=2, image_h=8, image_w=8,
        encoder=nn.EncoderSpec(stem_channels=2, block_channels=(4,), freeze_boundary=1),
        lstm_units=3, dense_units=(5,), dropout_rate=0.0,
    )
    gen = np.random.default_rng(3)
    tr = (gen.random((8, 2, 8, 8, 3), dtype=np.float32), gen.integers(0, 2, 8))
    va = (gen.random((4, 2, 8, 8, 3), dtype=np.float32), gen.integers(0, 2, 4))
    params = nn.init_params(cfg, seed=1)
    before = params.copy()
    best, hist = train(cfg, params, tr, va, TrainConfig(max_epochs=3, batch_size=4, seed=0))
    assert params.equals(before)  # caller's copy untouched
    # frozen stem identical in the trained result
    np.testing.assert_array_equal(best.tensors["enc.stem.w"], before.tensors["enc.stem.w"])
    assert not best.equals(before)  # but something did train


def test_train_empty_split_raises():
    cfg, tr, va = _tiny_dataset()
    empty = (tr[0][:0], tr[1][:0])
    with pytest.raises(EmptySplit):
        train(cfg, nn.init_params(cfg, seed=0), empty, va, TrainConfig(max_epochs=1))
    with pytest.raises(EmptySplit):
        train(cfg, nn.init_params(cfg, seed=0), tr, empty, TrainConfig(max_epochs=1))


def test_history_roundtrip():
    hist = TrainHistory(
        records=[],
        stopped_early=True,
        best_epoch=3,
        restored_best=True,
    )
    assert TrainHistory.from_dict(hist.to_dict()).to_dict() == hist.to_dict()
