"""Forward and backward passes of the clip classifier.

Data flow: per-frame encoder (shared weights across time) -> feature dropout
-> bidirectional LSTM -> dense head with dropout -> softmax. Backward is
manual backprop; gradients are produced only for trainable tensors.

All stochastic behaviour (dropout) draws from an explicit generator in a fixed
order: feature mask first, then head masks layer by layer.
"""

import numpy as np

from .. import kernels
from ..errors import ShapeMismatch
from .params import GATE_NAMES, head_view, lstm_cell

LOG_CLIP = 1e-7


def _relu(x):
    return np.maximum(x, 0.0)


def _sigmoid_vec(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def softmax(logits):
    """Row-wise stable softmax."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs, onehot):
    """Mean over rows of -sum(y * log(max(p, 1e-7)))."""
    p = np.maximum(probs, LOG_CLIP)
    return float(-(onehot * np.log(p)).sum(axis=-1).mean())


def _dropout_mask(rng, shape, rate, dtype):
    keep = (rng.random(shape) >= rate).astype(dtype)
    return keep / dtype.type(1.0 - rate)


# ---------------------------------------------------------------- encoder

def _encoder_fwd(x, params, config):
    """x: (M, H, W, 3) -> (feats (M, D), cache).

    Per stage: conv/relu activations scaled by the stage's fixed gain; pooled
    features scaled by feature_gain. Cached activations are pre-gain.
    """
    k = kernels.get()
    t = params.tensors
    gains = config.encoder.stage_gains
    dt = x.dtype.type
    cache = {"x": x}
    stem_a = _relu(k.conv2d_forward(x, t["enc.stem.w"], t["enc.stem.b"], 2, 1))
    cache["stem_a"] = stem_a
    y = stem_a * dt(gains[0])
    blocks = []
    for i in range(len(config.encoder.block_channels)):
        dw_a = _relu(k.dwconv2d_forward(y, t[f"enc.block{i}.dw_w"], t[f"enc.block{i}.dw_b"], 2, 1))
        m, hh, ww, cin = dw_a.shape
        pw_a = _relu(dw_a.reshape(-1, cin) @ t[f"enc.block{i}.pw_w"] + t[f"enc.block{i}.pw_b"])
        pw_a = pw_a.reshape(m, hh, ww, -1)
        blocks.append({"x": y, "dw_a": dw_a, "pw_a": pw_a})
        y = pw_a * dt(gains[i + 1])
    cache["blocks"] = blocks
    m, hh, ww, d = y.shape
    cache["pool_hw"] = (hh, ww)
    feats = y.mean(axis=(1, 2)) * dt(config.encoder.feature_gain)
    return feats, cache


def _encoder_bwd(dfeats, cache, params, config, grads):
    k = kernels.get()
    t = params.tensors
    gains = config.encoder.stage_gains
    dt = dfeats.dtype.type
    hh, ww = cache["pool_hw"]
    m, d = dfeats.shape
    scale = dt(config.encoder.feature_gain) / (hh * ww)
    dy = np.broadcast_to(dfeats[:, None, None, :] * scale, (m, hh, ww, d)).astype(dfeats.dtype)
    for i in range(len(config.encoder.block_channels) - 1, -1, -1):
        blk = cache["blocks"][i]
        dw_a, pw_a = blk["dw_a"], blk["pw_a"]
        d_pw = (dy * dt(gains[i + 1]) * (pw_a > 0)).reshape(-1, pw_a.shape[-1])
        a2d = dw_a.reshape(-1, dw_a.shape[-1])
        _put(grads, params, f"enc.block{i}.pw_w", a2d.T @ d_pw)
        _put(grads, params, f"enc.block{i}.pw_b", d_pw.sum(axis=0))
        d_dw_a = (d_pw @ t[f"enc.block{i}.pw_w"].T).reshape(dw_a.shape)
        d_dw = d_dw_a * (dw_a > 0)
        dx, dw, db = k.dwconv2d_backward(d_dw, blk["x"], t[f"enc.block{i}.dw_w"], 2, 1, True)
        _put(grads, params, f"enc.block{i}.dw_w", dw)
        _put(grads, params, f"enc.block{i}.dw_b", db)
        dy = dx
    d_stem = dy * dt(gains[0]) * (cache["stem_a"] > 0)
    _, dw, db = k.conv2d_backward(d_stem, cache["x"], t["enc.stem.w"], 2, 1, False)
    _put(grads, params, "enc.stem.w", dw)
    _put(grads, params, "enc.stem.b", db)


def _put(grads, params, name, value):
    if params.trainable[name]:
        grads[name] = value


# ---------------------------------------------------------------- BiLSTM

def _bilstm_fwd(feats, cells):
    """feats: (B, T, D), cells: {"fwd": LSTMCellParams, "bwd": ...} -> (clip_out (B, 2H), cache)."""
    k = kernels.get()
    b, t_len, d = feats.shape
    cache = {"feats": feats}
    outs = []
    for direction in ("fwd", "bwd"):
        cell = cells[direction]
        wx, u, bias = cell.fused()
        seq = feats if direction == "fwd" else np.ascontiguousarray(feats[:, ::-1])
        xp = np.ascontiguousarray(np.swapaxes(seq @ wx + bias, 0, 1))
        h0 = np.zeros((b, cell.hidden_size), dtype=feats.dtype)
        c0 = np.zeros_like(h0)
        h, c, gates = k.lstm_seq_forward(xp, u, h0, c0)
        cache[direction] = {"wx": wx, "u": u, "h": h, "c": c, "gates": gates, "h0": h0, "c0": c0}
        outs.append(h[-1])
    return np.concatenate(outs, axis=1), cache


def _bilstm_bwd(dout, cache, params, grads):
    k = kernels.get()
    feats = cache["feats"]
    b, t_len, d = feats.shape
    hsz = dout.shape[1] // 2
    dfeats = np.zeros_like(feats)
    for idx, direction in enumerate(("fwd", "bwd")):
        dc = cache[direction]
        dh_out = np.zeros((t_len, b, hsz), dtype=feats.dtype)
        dh_out[-1] = dout[:, idx * hsz : (idx + 1) * hsz]
        dxp, du = k.lstm_seq_backward(dh_out, dc["u"], dc["h"], dc["c"], dc["gates"], dc["h0"], dc["c0"])
        dxp_bt = np.swapaxes(dxp, 0, 1)  # (B, T, 4H)
        seq = feats if direction == "fwd" else np.ascontiguousarray(feats[:, ::-1])
        dwx = seq.reshape(b * t_len, d).T @ dxp_bt.reshape(b * t_len, 4 * hsz)
        db = dxp_bt.sum(axis=(0, 1))
        dseq = dxp_bt @ dc["wx"].T
        dfeats += dseq if direction == "fwd" else dseq[:, ::-1]
        for gi, gate in enumerate(GATE_NAMES):
            sl = slice(gi * hsz, (gi + 1) * hsz)
            _put(grads, params, f"lstm.{direction}.w_{gate}", dwx[:, sl].T)
            _put(grads, params, f"lstm.{direction}.u_{gate}", du[:, sl].T)
            _put(grads, params, f"lstm.{direction}.b_{gate}", db[sl])
    return dfeats


# ---------------------------------------------------------------- head

def _head_fwd(x, head, rate, mode, rng):
    a = x
    layers = []
    drop = mode == "train" and rate > 0.0
    for w, bias in head.dense:
        z = a @ w + bias
        act = _relu(z)
        mask = _dropout_mask(rng, act.shape, rate, act.dtype) if drop else None
        layers.append({"x": a, "act": act, "mask": mask})
        a = act * mask if drop else act
    logits = a @ head.out_w + head.out_b
    probs = softmax(logits)
    return probs, {"layers": layers, "out_x": a, "probs": probs}


def _head_bwd(dlogits, cache, head, params, grads):
    _put(grads, params, "head.out.w", cache["out_x"].T @ dlogits)
    _put(grads, params, "head.out.b", dlogits.sum(axis=0))
    da = dlogits @ head.out_w.T
    for idx in range(len(head.dense) - 1, -1, -1):
        layer = cache["layers"][idx]
        if layer["mask"] is not None:
            da = da * layer["mask"]
        dz = da * (layer["act"] > 0)
        _put(grads, params, f"head.dense{idx}.w", layer["x"].T @ dz)
        _put(grads, params, f"head.dense{idx}.b", dz.sum(axis=0))
        da = dz @ head.dense[idx][0].T
    return da


# ---------------------------------------------------------------- public ops

def encoder_forward(frames, params, config, mode="eval"):
    """Apply the shared frame encoder across time: (T, H, W, 3) -> (T, D)."""
    frames = np.asarray(frames, dtype=params.dtype)
    if frames.ndim != 4 or frames.shape[1:] != (config.image_h, config.image_w, 3):
        raise ShapeMismatch(
            f"expected (T, {config.image_h}, {config.image_w}, 3), got {frames.shape}"
        )
    feats, _ = _encoder_fwd(np.ascontiguousarray(frames), params, config)
    return feats


def lstm_cell_step(x_t, h_prev, c_prev, cell):
    """One LSTM step on vectors: returns (h_t, c_t)."""
    x_t, h_prev, c_prev = (np.asarray(a) for a in (x_t, h_prev, c_prev))
    if x_t.shape != (cell.input_size,) or h_prev.shape != (cell.hidden_size,):
        raise ShapeMismatch(
            f"x_t {x_t.shape} / h_prev {h_prev.shape} inconsistent with "
            f"(D={cell.input_size}, H={cell.hidden_size})"
        )
    i = _sigmoid_vec(cell.w_i @ x_t + cell.u_i @ h_prev + cell.b_i)
    f = _sigmoid_vec(cell.w_f @ x_t + cell.u_f @ h_prev + cell.b_f)
    g = np.tanh(cell.w_g @ x_t + cell.u_g @ h_prev + cell.b_g)
    o = _sigmoid_vec(cell.w_o @ x_t + cell.u_o @ h_prev + cell.b_o)
    c_t = f * c_prev + i * g
    h_t = o * np.tanh(c_t)
    return h_t, c_t


def bilstm_forward(features, fwd_cell, bwd_cell, mode="sequence"):
    """Run both directions over (T, D) features.

    sequence mode returns (T, 2H) rows [h_t_fwd; h_t_bwd]; clip mode returns
    the (2H,) vector [last forward state; backward state at t=0]. Both
    directions start from zero states; the backward direction consumes the
    sequence in reversed time order with its own parameters.
    """
    features = np.asarray(features)
    if features.ndim != 2:
        raise ShapeMismatch(f"expected (T, D) features, got {features.shape}")
    out, cache = _bilstm_fwd(features[None, :, :], {"fwd": fwd_cell, "bwd": bwd_cell})
    if mode == "clip":
        return out[0]
    hsz = fwd_cell.hidden_size
    t_len = features.shape[0]
    seq = np.empty((t_len, 2 * hsz), dtype=features.dtype)
    seq[:, :hsz] = cache["fwd"]["h"][:, 0, :]
    seq[:, hsz:] = cache["bwd"]["h"][::-1, 0, :]
    return seq


def head_forward(h, head, dropout_rate, mode="eval", rng=None):
    """Dense/ReLU/dropout stack ending in softmax over classes, on one (2H,) vector."""
    h = np.asarray(h)
    if h.ndim != 1:
        raise ShapeMismatch(f"expected a flat hidden vector, got {h.shape}")
    if mode == "train" and dropout_rate > 0.0 and rng is None:
        raise ValueError("train-mode dropout requires an rng")
    probs, _ = _head_fwd(h[None, :], head, dropout_rate, mode, rng)
    return probs[0]


def _check_batch(batch, config, dtype):
    batch = np.ascontiguousarray(batch, dtype=dtype)
    expect = (config.seq_len, config.image_h, config.image_w, 3)
    if batch.ndim != 5 or batch.shape[1:] != expect:
        raise ShapeMismatch(f"expected (B, {expect[0]}, {expect[1]}, {expect[2]}, 3), got {batch.shape}")
    return batch


def _forward(batch, params, config, mode, rng, keep_cache):
    batch = _check_batch(batch, config, params.dtype)
    b = batch.shape[0]
    t_len, d = config.seq_len, config.feature_dim
    x = batch.reshape(b * t_len, config.image_h, config.image_w, 3)
    feats_flat, enc_cache = _encoder_fwd(x, params, config)
    feats = feats_flat.reshape(b, t_len, d)
    drop = mode == "train" and config.dropout_rate > 0.0
    if drop and rng is None:
        raise ValueError("train-mode dropout requires an rng")
    # one mask per clip, shared across time: per-step masks would inject
    # artificial frame-to-frame feature volatility, which is exactly the
    # temporal statistic the classifier relies on
    feat_mask = (
        _dropout_mask(rng, (b, 1, d), config.dropout_rate, feats.dtype) if drop else None
    )
    if feat_mask is not None:
        feats = feats * feat_mask
    cells = {"fwd": lstm_cell(params, "fwd"), "bwd": lstm_cell(params, "bwd")}
    hidden, lstm_cache = _bilstm_fwd(feats, cells)
    probs, head_cache = _head_fwd(hidden, head_view(params, config), config.dropout_rate, mode, rng)
    cache = None
    if keep_cache:
        cache = {
            "enc": enc_cache,
            "feat_mask": feat_mask,
            "lstm": lstm_cache,
            "head": head_cache,
            "b": b,
        }
    return probs, cache


def model_forward(batch, params, config, mode="eval", rng=None):
    """Classify a batch of clips: (B, T, H, W, 3) -> (B, num_classes) probabilities."""
    probs, _ = _forward(batch, params, config, mode, rng, keep_cache=False)
    return probs


def loss_and_grads(params, batch, onehot, config, rng=None, mode="train"):
    """One combined pass: returns (probs, cross-entropy loss, gradient dict).

    Gradients cover exactly the trainable tensors. The loss matches
    trainer.categorical_crossentropy on the returned probabilities.
    """
    onehot = np.asarray(onehot, dtype=params.dtype)
    probs, cache = _forward(batch, params, config, mode, rng, keep_cache=True)
    if onehot.shape != probs.shape:
        raise ShapeMismatch(f"labels {onehot.shape} vs probabilities {probs.shape}")
    loss = cross_entropy(probs, onehot)
    b = cache["b"]
    grads = {}
    dlogits = (probs - onehot) / b
    dhidden = _head_bwd(dlogits, cache["head"], head_view(params, config), params, grads)
    dfeats = _bilstm_bwd(dhidden, cache["lstm"], params, grads)
    if cache["feat_mask"] is not None:
        dfeats = dfeats * cache["feat_mask"]
    t_len, d = config.seq_len, config.feature_dim
    _encoder_bwd(dfeats.reshape(b * t_len, d), cache["enc"], params, config, grads)
    return probs, loss, grads


def model_backward(batch, onehot, params, config, rng=None):
    """Gradient collection for all trainable tensors under cross-entropy loss."""
    _, _, grads = loss_and_grads(params, batch, onehot, config, rng=rng)
    return grads


def calibrate_gains(params, config, probe_clips, stage_target=0.5, feature_target=0.25):
    """Measure stage/feature gains on a probe batch; returns a new ModelConfig.

    Each stage gain is set so the stage's post-activation RMS hits
    stage_target on the probe; feature_gain brings the pooled features to
    feature_target (which also sets the LSTM pre-activation scale, since the
    input projections are fan-in normalized). Weights are untouched, so the
    gradient-to-weight ratio stays at its natural scale for SGD.
    Deterministic in (params, config, probe_clips).
    """
    from dataclasses import replace

    k = kernels.get()
    t = params.tensors
    probe = _check_batch(probe_clips, config, params.dtype)
    x = probe.reshape(-1, config.image_h, config.image_w, 3)
    dt = params.dtype.type

    def rms(a):
        return max(float(np.sqrt(np.mean(np.square(a)))), 1e-12)

    gains = []
    stem_a = _relu(k.conv2d_forward(x, t["enc.stem.w"], t["enc.stem.b"], 2, 1))
    gains.append(stage_target / rms(stem_a))
    y = stem_a * dt(gains[0])
    for i in range(len(config.encoder.block_channels)):
        dw_a = _relu(k.dwconv2d_forward(y, t[f"enc.block{i}.dw_w"], t[f"enc.block{i}.dw_b"], 2, 1))
        m, hh, ww, cin = dw_a.shape
        pw_a = _relu(dw_a.reshape(-1, cin) @ t[f"enc.block{i}.pw_w"] + t[f"enc.block{i}.pw_b"])
        gains.append(stage_target / rms(pw_a))
        y = (pw_a * dt(gains[-1])).reshape(m, hh, ww, -1)
    feats = y.mean(axis=(1, 2))
    feature_gain = feature_target / rms(feats)
    encoder = replace(
        config.encoder, stage_gains=tuple(gains), feature_gain=float(feature_gain)
    )
    return replace(config, encoder=encoder)
