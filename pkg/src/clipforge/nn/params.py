"""Named parameter collection, initialization and counting.

Tensors live in a flat ordered dict keyed by dotted names (enc.stem.w,
lstm.fwd.w_i, head.dense0.w, ...). The trainable mask mirrors the key set;
frozen tensors never receive gradients and are never touched by the optimizer.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch

GATE_NAMES = ("i", "f", "g", "o")  # fused gate-block order everywhere


def param_shapes(config):
    """Ordered {name: (shape, trainable)} table derived from the config.

    This is the single source of truth for initialization, counting and
    checkpoint validation.
    """
    enc = config.encoder
    fb = enc.freeze_boundary
    table = {}

    def add(name, shape, stage=None):
        trainable = True if stage is None else stage >= fb
        table[name] = (tuple(int(s) for s in shape), trainable)

    add("enc.stem.w", (3, 3, 3, enc.stem_channels), stage=0)
    add("enc.stem.b", (enc.stem_channels,), stage=0)
    cin = enc.stem_channels
    for k, cout in enumerate(enc.block_channels):
        add(f"enc.block{k}.dw_w", (3, 3, cin), stage=k + 1)
        add(f"enc.block{k}.dw_b", (cin,), stage=k + 1)
        add(f"enc.block{k}.pw_w", (cin, cout), stage=k + 1)
        add(f"enc.block{k}.pw_b", (cout,), stage=k + 1)
        cin = cout

    d, h = config.feature_dim, config.lstm_units
    for direction in ("fwd", "bwd"):
        for gate in GATE_NAMES:
            add(f"lstm.{direction}.w_{gate}", (h, d))
        for gate in GATE_NAMES:
            add(f"lstm.{direction}.u_{gate}", (h, h))
        for gate in GATE_NAMES:
            add(f"lstm.{direction}.b_{gate}", (h,))

    width = 2 * h
    for k, units in enumerate(config.dense_units):
        add(f"head.dense{k}.w", (width, units))
        add(f"head.dense{k}.b", (units,))
        width = units
    add("head.out.w", (width, config.num_classes))
    add("head.out.b", (config.num_classes,))
    return table


@dataclass
class ModelParams:
    tensors: dict
    trainable: dict

    @property
    def dtype(self):
        return next(iter(self.tensors.values())).dtype

    def copy(self):
        return ModelParams(
            {k: v.copy() for k, v in self.tensors.items()}, dict(self.trainable)
        )

    def astype(self, dtype):
        return ModelParams(
            {k: v.astype(dtype) for k, v in self.tensors.items()}, dict(self.trainable)
        )

    def trainable_names(self):
        return [k for k, t in self.trainable.items() if t]

    def equals(self, other):
        """Bitwise equality of tensors and trainable mask."""
        if set(self.tensors) != set(other.tensors) or self.trainable != other.trainable:
            return False
        return all(
            v.shape == other.tensors[k].shape
            and v.dtype == other.tensors[k].dtype
            and np.array_equal(v, other.tensors[k])
            for k, v in self.tensors.items()
        )


def _truncated_normal(rng, shape, std, dtype):
    """Normal(0, std) redrawn until within 2 std."""
    out = rng.standard_normal(shape)
    bad = np.abs(out) > 2.0
    while bad.any():
        out[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(out) > 2.0
    return (out * std).astype(dtype)


def _init_std(name, shape):
    """Fan-in-scaled std; ReLU-fed layers carry the He gain of sqrt(2)."""
    if name.endswith(".dw_w"):
        fan_in, gain = shape[0] * shape[1], 2.0
    elif name == "enc.stem.w":
        fan_in, gain = shape[0] * shape[1] * shape[2], 2.0
    elif name.startswith("lstm."):
        fan_in, gain = shape[1], 1.0
    elif name == "head.out.w":
        fan_in, gain = shape[0], 1.0
    else:  # pointwise convs and hidden dense layers, all ReLU-activated
        fan_in, gain = shape[0], 2.0
    return np.sqrt(gain / fan_in)


# Gate-bias init: a forget bias of +2.5 starts the cell with a long memory
# window (f ~ 0.92) and an input bias of +1 admits inputs readily, so the
# accumulated cell state reflects whole-clip statistics from the first epoch.
FORGET_BIAS = 2.5
INPUT_GATE_BIAS = 1.0


def init_params(config, seed=0, dtype=np.float32):
    """Truncated-normal weights scaled by fan-in, zero biases except LSTM gates."""
    rng = np.random.default_rng(seed)
    tensors, trainable = {}, {}
    for name, (shape, train) in param_shapes(config).items():
        if len(shape) == 1:  # bias
            arr = np.zeros(shape, dtype=dtype)
            if ".b_f" in name:
                arr += FORGET_BIAS
            elif ".b_i" in name:
                arr += INPUT_GATE_BIAS
        else:
            arr = _truncated_normal(rng, shape, _init_std(name, shape), dtype)
        tensors[name] = arr
        trainable[name] = train
    return ModelParams(tensors, trainable)


def count_params(config):
    """(total, trainable, non_trainable) element counts from declared shapes."""
    total = trainable = 0
    for _, (shape, train) in param_shapes(config).items():
        n = int(np.prod(shape))
        total += n
        if train:
            trainable += n
    return total, trainable, total - trainable


@dataclass
class LSTMCellParams:
    """One direction's gate weights: w_* (H, D), u_* (H, H), b_* (H,)."""

    w_i: np.ndarray
    w_f: np.ndarray
    w_g: np.ndarray
    w_o: np.ndarray
    u_i: np.ndarray
    u_f: np.ndarray
    u_g: np.ndarray
    u_o: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_g: np.ndarray
    b_o: np.ndarray

    def __post_init__(self):
        h, d = self.w_i.shape
        for gate in GATE_NAMES:
            if getattr(self, f"w_{gate}").shape != (h, d):
                raise ShapeMismatch(f"w_{gate} shape != ({h}, {d})")
            if getattr(self, f"u_{gate}").shape != (h, h):
                raise ShapeMismatch(f"u_{gate} shape != ({h}, {h})")
            if getattr(self, f"b_{gate}").shape != (h,):
                raise ShapeMismatch(f"b_{gate} shape != ({h},)")

    @property
    def hidden_size(self):
        return self.w_i.shape[0]

    @property
    def input_size(self):
        return self.w_i.shape[1]

    def fused(self):
        """(wx (D, 4H), u (H, 4H), b (4H,)) in gate order i|f|g|o."""
        wx = np.concatenate([getattr(self, f"w_{g}").T for g in GATE_NAMES], axis=1)
        u = np.concatenate([getattr(self, f"u_{g}").T for g in GATE_NAMES], axis=1)
        b = np.concatenate([getattr(self, f"b_{g}") for g in GATE_NAMES])
        return np.ascontiguousarray(wx), np.ascontiguousarray(u), b


def lstm_cell(params, direction):
    """LSTMCellParams view over one direction's tensors in a ModelParams."""
    t = params.tensors
    kw = {}
    for gate in GATE_NAMES:
        kw[f"w_{gate}"] = t[f"lstm.{direction}.w_{gate}"]
        kw[f"u_{gate}"] = t[f"lstm.{direction}.u_{gate}"]
        kw[f"b_{gate}"] = t[f"lstm.{direction}.b_{gate}"]
    return LSTMCellParams(**kw)


@dataclass
class HeadParams:
    """Dense stack (w: (fan_in, units)) plus the softmax output layer."""

    dense: list = field(default_factory=list)  # [(w, b), ...]
    out_w: np.ndarray = None
    out_b: np.ndarray = None


def head_view(params, config):
    t = params.tensors
    dense = [
        (t[f"head.dense{k}.w"], t[f"head.dense{k}.b"])
        for k in range(len(config.dense_units))
    ]
    return HeadParams(dense=dense, out_w=t["head.out.w"], out_b=t["head.out.b"])
