"""Benchmark the compiled kernels against the pure-numpy reference.

Measures each hot kernel in isolation plus one full training step
(forward + backward + SGD) at the default model geometry. Run with
`python benchmarks/bench_backends.py`.
"""

import time

import numpy as np

from clipforge import kernels, nn
from clipforge.labels import onehot
from clipforge.nn.ops import loss_and_grads
from clipforge.train import sgd_update

BATCH = 8
REPEATS = 5


def timeit(fn, repeats=REPEATS):
    fn()  # warmup
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(backend, rng):
    k = kernels.get(backend)
    x = rng.standard_normal((BATCH * 16, 64, 64, 3)).astype(np.float32)
    w = rng.standard_normal((3, 3, 3, 8)).astype(np.float32)
    b = np.zeros(8, dtype=np.float32)
    y = k.conv2d_forward(x, w, b, 2, 1)
    dy = rng.standard_normal(y.shape).astype(np.float32)

    xd = rng.standard_normal((BATCH * 16, 16, 16, 16)).astype(np.float32)
    wd = rng.standard_normal((3, 3, 16)).astype(np.float32)
    bd = np.zeros(16, dtype=np.float32)
    yd = k.dwconv2d_forward(xd, wd, bd, 2, 1)
    dyd = rng.standard_normal(yd.shape).astype(np.float32)

    t_len, hsz = 16, 32
    xp = rng.standard_normal((t_len, BATCH, 4 * hsz)).astype(np.float32)
    u = rng.standard_normal((hsz, 4 * hsz)).astype(np.float32)
    h0 = np.zeros((BATCH, hsz), dtype=np.float32)
    c0 = np.zeros_like(h0)
    h, c, g = k.lstm_seq_forward(xp, u, h0, c0)
    dh = rng.standard_normal(h.shape).astype(np.float32)

    return {
        "conv2d fwd": timeit(lambda: k.conv2d_forward(x, w, b, 2, 1)),
        "conv2d bwd": timeit(lambda: k.conv2d_backward(dy, x, w, 2, 1, True)),
        "dwconv fwd": timeit(lambda: k.dwconv2d_forward(xd, wd, bd, 2, 1)),
        "dwconv bwd": timeit(lambda: k.dwconv2d_backward(dyd, xd, wd, 2, 1, True)),
        "lstm fwd": timeit(lambda: k.lstm_seq_forward(xp, u, h0, c0)),
        "lstm bwd": timeit(lambda: k.lstm_seq_backward(dh, u, h, c, g, h0, c0)),
    }


def bench_train_step(backend, rng):
    kernels.use(backend)
    cfg = nn.ModelConfig(dropout_rate=0.0)
    params = nn.init_params(cfg, seed=0)
    batch = rng.random((BATCH, 16, 64, 64, 3), dtype=np.float32)
    labels = onehot(rng.integers(0, 2, BATCH))

    def step():
        _, _, grads = loss_and_grads(params, batch, labels, cfg)
        sgd_update(params, grads, 0.0)

    return timeit(step, repeats=3)


def main():
    avail = kernels.available()
    print(f"backends: {avail}\n")
    rng = np.random.default_rng(0)
    rows = {name: {} for name in avail}
    for name in avail:
        rows[name].update(bench_kernels(name, np.random.default_rng(0)))
        rows[name]["train step (B=8)"] = bench_train_step(name, rng)
    kernels.use(avail[-1] if "compiled" not in avail else "compiled")

    labels = list(next(iter(rows.values())))
    width = max(len(s) for s in labels) + 2
    header = "kernel".ljust(width) + "".join(f"{n:>14}" for n in avail)
    if len(avail) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label in labels:
        line = label.ljust(width)
        for name in avail:
            line += f"{rows[name][label] * 1e3:>12.2f}ms"
        if len(avail) == 2:
            line += f"{rows['python'][label] / rows['compiled'][label]:>9.2f}x"
        print(line)


if __name__ == "__main__":
    main()
