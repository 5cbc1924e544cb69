import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))  # for fixtures/


def fd_grad(f, arr, eps=1e-5):
    """Central finite differences of scalar f with respect to every element of arr."""
    g = np.zeros_like(arr, dtype=np.float64)
    flat = arr.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f()
        flat[i] = orig - eps
        lo = f()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * eps)
    return g


def max_rel_err(analytic, numeric, floor=1e-6):
    # floor absorbs elements dominated by finite-difference roundoff
    # (|noise| ~ 1e-16 * |loss| / (2 eps) ~ 5e-12 at eps=1e-5)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
