# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the pyref kernels.

Same signatures and semantics as pyref; float32 and float64 via fused types.
Results may differ from the numpy path by floating-point rounding only.
"""

import numpy as np

cimport cython
from libc.math cimport exp, tanh

NAME = "compiled"

ctypedef fused real:
    float
    double


cdef inline real _sig(real z) nogil:
    cdef double e
    if z >= 0:
        return <real>(1.0 / (1.0 + exp(-<double>z)))
    e = exp(<double>z)
    return <real>(e / (1.0 + e))


def conv2d_forward(real[:, :, :, ::1] x, real[:, :, :, ::1] w, real[::1] b, int stride, int pad):
    cdef Py_ssize_t n = x.shape[0], h = x.shape[1], wd = x.shape[2], cin = x.shape[3]
    cdef Py_ssize_t kh = w.shape[0], kw = w.shape[1], cout = w.shape[3]
    cdef Py_ssize_t oh = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t ow = (wd + 2 * pad - kw) // stride + 1
    if real is float:
        y_np = np.empty((n, oh, ow, cout), dtype=np.float32)
    else:
        y_np = np.empty((n, oh, ow, cout), dtype=np.float64)
    cdef real[:, :, :, ::1] y = y_np
    cdef Py_ssize_t ni, i, j, ki, kj, ci, co, ih, iw, i0, i1, j0, j1
    cdef real xv
    with nogil:
        for ni in range(n):
            for i in range(oh):
                for j in range(ow):
                    for co in range(cout):
                        y[ni, i, j, co] = b[co]
            # accumulate per kernel tap over its valid output range; hoists
            # all boundary checks out of the hot loops
            for ki in range(kh):
                i0 = 0
                while i0 * stride - pad + ki < 0:
                    i0 += 1
                i1 = oh
                while i1 > i0 and (i1 - 1) * stride - pad + ki >= h:
                    i1 -= 1
                for kj in range(kw):
                    j0 = 0
                    while j0 * stride - pad + kj < 0:
                        j0 += 1
                    j1 = ow
                    while j1 > j0 and (j1 - 1) * stride - pad + kj >= wd:
                        j1 -= 1
                    for i in range(i0, i1):
                        ih = i * stride - pad + ki
                        for j in range(j0, j1):
                            iw = j * stride - pad + kj
                            for ci in range(cin):
                                xv = x[ni, ih, iw, ci]
                                for co in range(cout):
                                    y[ni, i, j, co] += xv * w[ki, kj, ci, co]
    return y_np


def conv2d_backward(real[:, :, :, ::1] dy, real[:, :, :, ::1] x, real[:, :, :, ::1] w,
                    int stride, int pad, bint need_dx=True):
    cdef Py_ssize_t n = x.shape[0], h = x.shape[1], wd = x.shape[2], cin = x.shape[3]
    cdef Py_ssize_t kh = w.shape[0], kw = w.shape[1], cout = w.shape[3]
    cdef Py_ssize_t oh = dy.shape[1], ow = dy.shape[2]
    if real is float:
        dt = np.float32
    else:
        dt = np.float64
    dw_np = np.zeros((kh, kw, cin, cout), dtype=dt)
    db_np = np.zeros((cout,), dtype=dt)
    dx_np = np.zeros((n, h, wd, cin), dtype=dt) if need_dx else None
    cdef real[:, :, :, ::1] dw = dw_np
    cdef real[::1] db = db_np
    # dummy 1-element buffer keeps the view initialized when dx is not needed
    cdef real[:, :, :, ::1] dx = dx_np if need_dx else np.zeros((1, 1, 1, 1), dtype=dt)
    cdef Py_ssize_t ni, i, j, ki, kj, ci, co, ih, iw
    cdef real dyv
    with nogil:
        for ni in range(n):
            for i in range(oh):
                for j in range(ow):
                    for co in range(cout):
                        db[co] += dy[ni, i, j, co]
                    for ki in range(kh):
                        ih = i * stride - pad + ki
                        if ih < 0 or ih >= h:
                            continue
                        for kj in range(kw):
                            iw = j * stride - pad + kj
                            if iw < 0 or iw >= wd:
                                continue
                            for co in range(cout):
                                dyv = dy[ni, i, j, co]
                                if dyv == 0:
                                    continue
                                for ci in range(cin):
                                    dw[ki, kj, ci, co] += x[ni, ih, iw, ci] * dyv
                                    if need_dx:
                                        dx[ni, ih, iw, ci] += w[ki, kj, ci, co] * dyv
    return dx_np, dw_np, db_np


def dwconv2d_forward(real[:, :, :, ::1] x, real[:, :, ::1] w, real[::1] b, int stride, int pad):
    cdef Py_ssize_t n = x.shape[0], h = x.shape[1], wd = x.shape[2], c = x.shape[3]
    cdef Py_ssize_t kh = w.shape[0], kw = w.shape[1]
    cdef Py_ssize_t oh = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t ow = (wd + 2 * pad - kw) // stride + 1
    if real is float:
        y_np = np.empty((n, oh, ow, c), dtype=np.float32)
    else:
        y_np = np.empty((n, oh, ow, c), dtype=np.float64)
    cdef real[:, :, :, ::1] y = y_np
    cdef Py_ssize_t ni, i, j, ki, kj, ci, ih, iw
    with nogil:
        for ni in range(n):
            for i in range(oh):
                for j in range(ow):
                    for ci in range(c):
                        y[ni, i, j, ci] = b[ci]
                    for ki in range(kh):
                        ih = i * stride - pad + ki
                        if ih < 0 or ih >= h:
                            continue
                        for kj in range(kw):
                            iw = j * stride - pad + kj
                            if iw < 0 or iw >= wd:
                                continue
                            for ci in range(c):
                                y[ni, i, j, ci] += x[ni, ih, iw, ci] * w[ki, kj, ci]
    return y_np


def dwconv2d_backward(real[:, :, :, ::1] dy, real[:, :, :, ::1] x, real[:, :, ::1] w,
                      int stride, int pad, bint need_dx=True):
    cdef Py_ssize_t n = x.shape[0], h = x.shape[1], wd = x.shape[2], c = x.shape[3]
    cdef Py_ssize_t kh = w.shape[0], kw = w.shape[1]
    cdef Py_ssize_t oh = dy.shape[1], ow = dy.shape[2]
    if real is float:
        dt = np.float32
    else:
        dt = np.float64
    dw_np = np.zeros((kh, kw, c), dtype=dt)
    db_np = np.zeros((c,), dtype=dt)
    dx_np = np.zeros((n, h, wd, c), dtype=dt) if need_dx else None
    cdef real[:, :, ::1] dw = dw_np
    cdef real[::1] db = db_np
    cdef real[:, :, :, ::1] dx = dx_np if need_dx else np.zeros((1, 1, 1, 1), dtype=dt)
    cdef Py_ssize_t ni, i, j, ki, kj, ci, ih, iw
    cdef real dyv
    with nogil:
        for ni in range(n):
            for i in range(oh):
                for j in range(ow):
                    for ci in range(c):
                        db[ci] += dy[ni, i, j, ci]
                    for ki in range(kh):
                        ih = i * stride - pad + ki
                        if ih < 0 or ih >= h:
                            continue
                        for kj in range(kw):
                            iw = j * stride - pad + kj
                            if iw < 0 or iw >= wd:
                                continue
                            for ci in range(c):
                                dyv = dy[ni, i, j, ci]
                                dw[ki, kj, ci] += x[ni, ih, iw, ci] * dyv
                                if need_dx:
                                    dx[ni, ih, iw, ci] += w[ki, kj, ci] * dyv
    return dx_np, dw_np, db_np


def lstm_seq_forward(real[:, :, ::1] xp, real[:, ::1] u, real[:, ::1] h0, real[:, ::1] c0):
    cdef Py_ssize_t t_len = xp.shape[0], bsz = xp.shape[1], four_h = xp.shape[2]
    cdef Py_ssize_t hsz = four_h // 4
    if real is float:
        dt = np.float32
    else:
        dt = np.float64
    h_np = np.empty((t_len, bsz, hsz), dtype=dt)
    c_np = np.empty((t_len, bsz, hsz), dtype=dt)
    g_np = np.empty((t_len, bsz, four_h), dtype=dt)
    pre_np = np.empty((bsz, four_h), dtype=dt)
    cdef real[:, :, ::1] h = h_np, c = c_np, gates = g_np
    cdef real[:, ::1] pre = pre_np
    cdef Py_ssize_t t, bi, k, j
    cdef real hv, iv, fv, gv, ov, cv, cprev
    with nogil:
        for t in range(t_len):
            for bi in range(bsz):
                for j in range(four_h):
                    pre[bi, j] = xp[t, bi, j]
                for k in range(hsz):
                    hv = h[t - 1, bi, k] if t > 0 else h0[bi, k]
                    if hv == 0:
                        continue
                    for j in range(four_h):
                        pre[bi, j] += hv * u[k, j]
                for k in range(hsz):
                    iv = _sig(pre[bi, k])
                    fv = _sig(pre[bi, hsz + k])
                    gv = <real>tanh(<double>pre[bi, 2 * hsz + k])
                    ov = _sig(pre[bi, 3 * hsz + k])
                    cprev = c[t - 1, bi, k] if t > 0 else c0[bi, k]
                    cv = fv * cprev + iv * gv
                    gates[t, bi, k] = iv
                    gates[t, bi, hsz + k] = fv
                    gates[t, bi, 2 * hsz + k] = gv
                    gates[t, bi, 3 * hsz + k] = ov
                    c[t, bi, k] = cv
                    h[t, bi, k] = ov * <real>tanh(<double>cv)
    return h_np, c_np, g_np


def lstm_seq_backward(real[:, :, ::1] dh_out, real[:, ::1] u,
                      real[:, :, ::1] h, real[:, :, ::1] c, real[:, :, ::1] gates,
                      real[:, ::1] h0, real[:, ::1] c0):
    cdef Py_ssize_t t_len = dh_out.shape[0], bsz = dh_out.shape[1], hsz = dh_out.shape[2]
    cdef Py_ssize_t four_h = 4 * hsz
    if real is float:
        dt = np.float32
    else:
        dt = np.float64
    dxp_np = np.empty((t_len, bsz, four_h), dtype=dt)
    du_np = np.zeros((hsz, four_h), dtype=dt)
    dh_next_np = np.zeros((bsz, hsz), dtype=dt)
    dc_next_np = np.zeros((bsz, hsz), dtype=dt)
    cdef real[:, :, ::1] dxp = dxp_np
    cdef real[:, ::1] du = du_np, dh_next = dh_next_np, dc_next = dc_next_np
    cdef Py_ssize_t t, bi, k, j
    cdef real iv, fv, gv, ov, tc, dh, dc, di, dfv, dg, do, cprev, hprev, dpv
    with nogil:
        for t in range(t_len - 1, -1, -1):
            for bi in range(bsz):
                for k in range(hsz):
                    iv = gates[t, bi, k]
                    fv = gates[t, bi, hsz + k]
                    gv = gates[t, bi, 2 * hsz + k]
                    ov = gates[t, bi, 3 * hsz + k]
                    cprev = c[t - 1, bi, k] if t > 0 else c0[bi, k]
                    dh = dh_out[t, bi, k] + dh_next[bi, k]
                    tc = <real>tanh(<double>c[t, bi, k])
                    do = dh * tc
                    dc = dc_next[bi, k] + dh * ov * (1 - tc * tc)
                    di = dc * gv
                    dg = dc * iv
                    dfv = dc * cprev
                    dc_next[bi, k] = dc * fv
                    dxp[t, bi, k] = di * iv * (1 - iv)
                    dxp[t, bi, hsz + k] = dfv * fv * (1 - fv)
                    dxp[t, bi, 2 * hsz + k] = dg * (1 - gv * gv)
                    dxp[t, bi, 3 * hsz + k] = do * ov * (1 - ov)
                # du += h_prev^T @ dpre ; dh_next = dpre @ u^T
                for k in range(hsz):
                    hprev = h[t - 1, bi, k] if t > 0 else h0[bi, k]
                    if hprev != 0:
                        for j in range(four_h):
                            du[k, j] += hprev * dxp[t, bi, j]
                for k in range(hsz):
                    dh = 0
                    for j in range(four_h):
                        dh += dxp[t, bi, j] * u[k, j]
                    dh_next[bi, k] = dh
    return dxp_np, du_np
