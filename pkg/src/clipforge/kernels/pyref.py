"""Pure-numpy implementations of the hot kernels.

These are the reference semantics; the compiled extension in _fastkern.pyx
implements the same signatures. All arrays are channels-last, C-contiguous,
float32 or float64. LSTM gate blocks are ordered [input, forget, cell, output]
along the last axis.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

NAME = "python"


def _out_hw(h, w, kh, kw, stride, pad):
    return (h + 2 * pad - kh) // stride + 1, (w + 2 * pad - kw) // stride + 1


def _pad_spatial(x, pad):
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))


def _patches(x, kh, kw, stride, pad):
    """View of all kh x kw patches: (N, OH, OW, KH, KW, C), no copy."""
    xp = _pad_spatial(x, pad)
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))  # (N, H', W', C, KH, KW)
    win = win[:, ::stride, ::stride]
    return np.transpose(win, (0, 1, 2, 4, 5, 3))


def conv2d_forward(x, w, b, stride, pad):
    n, h, wd, cin = x.shape
    kh, kw, _, cout = w.shape
    oh, ow = _out_hw(h, wd, kh, kw, stride, pad)
    cols = _patches(x, kh, kw, stride, pad).reshape(n * oh * ow, kh * kw * cin)
    y = cols @ w.reshape(kh * kw * cin, cout) + b
    return y.reshape(n, oh, ow, cout)


def conv2d_backward(dy, x, w, stride, pad, need_dx=True):
    n, h, wd, cin = x.shape
    kh, kw, _, cout = w.shape
    oh, ow = dy.shape[1], dy.shape[2]
    dy_mat = dy.reshape(n * oh * ow, cout)
    cols = _patches(x, kh, kw, stride, pad).reshape(n * oh * ow, kh * kw * cin)
    dw = (cols.T @ dy_mat).reshape(w.shape)
    db = dy_mat.sum(axis=0)
    if not need_dx:
        return None, dw, db
    dcols = (dy_mat @ w.reshape(kh * kw * cin, cout).T).reshape(n, oh, ow, kh, kw, cin)
    dxp = np.zeros((n, h + 2 * pad, wd + 2 * pad, cin), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, i : i + stride * oh : stride, j : j + stride * ow : stride, :] += dcols[:, :, :, i, j, :]
    dx = dxp[:, pad : pad + h, pad : pad + wd, :] if pad else dxp
    return np.ascontiguousarray(dx), dw, db


def dwconv2d_forward(x, w, b, stride, pad):
    n, h, wd, c = x.shape
    kh, kw, _ = w.shape
    oh, ow = _out_hw(h, wd, kh, kw, stride, pad)
    pat = _patches(x, kh, kw, stride, pad)  # (N, OH, OW, KH, KW, C)
    y = np.einsum("nxyijc,ijc->nxyc", pat, w, optimize=True) + b
    return np.ascontiguousarray(y)


def dwconv2d_backward(dy, x, w, stride, pad, need_dx=True):
    n, h, wd, c = x.shape
    kh, kw, _ = w.shape
    oh, ow = dy.shape[1], dy.shape[2]
    pat = _patches(x, kh, kw, stride, pad)
    dw = np.einsum("nxyijc,nxyc->ijc", pat, dy, optimize=True)
    db = dy.sum(axis=(0, 1, 2))
    if not need_dx:
        return None, dw, db
    dxp = np.zeros((n, h + 2 * pad, wd + 2 * pad, c), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, i : i + stride * oh : stride, j : j + stride * ow : stride, :] += dy * w[i, j]
    dx = dxp[:, pad : pad + h, pad : pad + wd, :] if pad else dxp
    return np.ascontiguousarray(dx), dw, db


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def lstm_seq_forward(xp, u, h0, c0):
    """Run a full LSTM recurrence.

    xp: (T, B, 4H) input projections x_t @ Wx + b, gate order i|f|g|o.
    u:  (H, 4H) recurrent weights, same gate order.
    Returns (h, c, gates) with shapes (T, B, H), (T, B, H), (T, B, 4H);
    gates hold post-activation values.
    """
    t_len, bsz, four_h = xp.shape
    hsz = four_h // 4
    h = np.empty((t_len, bsz, hsz), dtype=xp.dtype)
    c = np.empty((t_len, bsz, hsz), dtype=xp.dtype)
    gates = np.empty((t_len, bsz, four_h), dtype=xp.dtype)
    h_prev, c_prev = h0, c0
    for t in range(t_len):
        pre = xp[t] + h_prev @ u
        i = _sigmoid(pre[:, :hsz])
        f = _sigmoid(pre[:, hsz : 2 * hsz])
        g = np.tanh(pre[:, 2 * hsz : 3 * hsz])
        o = _sigmoid(pre[:, 3 * hsz :])
        c_t = f * c_prev + i * g
        h_t = o * np.tanh(c_t)
        gates[t, :, :hsz] = i
        gates[t, :, hsz : 2 * hsz] = f
        gates[t, :, 2 * hsz : 3 * hsz] = g
        gates[t, :, 3 * hsz :] = o
        c[t] = c_t
        h[t] = h_t
        h_prev, c_prev = h_t, c_t
    return h, c, gates


def lstm_seq_backward(dh_out, u, h, c, gates, h0, c0):
    """Backpropagate through lstm_seq_forward.

    dh_out: (T, B, H) upstream gradient on every h_t (zero where unused).
    Returns (dxp, du): gradients on the input projections and on u.
    """
    t_len, bsz, hsz = dh_out.shape
    dxp = np.empty((t_len, bsz, 4 * hsz), dtype=dh_out.dtype)
    du = np.zeros_like(u)
    dh_next = np.zeros((bsz, hsz), dtype=dh_out.dtype)
    dc_next = np.zeros((bsz, hsz), dtype=dh_out.dtype)
    for t in range(t_len - 1, -1, -1):
        i = gates[t, :, :hsz]
        f = gates[t, :, hsz : 2 * hsz]
        g = gates[t, :, 2 * hsz : 3 * hsz]
        o = gates[t, :, 3 * hsz :]
        c_prev = c[t - 1] if t > 0 else c0
        h_prev = h[t - 1] if t > 0 else h0
        dh = dh_out[t] + dh_next
        tc = np.tanh(c[t])
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_next = dc * f
        dpre = np.concatenate(
            [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g * g), do * o * (1.0 - o)],
            axis=1,
        )
        dxp[t] = dpre
        du += h_prev.T @ dpre
        dh_next = dpre @ u.T
    return dxp, du
