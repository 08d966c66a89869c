"""Hot numeric kernels with a numba path and a pure-numpy path.

Every public kernel dispatches on :data:`seld3d._accel.USE_NUMBA`. Both
variants are importable directly (``*_np`` / ``*_nb``) so tests and the
benchmark can compare them regardless of the environment flag.

Array layouts are channels-last:

* time-frequency maps: ``(batch, time, freq, channels)``
* sequences: ``(batch, time, channels)``
"""

import numpy as np

from ._accel import USE_NUMBA, njit

POOL = 5


# ---------------------------------------------------------------------------
# temporal pooling: avg + max over non-overlapping windows of 5 frames

def temporal_pool_fwd_np(a):
    b, t, d = a.shape
    win = a.reshape(b, t // POOL, POOL, d)
    idx = np.argmax(win, axis=2)
    mx = np.take_along_axis(win, idx[:, :, None, :], axis=2)[:, :, 0, :]
    return win.mean(axis=2) + mx, idx


def temporal_pool_bwd_np(g, idx):
    b, tv, d = g.shape
    out = np.repeat(g[:, :, None, :] / POOL, POOL, axis=2)
    np.put_along_axis(out, idx[:, :, None, :],
                      np.take_along_axis(out, idx[:, :, None, :], axis=2) + g[:, :, None, :],
                      axis=2)
    return out.reshape(b, tv * POOL, d)


@njit
def temporal_pool_fwd_nb(a):
    b, t, d = a.shape
    tv = t // POOL
    out = np.empty((b, tv, d), dtype=a.dtype)
    idx = np.empty((b, tv, d), dtype=np.int64)
    for i in range(b):
        for s in range(tv):
            for k in range(d):
                acc = 0.0
                best = a[i, s * POOL, k]
                arg = 0
                for w in range(POOL):
                    v = a[i, s * POOL + w, k]
                    acc += v
                    if v > best:
                        best = v
                        arg = w
                out[i, s, k] = acc / POOL + best
                idx[i, s, k] = arg
    return out, idx


@njit
def temporal_pool_bwd_nb(g, idx):
    b, tv, d = g.shape
    out = np.empty((b, tv * POOL, d), dtype=g.dtype)
    for i in range(b):
        for s in range(tv):
            for k in range(d):
                share = g[i, s, k] / POOL
                for w in range(POOL):
                    out[i, s * POOL + w, k] = share
                out[i, s * POOL + idx[i, s, k], k] += g[i, s, k]
    return out


# ---------------------------------------------------------------------------
# 3x3 "same" convolution over (time, freq) with channel mixing

def _im2col3x3(x):
    b, t, f, c = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    cols = np.empty((b, t, f, 9 * c), dtype=x.dtype)
    for i in range(3):
        for j in range(3):
            k = 3 * i + j
            cols[..., k * c:(k + 1) * c] = xp[:, i:i + t, j:j + f, :]
    return cols


def conv3x3_fwd_np(x, w, bias):
    cin, cout = w.shape[2], w.shape[3]
    cols = _im2col3x3(x)
    return cols @ w.reshape(9 * cin, cout) + bias


def conv3x3_bwd_np(x, w, g):
    b, t, f, cin = x.shape
    cout = w.shape[3]
    cols = _im2col3x3(x).reshape(-1, 9 * cin)
    g2 = g.reshape(-1, cout)
    dw = (cols.T @ g2).reshape(3, 3, cin, cout)
    db = g2.sum(axis=0)
    dcols = (g2 @ w.reshape(9 * cin, cout).T).reshape(b, t, f, 9 * cin)
    dxp = np.zeros((b, t + 2, f + 2, cin), dtype=x.dtype)
    for i in range(3):
        for j in range(3):
            k = 3 * i + j
            dxp[:, i:i + t, j:j + f, :] += dcols[..., k * cin:(k + 1) * cin]
    return dxp[:, 1:-1, 1:-1, :], dw, db


@njit(fastmath=True)
def conv3x3_fwd_nb(x, w, bias):
    b, t, f, cin = x.shape
    cout = w.shape[3]
    out = np.empty((b, t, f, cout), dtype=x.dtype)
    for n in range(b):
        for ti in range(t):
            for fi in range(f):
                orow = out[n, ti, fi]
                orow[:] = bias
                for i in range(3):
                    tt = ti + i - 1
                    if tt < 0 or tt >= t:
                        continue
                    for j in range(3):
                        ff = fi + j - 1
                        if ff < 0 or ff >= f:
                            continue
                        xrow = x[n, tt, ff]
                        for c in range(cin):
                            v = xrow[c]
                            wrow = w[i, j, c]
                            for o in range(cout):
                                orow[o] += v * wrow[o]
    return out


@njit(fastmath=True)
def conv3x3_bwd_nb(x, w, g):
    b, t, f, cin = x.shape
    cout = w.shape[3]
    dx = np.zeros_like(x)
    dw = np.zeros_like(w)
    db = np.zeros(cout, dtype=g.dtype)
    # weight and bias gradients: scatter outer products
    for n in range(b):
        for ti in range(t):
            for fi in range(f):
                grow = g[n, ti, fi]
                for o in range(cout):
                    db[o] += grow[o]
                for i in range(3):
                    tt = ti + i - 1
                    if tt < 0 or tt >= t:
                        continue
                    for j in range(3):
                        ff = fi + j - 1
                        if ff < 0 or ff >= f:
                            continue
                        xrow = x[n, tt, ff]
                        for c in range(cin):
                            v = xrow[c]
                            wrow = dw[i, j, c]
                            for o in range(cout):
                                wrow[o] += v * grow[o]
    # input gradient: gather, inner reduction over output channels
    for n in range(b):
        for tt in range(t):
            for ff in range(f):
                for i in range(3):
                    ti = tt - i + 1
                    if ti < 0 or ti >= t:
                        continue
                    for j in range(3):
                        fi = ff - j + 1
                        if fi < 0 or fi >= f:
                            continue
                        grow = g[n, ti, fi]
                        for c in range(cin):
                            wrow = w[i, j, c]
                            acc = grow[0] * wrow[0]
                            for o in range(1, cout):
                                acc += grow[o] * wrow[o]
                            dx[n, tt, ff, c] += acc
    return dx, dw, db


# ---------------------------------------------------------------------------
# kernel-3 dilated temporal convolution, zero padded, same length

def dilated_conv_fwd_np(x, w, bias, dilation):
    b, t, cin = x.shape
    p = dilation
    xp = np.pad(x, ((0, 0), (p, p), (0, 0)))
    cols = np.concatenate([xp[:, k * p:k * p + t, :] for k in range(3)], axis=2)
    return cols @ w.reshape(3 * cin, -1) + bias


def dilated_conv_bwd_np(x, w, g, dilation):
    b, t, cin = x.shape
    cout = w.shape[2]
    p = dilation
    xp = np.pad(x, ((0, 0), (p, p), (0, 0)))
    cols = np.concatenate([xp[:, k * p:k * p + t, :] for k in range(3)], axis=2)
    g2 = g.reshape(-1, cout)
    dw = (cols.reshape(-1, 3 * cin).T @ g2).reshape(3, cin, cout)
    db = g2.sum(axis=0)
    dcols = g @ w.reshape(3 * cin, cout).T
    dxp = np.zeros((b, t + 2 * p, cin), dtype=x.dtype)
    for k in range(3):
        dxp[:, k * p:k * p + t, :] += dcols[..., k * cin:(k + 1) * cin]
    return dxp[:, p:p + t, :], dw, db


@njit
def dilated_conv_fwd_nb(x, w, bias, dilation):
    b, t, cin = x.shape
    cout = w.shape[2]
    out = np.empty((b, t, cout), dtype=x.dtype)
    for n in range(b):
        for ti in range(t):
            for o in range(cout):
                out[n, ti, o] = bias[o]
            for k in range(3):
                tt = ti + (k - 1) * dilation
                if tt < 0 or tt >= t:
                    continue
                for c in range(cin):
                    v = x[n, tt, c]
                    for o in range(cout):
                        out[n, ti, o] += v * w[k, c, o]
    return out


@njit
def dilated_conv_bwd_nb(x, w, g, dilation):
    b, t, cin = x.shape
    cout = w.shape[2]
    dx = np.zeros_like(x)
    dw = np.zeros_like(w)
    db = np.zeros(cout, dtype=g.dtype)
    for n in range(b):
        for ti in range(t):
            for o in range(cout):
                db[o] += g[n, ti, o]
            for k in range(3):
                tt = ti + (k - 1) * dilation
                if tt < 0 or tt >= t:
                    continue
                for c in range(cin):
                    v = x[n, tt, c]
                    acc = 0.0
                    for o in range(cout):
                        go = g[n, ti, o]
                        dw[k, c, o] += v * go
                        acc += go * w[k, c, o]
                    dx[n, tt, c] += acc
    return dx, dw, db


# ---------------------------------------------------------------------------
# dispatch

# The dilated conv runs on few, wide frames where the BLAS-backed numpy
# version beats the loops (see benchmarks/bench_kernels.py), so it uses
# numpy under either backend.
dilated_conv_fwd = dilated_conv_fwd_np
dilated_conv_bwd = dilated_conv_bwd_np

if USE_NUMBA:
    temporal_pool_fwd = temporal_pool_fwd_nb
    temporal_pool_bwd = temporal_pool_bwd_nb
    conv3x3_fwd = conv3x3_fwd_nb
    conv3x3_bwd = conv3x3_bwd_nb
else:
    temporal_pool_fwd = temporal_pool_fwd_np
    temporal_pool_bwd = temporal_pool_bwd_np
    conv3x3_fwd = conv3x3_fwd_np
    conv3x3_bwd = conv3x3_bwd_np
