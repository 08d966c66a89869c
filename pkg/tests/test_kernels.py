"""Both kernel backends must agree, whatever SELD3D_NUMBA selects at import."""

import numpy as np
import pytest

from seld3d import kernels as K
from seld3d import _accel


def test_backend_flag_reported():
    assert _accel.backend() in ("numba", "numpy")


@pytest.mark.parametrize("dtype, tol", [(np.float64, 1e-12), (np.float32, 1e-4)])
def test_conv3x3_backends_agree(rng, dtype, tol):
    x = rng.standard_normal((2, 15, 8, 5)).astype(dtype)
    w = rng.standard_normal((3, 3, 5, 6)).astype(dtype)
    b = rng.standard_normal(6).astype(dtype)
    g = rng.standard_normal((2, 15, 8, 6)).astype(dtype)
    np.testing.assert_allclose(K.conv3x3_fwd_nb(x, w, b), K.conv3x3_fwd_np(x, w, b), rtol=tol, atol=tol)
    for a, c in zip(K.conv3x3_bwd_nb(x, w, g), K.conv3x3_bwd_np(x, w, g)):
        np.testing.assert_allclose(a, c, rtol=tol, atol=tol * 10)


def test_conv3x3_against_direct_sum(rng):
    x = rng.standard_normal((1, 4, 5, 2))
    w = rng.standard_normal((3, 3, 2, 3))
    b = rng.standard_normal(3)
    out = K.conv3x3_fwd_np(x, w, b)
    for t in range(4):
        for f in range(5):
            ref = b.copy()
            for i in range(3):
                for j in range(3):
                    tt, ff = t + i - 1, f + j - 1
                    if 0 <= tt < 4 and 0 <= ff < 5:
                        ref += x[0, tt, ff] @ w[i, j]
            np.testing.assert_allclose(out[0, t, f], ref, atol=1e-13)


def test_conv3x3_adjoint(rng):
    # <conv(x), g> = <x, dx> + bias term: backward is the exact adjoint
    x = rng.standard_normal((2, 6, 4, 3))
    w = rng.standard_normal((3, 3, 3, 2))
    g = rng.standard_normal((2, 6, 4, 2))
    zero = np.zeros(2)
    for bwd in (K.conv3x3_bwd_np, K.conv3x3_bwd_nb):
        dx, dw, db = bwd(x, w, g)
        lhs = np.sum(K.conv3x3_fwd_np(x, w, zero) * g)
        assert np.sum(x * dx) == pytest.approx(lhs, rel=1e-12)
        assert np.sum(w * dw) == pytest.approx(lhs, rel=1e-12)
        np.testing.assert_allclose(db, g.sum(axis=(0, 1, 2)))


@pytest.mark.parametrize("dilation", [1, 2, 4])
def test_dilated_backends_agree(rng, dilation):
    x = rng.standard_normal((3, 20, 7))
    w = rng.standard_normal((3, 7, 4))
    b = rng.standard_normal(4)
    g = rng.standard_normal((3, 20, 4))
    np.testing.assert_allclose(K.dilated_conv_fwd_nb(x, w, b, dilation),
                               K.dilated_conv_fwd_np(x, w, b, dilation), atol=1e-12)
    for a, c in zip(K.dilated_conv_bwd_nb(x, w, g, dilation), K.dilated_conv_bwd_np(x, w, g, dilation)):
        np.testing.assert_allclose(a, c, atol=1e-12)
    out = K.dilated_conv_fwd_np(x, w, b, dilation)
    t = 10
    ref = b + x[0, t - dilation] @ w[0] + x[0, t] @ w[1] + x[0, t + dilation] @ w[2]
    np.testing.assert_allclose(out[0, t], ref, atol=1e-13)


def test_temporal_pool_backends_agree(rng):
    a = rng.standard_normal((2, 50, 6))
    o1, i1 = K.temporal_pool_fwd_np(a)
    o2, i2 = K.temporal_pool_fwd_nb(a)
    np.testing.assert_allclose(o1, o2, atol=1e-14)
    assert np.array_equal(i1, i2)
    g = rng.standard_normal(o1.shape)
    np.testing.assert_allclose(K.temporal_pool_bwd_np(g, i1), K.temporal_pool_bwd_nb(g, i2), atol=1e-15)


def test_temporal_pool_ties_pick_first():
    a = np.ones((1, 5, 1))
    out, idx = K.temporal_pool_fwd_nb(a)
    assert idx[0, 0, 0] == 0 and out[0, 0, 0] == 2.0
    g = K.temporal_pool_bwd_nb(np.ones((1, 1, 1)), idx)
    np.testing.assert_allclose(g[0, :, 0], [1.2, 0.2, 0.2, 0.2, 0.2])


def test_numpy_fallback_in_subprocess():
    import subprocess
    import sys
    code = ("import seld3d._accel as a, seld3d.kernels as k; "
            "assert a.backend() == 'numpy' and k.conv3x3_fwd is k.conv3x3_fwd_np")
    env = dict(__import__("os").environ, SELD3D_NUMBA="0")
    subprocess.run([sys.executable, "-c", code], check=True, env=env)
