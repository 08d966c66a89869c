import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st, HealthCheck

from seld3d import losses


def fd_grad(f, x, h=1e-6):
    num = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        o = x[i]
        x[i] = o + h
        lp = f(x)
        x[i] = o - h
        lm = f(x)
        x[i] = o
        num[i] = (lp - lm) / (2 * h)
    return num


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-300)


def test_bce_single_element():
    v, g = losses.sed_bce(np.array([[0.5]]), np.array([[1.0]]))
    assert v == pytest.approx(math.log(2), abs=1e-12)
    assert g[0, 0] == pytest.approx(-2.0)


def test_bce_perfect_prediction():
    y = np.array([[0.0, 1.0], [1.0, 0.0]])
    v, _ = losses.sed_bce(np.clip(y, 1e-7, 1 - 1e-7), y)
    assert 0 <= v <= 1e-6


def test_bce_gradient(rng):
    p = rng.uniform(0.02, 0.98, (6, 4))
    y = (rng.random((6, 4)) > 0.5).astype(float)
    _, g = losses.sed_bce(p, y)
    assert rel_err(g, fd_grad(lambda x: losses.sed_bce(x, y)[0], p.copy())) <= 1e-6


def test_mse_examples():
    v, _ = losses.sce_masked_mse(np.zeros((1, 1, 3)), np.array([[[1.0, 0, 0]]]), np.ones((1, 1)))
    assert v == 1.0


def test_mse_fully_masked(rng):
    pred, truth = rng.standard_normal((2, 5, 3, 3)) * 10
    v, g = losses.sce_masked_mse(pred, truth, np.zeros((5, 3)))
    assert v == 0.0 and not g.any()


def test_mse_gradient(rng):
    pred, truth = rng.standard_normal((2, 7, 4, 3))
    y = (rng.random((7, 4)) > 0.4).astype(float)
    v, g = losses.sce_masked_mse(pred, truth, y)
    assert rel_err(g, fd_grad(lambda x: losses.sce_masked_mse(x, truth, y)[0], pred.copy())) <= 1e-6
    assert not g[y == 0].any()
    # normalised by every cell, active or not
    assert v == pytest.approx(np.sum(((pred - truth) * y[..., None]) ** 2) / 28)


def test_total_weights():
    lb = losses.total_loss(0.693, 1.0)
    assert lb.total == pytest.approx(2.693, abs=1e-12)
    assert losses.total_loss(0.0, 0.0).total == 0.0
    assert losses.total_loss(0.37, 0.0).total == 0.37
    assert losses.total_loss(1.0, 1.0, 0.5, 3.0).total == 3.5


@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.integers(0, 10_000))
def test_order_invariance_and_non_negative(seed):
    rng = np.random.default_rng(seed)
    p = rng.uniform(0, 1, (5, 3))
    y = (rng.random((5, 3)) > 0.5).astype(float)
    o_hat, o = rng.standard_normal((2, 5, 3, 3))
    perm = rng.permutation(15)
    v1, _ = losses.sed_bce(p, y)
    v2, _ = losses.sed_bce(p.reshape(-1)[perm].reshape(3, 5), y.reshape(-1)[perm].reshape(3, 5))
    assert v1 == pytest.approx(v2, rel=1e-12) and v1 >= 0
    m1, _ = losses.sce_masked_mse(o_hat, o, y)
    m2, _ = losses.sce_masked_mse(o_hat.reshape(15, 3)[perm], o.reshape(15, 3)[perm], y.reshape(-1)[perm])
    assert m1 == pytest.approx(m2, rel=1e-12) and m1 >= 0


def test_shape_mismatch():
    from seld3d.errors import ShapeMismatch
    with pytest.raises(ShapeMismatch):
        losses.sed_bce(np.zeros((2, 3)), np.zeros((3, 2)))
    with pytest.raises(ShapeMismatch):
        losses.sce_masked_mse(np.zeros((2, 3, 3)), np.zeros((2, 3, 3)), np.zeros((2, 2)))
