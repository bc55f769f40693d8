"""Forward-mode jet arithmetic against finite differences."""

import mpmath
import numpy as np
import pytest

from dwpcure.jets import Jet


def seed_jet(vals, d, with_hess=True):
    """Jet for coordinate functions theta_k evaluated at vals (n == d)."""
    n = len(vals)
    grad = np.eye(n)[:, :d]
    hess = np.zeros((n, d, d)) if with_hess else None
    return Jet(np.asarray(vals, float), grad, hess)


def composite(j):
    return (j * j + 2.0).log() * j.exp() - 1.0 / (j + 3.0)


def composite_np(v):
    return np.log(v * v + 2.0) * np.exp(v) - 1.0 / (v + 3.0)


def test_composition_matches_finite_differences():
    v = np.array([0.3, -1.2, 2.0])
    out = composite(seed_jet(v, 3))
    assert np.allclose(out.val, composite_np(v), rtol=1e-12)
    h = 1e-6
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fd = (composite_np(v + e) - composite_np(v - e)) / (2 * h)
        assert out.grad[k, k] == pytest.approx(fd[k], rel=1e-7)
        # off-diagonal gradient entries vanish for coordinate-wise functions
        assert np.allclose(np.delete(out.grad[k], k), 0.0)
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1e-4
        fd2 = (
            composite_np(v + e) - 2 * composite_np(v) + composite_np(v - e)
        ) / 1e-8
        assert out.hess[k, k, k] == pytest.approx(fd2[k], rel=1e-5)


def test_division_and_rsub():
    v = np.array([0.7, 1.9])
    j = seed_jet(v, 2)
    left = (1.0 - j) / (1.0 + j)
    direct = (1.0 - v) / (1.0 + v)
    assert np.allclose(left.val, direct)
    h = 1e-6
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fd = ((1 - (v + e)) / (1 + (v + e)) - (1 - (v - e)) / (1 + (v - e))) / (2 * h)
        assert left.grad[k, k] == pytest.approx(fd[k], rel=1e-7)


def test_log_expm1_stability_and_derivatives():
    for u in (1e-8, 1e-3, 0.5, 5.0, 50.0, 500.0):
        j = seed_jet([u], 1)
        out = j.log_expm1()
        assert np.isfinite(out.val[0])
        expected = u + np.log(-np.expm1(-u))  # = log(e^u - 1)
        assert out.val[0] == pytest.approx(expected, rel=1e-12)
        d = 1.0 / (-np.expm1(-u))
        assert out.grad[0, 0] == pytest.approx(d, rel=1e-12)
        # high-precision oracle: finite differences are hopeless near u ~ 0
        d2 = float(mpmath.diff(lambda w: mpmath.log(mpmath.expm1(w)), u, 2))
        assert out.hess[0, 0, 0] == pytest.approx(d2, rel=1e-10)


def test_log1p_and_sum_with_weights():
    v = np.array([0.2, 0.8, 1.5])
    j = seed_jet(v, 3)
    out = (j * 2.0).log1p()
    assert np.allclose(out.val, np.log1p(2 * v))
    w = np.array([0.5, 1.0, 2.0])
    total, grad, hess = out.sum(weights=w)
    assert total == pytest.approx(float(w @ np.log1p(2 * v)))
    assert grad.shape == (3,)
    assert hess.shape == (3, 3)
    for k in range(3):
        assert grad[k] == pytest.approx(w[k] * 2 / (1 + 2 * v[k]), rel=1e-12)


def test_first_order_only_skips_hessian():
    j = seed_jet([1.0, 2.0], 2, with_hess=False)
    out = (j.log() + j.exp()) * j
    assert out.hess is None
    _, grad, hess = out.sum()
    assert hess is None
    assert grad.shape == (2,)


def test_constant_lift():
    j = seed_jet([2.0], 1)
    out = j + np.array([3.0])
    assert out.val[0] == 5.0
    c = Jet.constant([4.0], 1)
    assert (j * c).grad[0, 0] == pytest.approx(4.0)
    assert np.allclose(c.grad, 0.0)
