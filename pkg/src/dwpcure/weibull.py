"""Weibull proportional-hazards lifetime layer.

The hazard of each latent cause is a Weibull baseline scaled by
exp(gamma2'x + gamma3'z), which is again Weibull with shape gamma0 and
scale gamma1 * exp(-(gamma2'x + gamma3'z)/gamma0).  Everything here is
driven by the log-survival value

    L = log S = -(t/gamma1)^gamma0 * exp(gamma2'x + gamma3'z),

which keeps the analytic first- and second-order derivatives (needed by
the EM machinery) free of catastrophic cancellation: all of them are
polynomials in L times simple factors.

Gradients and Hessians are laid out over the fixed coordinate ordering
(gamma0, gamma1, gamma2-block, gamma3-block).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SurvivalSingularityError(ValueError):
    """log S is 0 or -inf to machine precision; derivative formulas blow up."""


@dataclass(frozen=True)
class LifetimeParams:
    """Weibull shape/scale plus PH regression coefficients (no intercepts)."""

    gamma0: float
    gamma1: float
    gamma2: np.ndarray
    gamma3: np.ndarray

    def __post_init__(self):
        if not (self.gamma0 > 0 and self.gamma1 > 0):
            raise ValueError("gamma0 and gamma1 must be positive")
        object.__setattr__(self, "gamma2", np.atleast_1d(np.asarray(self.gamma2, float)))
        object.__setattr__(self, "gamma3", np.atleast_1d(np.asarray(self.gamma3, float)))

    @property
    def n_coords(self) -> int:
        return 2 + self.gamma2.size + self.gamma3.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate(([self.gamma0, self.gamma1], self.gamma2, self.gamma3))

    @classmethod
    def from_vector(cls, vec: np.ndarray, q1: int, q2: int) -> "LifetimeParams":
        vec = np.asarray(vec, float)
        return cls(vec[0], vec[1], vec[2 : 2 + q1], vec[2 + q1 : 2 + q1 + q2])


@dataclass(frozen=True)
class DerivativeBundle:
    """Value, gradient and (symmetric) Hessian over the gamma coordinates.

    Arrays are vectorized over subjects: value (n,), grad (n, g),
    hess (n, g, g).
    """

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray


def _linear_predictor(x, z, lp: LifetimeParams) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, float))
    z = np.atleast_2d(np.asarray(z, float))
    return x @ lp.gamma2 + z @ lp.gamma3


def log_survival(t, x, z, lp: LifetimeParams) -> np.ndarray:
    """L = log S(t), evaluated directly to avoid exponentiation round trips."""
    t = np.atleast_1d(np.asarray(t, float))
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    return -np.power(t / lp.gamma1, lp.gamma0) * np.exp(_linear_predictor(x, z, lp))


def survival(t, x, z, lp: LifetimeParams) -> np.ndarray:
    return np.exp(log_survival(t, x, z, lp))


def cdf(t, x, z, lp: LifetimeParams) -> np.ndarray:
    return -np.expm1(log_survival(t, x, z, lp))


def hazard(t, x, z, lp: LifetimeParams) -> np.ndarray:
    """Instantaneous event rate; equals pdf / survival."""
    t = np.atleast_1d(np.asarray(t, float))
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    return -lp.gamma0 * log_survival(t, x, z, lp) / t


def pdf(t, x, z, lp: LifetimeParams) -> np.ndarray:
    return hazard(t, x, z, lp) * survival(t, x, z, lp)


def _check_t_positive(t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, float))
    if np.any(t <= 0):
        raise ValueError("derivative formulas require t > 0")
    return t


def _directions(t, x, z, lp: LifetimeParams):
    """Per-subject direction vectors v with dL/dgamma = L * v, plus the
    curvature correction W with d2L = L (v v' + W)."""
    t = _check_t_positive(t)
    x = np.atleast_2d(np.asarray(x, float))
    z = np.atleast_2d(np.asarray(z, float))
    n = t.size
    g = lp.n_coords
    v = np.empty((n, g))
    v[:, 0] = np.log(t / lp.gamma1)
    v[:, 1] = -lp.gamma0 / lp.gamma1
    v[:, 2 : 2 + lp.gamma2.size] = x
    v[:, 2 + lp.gamma2.size :] = z
    W = np.zeros((g, g))
    W[0, 1] = W[1, 0] = -1.0 / lp.gamma1
    W[1, 1] = lp.gamma0 / lp.gamma1**2
    return v, W


def _log_survival_checked(t, x, z, lp: LifetimeParams) -> np.ndarray:
    L = log_survival(t, x, z, lp).ravel()
    # S = 1 makes log(-L) undefined; S underflowing to 0 flattens every
    # derivative to an uninformative zero
    if np.any(L == 0.0) or np.any(L < -745.0) or np.any(~np.isfinite(L)):
        raise SurvivalSingularityError(
            "survival equals 0 or 1 to machine precision at some t"
        )
    return L


def survival_derivatives(t, x, z, lp: LifetimeParams) -> DerivativeBundle:
    """S with dS = S L v and d2S = S L (L v v' + v v' + W)."""
    L = _log_survival_checked(t, x, z, lp)
    v, W = _directions(t, x, z, lp)
    S = np.exp(L)
    gradL = L[:, None] * v
    hessL = L[:, None, None] * (v[:, :, None] * v[:, None, :] + W)
    grad = S[:, None] * gradL
    hess = S[:, None, None] * (gradL[:, :, None] * gradL[:, None, :] + hessL)
    return DerivativeBundle(S, grad, hess)


def cdf_derivatives(t, x, z, lp: LifetimeParams) -> DerivativeBundle:
    """F = 1 - S; derivatives are the negated survival derivatives."""
    b = survival_derivatives(t, x, z, lp)
    return DerivativeBundle(1.0 - b.value, -b.grad, -b.hess)


def log_pdf_derivatives(t, x, z, lp: LifetimeParams) -> DerivativeBundle:
    """log f = log gamma0 - log t + log(-L) + L with its two derivative orders."""
    t = _check_t_positive(t)
    L = _log_survival_checked(t, x, z, lp)
    v, W = _directions(t, x, z, lp)
    g = lp.n_coords
    value = np.log(lp.gamma0) - np.log(t) + np.log(-L) + L
    grad = (L + 1.0)[:, None] * v
    grad[:, 0] += 1.0 / lp.gamma0
    hess = L[:, None, None] * v[:, :, None] * v[:, None, :] + (L + 1.0)[
        :, None, None
    ] * W
    e00 = np.zeros((g, g))
    e00[0, 0] = -1.0 / lp.gamma0**2
    hess = hess + e00
    return DerivativeBundle(value, grad, hess)


def pdf_derivatives(t, x, z, lp: LifetimeParams) -> DerivativeBundle:
    """f and its derivatives via f = exp(log f)."""
    b = log_pdf_derivatives(t, x, z, lp)
    f = np.exp(b.value)
    grad = f[:, None] * b.grad
    hess = f[:, None, None] * (b.grad[:, :, None] * b.grad[:, None, :] + b.hess)
    return DerivativeBundle(f, grad, hess)
