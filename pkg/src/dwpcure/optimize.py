"""Unconstrained maximization and numerical differentiation.

Maximization wraps scipy's Nelder-Mead simplex and BFGS quasi-Newton
minimizers (both deterministic; the simplex is initialized from x0 by
axis-wise 5% perturbations, 0.00025 for zero coordinates).  Central
finite differences provide O(h^2) gradients and Hessians for standard
errors and for cross-checking the analytic derivative code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "quasi_newton"  # "simplex" or "quasi_newton"
    max_iter: int = 2000
    x_tol: float = 1e-8
    f_tol: float = 1e-8
    fd_step: float = 1e-6

    def __post_init__(self):
        if self.method not in ("simplex", "quasi_newton"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.max_iter <= 0 or self.x_tol <= 0 or self.f_tol <= 0:
            raise ValueError("max_iter and tolerances must be positive")


@dataclass(frozen=True)
class OptimResult:
    argmax: np.ndarray
    value: float
    iterations: int
    converged: bool
    gradient_norm: float | None = None


def maximize(
    f: Callable[[np.ndarray], float],
    g: Callable[[np.ndarray], np.ndarray] | None,
    x0,
    cfg: OptimizerConfig = OptimizerConfig(),
) -> OptimResult:
    """Maximize f from x0; never returns a point worse than x0."""
    x0 = np.atleast_1d(np.asarray(x0, float))
    f0 = f(x0)
    if not np.isfinite(f0):
        raise ValueError(f"objective is not finite at x0 (f={f0})")

    neg_f = lambda x: -f(x)
    if cfg.method == "simplex":
        res = minimize(
            neg_f,
            x0,
            method="Nelder-Mead",
            options={
                "maxiter": cfg.max_iter,
                "xatol": cfg.x_tol,
                "fatol": cfg.f_tol,
            },
        )
    else:
        neg_g = (lambda x: -g(x)) if g is not None else None
        res = minimize(
            neg_f,
            x0,
            method="BFGS",
            jac=neg_g,
            options={"maxiter": cfg.max_iter, "gtol": 1e-7},
        )
    x_best, v_best = res.x, -res.fun
    if v_best < f0:
        x_best, v_best = x0, f0
    gnorm = None
    if g is not None:
        gnorm = float(np.abs(g(x_best)).max())
    iters = int(getattr(res, "nit", 0))
    return OptimResult(
        argmax=x_best,
        value=float(v_best),
        iterations=iters,
        converged=bool(res.success),
        gradient_norm=gnorm,
    )


def _steps(x: np.ndarray, fd_step: float) -> np.ndarray:
    return fd_step * np.maximum(1.0, np.abs(x))


def _probe(f, x):
    v = f(x)
    if not np.isfinite(v):
        raise ValueError(f"non-finite objective value at probe point {x}")
    return v


def central_gradient(f, x, fd_step: float = 1e-6) -> np.ndarray:
    """O(h^2) central-difference gradient with relative steps."""
    x = np.atleast_1d(np.asarray(x, float))
    h = _steps(x, fd_step)
    grad = np.empty(x.size)
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = h[k]
        grad[k] = (_probe(f, x + e) - _probe(f, x - e)) / (2 * h[k])
    return grad


def numeric_hessian(f, x, fd_step: float = 1e-4) -> np.ndarray:
    """O(h^2) central-difference Hessian, symmetrized as (H + H')/2."""
    x = np.atleast_1d(np.asarray(x, float))
    n = x.size
    h = _steps(x, fd_step)
    H = np.empty((n, n))
    f0 = _probe(f, x)
    for k in range(n):
        ek = np.zeros(n)
        ek[k] = h[k]
        H[k, k] = (_probe(f, x + ek) - 2 * f0 + _probe(f, x - ek)) / h[k] ** 2
        for l in range(k + 1, n):
            el = np.zeros(n)
            el[l] = h[l]
            H[k, l] = H[l, k] = (
                _probe(f, x + ek + el)
                - _probe(f, x + ek - el)
                - _probe(f, x - ek + el)
                + _probe(f, x - ek - el)
            ) / (4 * h[k] * h[l])
    return 0.5 * (H + H.T)
