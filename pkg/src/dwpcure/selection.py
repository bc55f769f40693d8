"""Information criteria and cure-rate comparison metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .em import FitResult

CRITERIA = ("AIC", "BIC", "loglik")


@dataclass(frozen=True)
class ModelScore:
    label: str
    loglik: float
    n_params: int
    aic: float
    bic: float


def score(fit: FitResult, n: int) -> ModelScore:
    """AIC = -2 l + 2k and BIC = -2 l + k log n for a fitted model."""
    if n <= 0:
        raise ValueError("sample size must be positive")
    k = fit.n_params
    return ModelScore(
        label=fit.family.label,
        loglik=fit.loglik,
        n_params=k,
        aic=-2.0 * fit.loglik + 2.0 * k,
        bic=-2.0 * fit.loglik + k * math.log(n),
    )


def rank(scores: list[ModelScore], criterion: str = "AIC") -> list[ModelScore]:
    """Order models best-first; ties go to fewer parameters, then label."""
    if not scores:
        raise ValueError("scores must be nonempty")
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}")
    if criterion == "AIC":
        key = lambda s: (s.aic, s.n_params, s.label)
    elif criterion == "BIC":
        key = lambda s: (s.bic, s.n_params, s.label)
    else:
        key = lambda s: (-s.loglik, s.n_params, s.label)
    return sorted(scores, key=key)


def cure_rate_metrics(true_pi0, est_pi0):
    """(total relative bias as a percentage, total mean squared error).

    TRB sums |est - true| / true over subjects; TMSE sums the squared
    errors and divides by n - 1.
    """
    true_pi0 = np.asarray(true_pi0, float).ravel()
    est_pi0 = np.asarray(est_pi0, float).ravel()
    if true_pi0.size != est_pi0.size:
        raise ValueError("cure-rate vectors must have equal length")
    n = true_pi0.size
    if n < 2:
        raise ValueError("TMSE needs at least two subjects (n - 1 denominator)")
    if np.any(true_pi0 <= 0):
        raise ValueError("true cure rates must be strictly positive")
    diff = est_pi0 - true_pi0
    trb = float(np.sum(np.abs(diff) / true_pi0))
    tmse = float(np.sum(diff**2) / (n - 1))
    return 100.0 * trb, tmse


def total_relative_bias(true_pi0, est_pi0) -> float:
    """The raw (unscaled) TRB sum."""
    return cure_rate_metrics(true_pi0, est_pi0)[0] / 100.0
