"""Product-limit (Kaplan-Meier) survival estimate, optionally stratified."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset


@dataclass(frozen=True)
class KMCurve:
    """Step function: survival[k] applies on [times[k], times[k+1])."""

    times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, float)
        idx = np.searchsorted(self.times, t, side="right") - 1
        out = np.ones(t.shape)
        inside = idx >= 0
        out[inside] = self.survival[idx[inside]]
        return out


def km_estimate(data: Dataset) -> KMCurve:
    """Kaplan-Meier estimate from right-censored (t, delta) pairs."""
    order = np.argsort(data.t, kind="stable")
    t, delta = data.t[order], data.delta[order]
    times, inv = np.unique(t, return_inverse=True)
    d = np.bincount(inv, weights=delta, minlength=times.size)
    removed = np.bincount(inv, minlength=times.size)
    at_risk = data.n - np.concatenate(([0], np.cumsum(removed)[:-1]))
    surv = np.cumprod(1.0 - d / at_risk)
    return KMCurve(times=times, survival=surv, at_risk=at_risk.astype(int), events=d.astype(int))


def km_by_stratum(data: Dataset, labels) -> dict:
    """One KM curve per stratum label (labels aligned with subjects)."""
    labels = np.asarray(labels)
    if labels.size != data.n:
        raise ValueError("labels must have one entry per subject")
    curves = {}
    for lab in np.unique(labels):
        m = labels == lab
        sub = Dataset(
            data.t[m], data.delta[m], data.x[m], data.z[m],
            list(data.x_names), list(data.z_names),
        )
        curves[lab] = km_estimate(sub)
    return curves
