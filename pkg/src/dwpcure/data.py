"""Right-censored survival data with two disjoint covariate blocks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Dataset:
    """Observed data (t_i, delta_i, x_i, z_i) for n subjects.

    ``x`` feeds the destruction-probability link and the gamma2 lifetime
    coefficients; ``z`` feeds the cause-intensity link and gamma3.  Times
    must be strictly positive (the derivative formulas contain log t).
    """

    t: np.ndarray
    delta: np.ndarray
    x: np.ndarray
    z: np.ndarray
    x_names: list[str] = field(default_factory=list)
    z_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.t = np.asarray(self.t, float).ravel()
        self.delta = np.asarray(self.delta, int).ravel()
        self.x = np.atleast_2d(np.asarray(self.x, float))
        self.z = np.atleast_2d(np.asarray(self.z, float))
        if self.x.shape[0] != self.t.size:
            self.x = self.x.T
        if self.z.shape[0] != self.t.size:
            self.z = self.z.T
        n = self.t.size
        if self.delta.size != n or self.x.shape[0] != n or self.z.shape[0] != n:
            raise ValueError("t, delta, x, z must agree on the number of subjects")
        if np.any(self.t <= 0):
            bad = int(np.argmax(self.t <= 0))
            raise ValueError(f"nonpositive time at row {bad}: t={self.t[bad]}")
        if not np.isin(self.delta, (0, 1)).all():
            raise ValueError("delta must contain only 0 and 1")
        if not self.x_names:
            self.x_names = [f"x{j + 1}" for j in range(self.x.shape[1])]
        if not self.z_names:
            self.z_names = [f"z{j + 1}" for j in range(self.z.shape[1])]
        if set(self.x_names) & set(self.z_names):
            raise ValueError("x and z covariate names must be disjoint")

    @property
    def n(self) -> int:
        return self.t.size

    @property
    def q1(self) -> int:
        return self.x.shape[1]

    @property
    def q2(self) -> int:
        return self.z.shape[1]

    @property
    def n_events(self) -> int:
        return int(self.delta.sum())

    @property
    def censoring_fraction(self) -> float:
        return 1.0 - self.n_events / self.n

    @property
    def event_mask(self) -> np.ndarray:
        return self.delta == 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            np.array_equal(self.t, other.t)
            and np.array_equal(self.delta, other.delta)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
            and self.x_names == other.x_names
            and self.z_names == other.z_names
        )
