"""Competing-cause count distributions for destructive cure models.

Three families are supported for the latent number of initial causes M:
length-biased Poisson (DLBP), exponentially weighted Poisson (DEWP) and
negative binomial (DNB).  Each cause independently survives the destructive
process with probability p, so the number of undamaged causes D is a
binomial thinning of M.  All three families admit closed forms for the
distribution of D, the cure rate P(D=0), and the population survival and
density functions obtained by compounding D with a lifetime distribution.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln


class InvalidParameterError(ValueError):
    """Parameters outside the admissible range of the chosen family."""


class DensityInfeasibleError(ValueError):
    """A population-density bracket is nonpositive at the requested point.

    Callers must treat such points as infeasible rather than clamping,
    which would corrupt likelihood values.
    """


class Family(enum.Enum):
    DLBP = "DLBP"
    DEWP = "DEWP"
    DNB = "DNB"


@dataclass(frozen=True)
class ModelFamily:
    """A competing-cause family together with its sub-model constraints.

    ``p_fixed_at_one`` disables the destructive mechanism (D = M), and
    ``phi_fixed`` pins the weight parameter instead of profiling it.
    The named sub-models arise as:

    ======  ==================  =================
    label   base family         constraint
    ======  ==================  =================
    DP      DEWP                phi = 0
    EWP     DEWP                p = 1
    Poisson DEWP                p = 1, phi = 0
    DG      DNB                 phi = 1
    NB      DNB                 p = 1
    Geometric DNB               p = 1, phi = 1
    ======  ==================  =================
    """

    family: Family
    p_fixed_at_one: bool = False
    phi_fixed: float | None = None

    def __post_init__(self):
        if self.family is Family.DLBP:
            if self.phi_fixed is not None:
                raise InvalidParameterError("DLBP admits no phi parameter")
            if self.p_fixed_at_one:
                raise InvalidParameterError(
                    "DLBP with p=1 has zero cure rate and is not a valid cure model"
                )
        if self.family is Family.DNB and self.phi_fixed is not None:
            if self.phi_fixed <= 0:
                raise InvalidParameterError("DNB requires phi > 0")

    @property
    def has_phi(self) -> bool:
        """Whether the family carries a weight parameter at all."""
        return self.family is not Family.DLBP

    @property
    def phi_is_free(self) -> bool:
        return self.has_phi and self.phi_fixed is None

    @property
    def label(self) -> str:
        fam, p1, phi = self.family, self.p_fixed_at_one, self.phi_fixed
        if fam is Family.DLBP:
            return "DLBP"
        if fam is Family.DEWP:
            if p1:
                return "Poisson" if phi == 0 else "EWP"
            return "DP" if phi == 0 else "DEWP"
        if p1:
            return "Geometric" if phi == 1 else "NB"
        return "DG" if phi == 1 else "DNB"

    @classmethod
    def from_label(cls, label: str) -> "ModelFamily":
        """Parse a model name such as 'DNB', 'DP' or 'Geometric'."""
        table = {
            "DLBP": (Family.DLBP, False, None),
            "DEWP": (Family.DEWP, False, None),
            "DP": (Family.DEWP, False, 0.0),
            "EWP": (Family.DEWP, True, None),
            "POISSON": (Family.DEWP, True, 0.0),
            "DNB": (Family.DNB, False, None),
            "DG": (Family.DNB, False, 1.0),
            "NB": (Family.DNB, True, None),
            "GEOMETRIC": (Family.DNB, True, 1.0),
        }
        key = label.strip().upper()
        if key not in table:
            raise InvalidParameterError(
                f"unknown model {label!r}; expected one of "
                "DLBP, DEWP, DP, EWP, Poisson, DNB, DG, NB, Geometric"
            )
        fam, p1, phi = table[key]
        return cls(fam, p_fixed_at_one=p1, phi_fixed=phi)

    def validate_phi(self, phi: float | None) -> float:
        """Resolve and range-check phi for this family.

        Returns 0.0 for DLBP, which has no weight parameter (the value is
        never used).
        """
        if self.family is Family.DLBP:
            return 0.0
        if self.phi_fixed is not None:
            if phi is not None and phi != self.phi_fixed:
                raise InvalidParameterError(
                    f"phi={phi} conflicts with fixed phi={self.phi_fixed}"
                )
            phi = self.phi_fixed
        if phi is None:
            raise InvalidParameterError(f"{self.label} requires a phi value")
        if self.family is Family.DNB and phi <= 0:
            raise InvalidParameterError("DNB requires phi > 0")
        return float(phi)


@dataclass(frozen=True)
class CauseParams:
    """Scalar parameters of the competing-cause layer for one subject."""

    eta: float
    p: float
    phi: float = 0.0

    def validate(self, fam: ModelFamily) -> None:
        if not (self.eta > 0):
            raise InvalidParameterError(f"eta must be positive, got {self.eta}")
        if not (0 < self.p <= 1):
            raise InvalidParameterError(f"p must lie in (0, 1], got {self.p}")
        if fam.family is Family.DNB and not (self.phi > 0):
            raise InvalidParameterError(f"DNB requires phi > 0, got {self.phi}")


def _log_nbinom_pmf(k: int, inv_phi: float, rate: float, phi: float) -> float:
    # pmf = Gamma(k + 1/phi) / (Gamma(1/phi) k!) * (phi*rate/(1+phi*rate))^k
    #       * (1+phi*rate)^(-1/phi)
    lr = math.log(phi * rate) - math.log1p(phi * rate)
    return (
        gammaln(k + inv_phi)
        - gammaln(inv_phi)
        - gammaln(k + 1)
        + k * lr
        - inv_phi * math.log1p(phi * rate)
    )


def _log_poisson_pmf(k: int, rate: float) -> float:
    return k * math.log(rate) - rate - gammaln(k + 1)


def pmf_m(fam: ModelFamily, m: int, cp: CauseParams) -> float:
    """P(M = m): mass function of the initial number of competing causes."""
    cp.validate(fam)
    if m < 0:
        return 0.0
    if fam.family is Family.DLBP:
        # Poisson shifted up by one.
        if m == 0:
            return 0.0
        return math.exp(_log_poisson_pmf(m - 1, cp.eta))
    if fam.family is Family.DEWP:
        return math.exp(_log_poisson_pmf(m, cp.eta * math.exp(cp.phi)))
    return math.exp(_log_nbinom_pmf(m, 1.0 / cp.phi, cp.eta, cp.phi))


def pmf_d(fam: ModelFamily, d: int, cp: CauseParams) -> float:
    """P(D = d): mass function of the undamaged causes after binomial thinning."""
    cp.validate(fam)
    if d < 0:
        return 0.0
    eta, p = cp.eta, cp.p
    if fam.family is Family.DLBP:
        return math.exp(_log_poisson_pmf(d, eta * p)) * (1 - p + d / eta)
    if fam.family is Family.DEWP:
        return math.exp(_log_poisson_pmf(d, eta * p * math.exp(cp.phi)))
    return math.exp(_log_nbinom_pmf(d, 1.0 / cp.phi, eta * p, cp.phi))


def cure_rate(fam: ModelFamily, cp: CauseParams) -> float:
    """P(D = 0): the cured fraction under this family."""
    return pmf_d(fam, 0, cp)


def log_population_survival(fam: ModelFamily, cp: CauseParams, F_of_t) -> np.ndarray | float:
    """log S_p evaluated at lifetime cdf value(s) F_of_t, computed in log space."""
    cp.validate(fam)
    F = np.asarray(F_of_t, dtype=float)
    if np.any(F < 0) or np.any(F > 1):
        raise ValueError("F_of_t must lie in [0, 1]")
    eta, p = cp.eta, cp.p
    if fam.family is Family.DLBP:
        out = -eta * p * F + np.log1p(-p * F)
    elif fam.family is Family.DEWP:
        out = -eta * p * math.exp(cp.phi) * F
    else:
        out = -np.log1p(p * eta * cp.phi * F) / cp.phi
    return out if out.ndim else float(out)


def population_survival(fam: ModelFamily, cp: CauseParams, F_of_t) -> np.ndarray | float:
    """S_p: probability of surviving beyond the time where the lifetime cdf is F_of_t.

    Decreases from 1 at F=0 to the cure rate at F=1.
    """
    out = np.exp(log_population_survival(fam, cp, F_of_t))
    return out if np.ndim(out) else float(out)


def population_density(fam: ModelFamily, cp: CauseParams, F_of_t, f_of_t) -> np.ndarray | float:
    """f_p = -dS_p/dt, the improper population density.

    Raises DensityInfeasibleError if a density bracket turns nonpositive;
    silent clamping would corrupt likelihood values.
    """
    cp.validate(fam)
    F = np.asarray(F_of_t, dtype=float)
    f = np.asarray(f_of_t, dtype=float)
    if np.any(F < 0) or np.any(F > 1):
        raise ValueError("F_of_t must lie in [0, 1]")
    if np.any(f < 0):
        raise ValueError("f_of_t must be nonnegative")
    eta, p = cp.eta, cp.p
    if fam.family is Family.DLBP:
        # -d/dt [(1 - pF) e^{-eta p F}] = eta p f e^{-eta p F} (1 - pF + 1/eta)
        bracket = 1 - p * F + 1.0 / eta
        if np.any(bracket <= 0):
            raise DensityInfeasibleError(
                f"DLBP density bracket nonpositive (eta={eta}, p={p})"
            )
        out = eta * p * f * np.exp(-eta * p * F) * bracket
    elif fam.family is Family.DEWP:
        rate = eta * p * math.exp(cp.phi)
        out = rate * f * np.exp(-rate * F)
    else:
        out = eta * p * f * np.exp(-(1.0 / cp.phi + 1) * np.log1p(p * eta * cp.phi * F))
    return out if out.ndim else float(out)
