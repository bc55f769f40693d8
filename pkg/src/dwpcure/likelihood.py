"""Observed-data log-likelihood, E-step weights and the EM Q-function.

The Q-function (expected complete-data log-likelihood) decomposes, for
every family, into event terms plus weighted censored terms:

    Q = sum_{events} log f_p(t_i)
        + sum_{censored} (1 - xi_i) log pi0_i + xi_i log(S_p(t_i) - pi0_i)

with xi_i the conditional probability that a censored subject is still
susceptible.  The family-specific closed forms used below follow from the
DLBP/DEWP/DNB population survival and density functions.

Analytic gradients and Hessians of Q over the stacked parameter vector
(eta-link coefficients, p-link coefficients, gamma) are assembled with
forward-mode jets on top of the closed-form Weibull derivative bundles,
so they are exact and automatically consistent with the value path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import weibull
from .data import Dataset
from .families import Family, InvalidParameterError, ModelFamily
from .jets import Jet
from .weibull import LifetimeParams

PENALTY = -1e10
LOGLIK_INFEASIBLE = -np.inf


class InfeasibleParameterError(ValueError):
    """A log argument is nonpositive at the proposed parameter value."""


class SingularInformationError(np.linalg.LinAlgError):
    def __init__(self, msg, condition_number=None, eigenvalues=None):
        super().__init__(msg)
        self.condition_number = condition_number
        self.eigenvalues = eigenvalues


@dataclass(frozen=True)
class RegressionParams:
    """Link coefficients under the default layout: alpha on z (no
    intercept, log-linear eta), beta on (1, x) (logit p)."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.atleast_1d(np.asarray(self.alpha, float)))
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, float)))


def subject_links(rp: RegressionParams, x_i, z_i):
    """(eta_i, p_i) for one subject: eta = exp(alpha'z), p = logistic(beta'(1,x))."""
    z_i = np.atleast_1d(np.asarray(z_i, float))
    x_i = np.atleast_1d(np.asarray(x_i, float))
    if z_i.size != rp.alpha.size or x_i.size + 1 != rp.beta.size:
        raise ValueError("covariate dimensions do not match the coefficients")
    eta = math.exp(float(rp.alpha @ z_i))
    lin = float(rp.beta[0] + rp.beta[1:] @ x_i)
    # logistic saturates at the float boundary rather than overflowing
    p = 1.0 / (1.0 + math.exp(-min(max(lin, -700.0), 700.0)))
    return eta, p


@dataclass(frozen=True)
class LinkLayout:
    """Which covariate block feeds each link, and where intercepts sit.

    L1 is the identifiable default (eta on z without intercept, p on x
    with intercept); L2 swaps the blocks; L3/L4 move the intercept into
    the eta link instead.
    """

    name: str
    eta_block: str  # "x", "z" or "xz"
    eta_intercept: bool
    p_block: str | None
    p_intercept: bool


LAYOUTS = {
    "L1": LinkLayout("L1", "z", False, "x", True),
    "L2": LinkLayout("L2", "x", False, "z", True),
    "L3": LinkLayout("L3", "z", True, "x", False),
    "L4": LinkLayout("L4", "x", True, "z", False),
}
P_ONE_LAYOUT = LinkLayout("P1", "xz", True, None, False)


def _design(data: Dataset, block: str | None, intercept: bool):
    cols, names = [], []
    if intercept:
        cols.append(np.ones((data.n, 1)))
        names.append("intercept")
    if block in ("x", "xz"):
        cols.append(data.x)
        names.extend(data.x_names)
    if block in ("z", "xz"):
        cols.append(data.z)
        names.extend(data.z_names)
    if not cols:
        return np.empty((data.n, 0)), []
    return np.hstack(cols), names


class CureModel:
    """A destructive cure model bound to a dataset and a link layout."""

    def __init__(self, fam: ModelFamily, data: Dataset, layout: LinkLayout | str = "L1"):
        if isinstance(layout, str):
            layout = LAYOUTS[layout]
        if fam.p_fixed_at_one:
            layout = P_ONE_LAYOUT
        self.fam = fam
        self.data = data
        self.layout = layout
        self.E, self.eta_names = _design(data, layout.eta_block, layout.eta_intercept)
        self.P, self.p_names = _design(data, layout.p_block, layout.p_intercept)
        self.ke = self.E.shape[1]
        self.kp = self.P.shape[1]
        self.q1, self.q2 = data.q1, data.q2
        self.d = self.ke + self.kp + 2 + self.q1 + self.q2
        self.sl_eta = slice(0, self.ke)
        self.sl_p = slice(self.ke, self.ke + self.kp)
        self.sl_gamma = slice(self.ke + self.kp, self.d)
        self._evt = data.event_mask
        self._cen = ~self._evt
        # coordinates constrained to be positive (Weibull shape and scale)
        self.positive_mask = np.zeros(self.d, bool)
        self.positive_mask[self.sl_gamma.start : self.sl_gamma.start + 2] = True

    # -- bookkeeping -------------------------------------------------------
    @property
    def n_params(self) -> int:
        """Fitted parameters: theta* plus phi when profiled."""
        return self.d + (1 if self.fam.phi_is_free else 0)

    @property
    def param_names(self) -> list[str]:
        eta = [f"eta:{c}" for c in self.eta_names]
        p = [f"p:{c}" for c in self.p_names]
        gam = (
            ["gamma0", "gamma1"]
            + [f"gamma2:{c}" for c in self.data.x_names]
            + [f"gamma3:{c}" for c in self.data.z_names]
        )
        return eta + p + gam

    def lifetime_params(self, theta_star) -> LifetimeParams:
        g = np.asarray(theta_star, float)[self.sl_gamma]
        return LifetimeParams.from_vector(g, self.q1, self.q2)

    def links(self, theta_star):
        """Per-subject (eta, p) vectors."""
        th = np.asarray(theta_star, float)
        eta = np.exp(self.E @ th[self.sl_eta]) if self.ke else np.ones(self.data.n)
        if self.kp:
            lin = np.clip(self.P @ th[self.sl_p], -700, 700)
            p = 1.0 / (1.0 + np.exp(-lin))
        else:
            p = np.ones(self.data.n)
        return eta, p

    def _check_theta(self, theta_star):
        th = np.asarray(theta_star, float)
        if th.size != self.d:
            raise ValueError(f"theta* must have length {self.d}, got {th.size}")
        if not np.all(np.isfinite(th)):
            raise ValueError("theta* contains non-finite entries")
        if th[self.sl_gamma][0] <= 0 or th[self.sl_gamma][1] <= 0:
            return None
        return th

    def _pieces(self, theta_star):
        """(eta, p, L, S, F) plus logf on event rows; None if gamma invalid."""
        th = self._check_theta(theta_star)
        if th is None:
            return None
        lp = self.lifetime_params(th)
        eta, p = self.links(th)
        L = weibull.log_survival(self.data.t, self.data.x, self.data.z, lp)
        S = np.exp(L)
        F = -np.expm1(L)
        return eta, p, L, S, F, lp

    # -- observed likelihood ----------------------------------------------
    def loglik(self, theta_star, phi: float | None = None) -> float:
        """Observed-data log-likelihood; -inf marks infeasible DLBP points."""
        pieces = self._pieces(theta_star)
        if pieces is None:
            return LOGLIK_INFEASIBLE
        eta, p, L, S, F, lp = pieces
        evt, cen = self._evt, self._cen
        t, x, z = self.data.t, self.data.x, self.data.z
        fam = self.fam.family
        with np.errstate(divide="ignore"):
            logf = np.where(
                evt,
                np.log(lp.gamma0) - np.log(t) + np.log(np.maximum(-L, 1e-320)) + L,
                0.0,
            )
        if fam is Family.DEWP:
            phi = self.fam.validate_phi(phi)
            M = eta * p * math.exp(phi)
            log_fp = np.log(M) + logf - M * F
            log_sp = -M * F
        elif fam is Family.DLBP:
            bracket = 1 - p * F + 1.0 / eta
            if np.any(bracket[evt] <= 0):
                return LOGLIK_INFEASIBLE
            with np.errstate(divide="ignore"):
                log_fp = (
                    np.log(eta * p)
                    + logf
                    - eta * p * F
                    + np.log(np.where(evt, bracket, 1.0))
                )
            log_sp = -eta * p * F + np.log1p(-p * F)
        else:
            phi = self.fam.validate_phi(phi)
            EF = np.log1p(phi * eta * p * F)
            log_fp = np.log(eta * p) + logf - (1.0 / phi + 1.0) * EF
            log_sp = -EF / phi
        out = float(log_fp[evt].sum() + log_sp[cen].sum())
        return out if np.isfinite(out) else LOGLIK_INFEASIBLE

    # -- E-step ------------------------------------------------------------
    def e_step(self, theta_star, phi: float | None = None) -> np.ndarray:
        """xi_i = 1 - pi0_i / S_p(t_i) for censored subjects, in data order."""
        pieces = self._pieces(theta_star)
        if pieces is None:
            raise InfeasibleParameterError("invalid gamma in E-step")
        eta, p, L, S, F, lp = pieces
        fam = self.fam.family
        if fam is Family.DEWP:
            phi = self.fam.validate_phi(phi)
            M = eta * p * math.exp(phi)
            log_ratio = -M + M * F  # log(pi0 / S_p) = -M S
        elif fam is Family.DLBP:
            log_ratio = -(eta * p * S + np.log1p(p * S / (1 - p)))
        else:
            phi = self.fam.validate_phi(phi)
            E = phi * eta * p
            log_ratio = -np.log1p(E * S / (1 + E * F)) / phi
        xi = -np.expm1(log_ratio)
        return np.clip(xi[self._cen], 0.0, 1.0)

    # -- Q-function --------------------------------------------------------
    def q_value(self, theta_star, xi, phi: float | None = None) -> float:
        """Family-specific Q; returns PENALTY * violations when infeasible."""
        pieces = self._pieces(theta_star)
        if pieces is None:
            return PENALTY
        eta, p, L, S, F, lp = pieces
        evt, cen = self._evt, self._cen
        t = self.data.t
        xi = np.asarray(xi, float)
        if xi.size != int(cen.sum()):
            raise ValueError("xi must have one weight per censored subject")
        if evt.any():
            # log(-L) is -inf when S = 1 exactly (zero density at an event
            # time); the resulting -inf Q correctly rejects the candidate
            with np.errstate(divide="ignore"):
                logf_e = np.log(lp.gamma0) - np.log(t[evt]) + np.log(-L[evt]) + L[evt]
        else:
            logf_e = np.zeros(0)
        fam = self.fam.family
        active = xi > 0.0  # zero-weight censored terms contribute nothing
        if fam is Family.DEWP:
            phi = self.fam.validate_phi(phi)
            M = eta * p * math.exp(phi)
            MS_c = (M * S)[cen][active]
            if np.any(MS_c < 1e-300):
                return PENALTY * float(np.sum(MS_c < 1e-300))
            cen_term = float(
                xi[active] @ (MS_c + np.log(-np.expm1(-MS_c)))
            )
            return float(
                np.log(M[evt]).sum()
                + (M * S)[evt].sum()
                + logf_e.sum()
                - M.sum()
                + cen_term
            )
        if fam is Family.DLBP:
            B = 1 - p[evt] * F[evt] + 1.0 / eta[evt]
            # censored term log(e^u - 1) with u = eta p S + log[(1-pF)/(1-p)];
            # the log ratio is written as log1p(pS/(1-p)) so u stays accurate
            # (proportional to S) instead of cancelling as F -> 1
            u = ((eta * p * S)[cen] + np.log1p((p * S)[cen] / (1 - p[cen])))[active]
            bad = int(np.sum(B <= 0) + np.sum(u < 1e-300))
            if bad:
                return PENALTY * bad
            return float(
                np.log(eta[evt] * p[evt]).sum()
                + logf_e.sum()
                - (eta * p * F)[evt].sum()
                + np.log(B).sum()
                - (eta * p)[cen].sum()
                + np.log1p(-p[cen]).sum()
                + xi[active] @ (u + np.log(-np.expm1(-u)))
            )
        phi = self.fam.validate_phi(phi)
        E = phi * eta * p
        # u = log[(1+E)/(1+EF)]/phi, written cancellation-free via the
        # identity (1+E)/(1+EF) = 1 + E S/(1+EF)
        u = (np.log1p(E * S / (1 + E * F)) / phi)[cen][active]
        if np.any(u < 1e-300):
            return PENALTY * float(np.sum(u < 1e-300))
        cen_term = float(xi[active] @ (u + np.log(-np.expm1(-u))))
        return float(
            np.log(eta[evt] * p[evt]).sum()
            - (1.0 / phi + 1.0) * np.log1p((E * F)[evt]).sum()
            + logf_e.sum()
            - np.log1p(E[cen]).sum() / phi
            + cen_term
        )

    # -- analytic Q derivatives -------------------------------------------
    def _component_jets(self, theta_star, with_hess: bool):
        th = np.asarray(theta_star, float)
        d = self.d
        n = self.data.n
        lp = self.lifetime_params(th)
        eta_v, p_v = self.links(th)

        def embed(vals, block_grad, block_hess, sl):
            grad = np.zeros((n, d))
            grad[:, sl] = block_grad
            hess = None
            if with_hess:
                hess = np.zeros((n, d, d))
                hess[:, sl, sl] = block_hess
            return Jet(vals, grad, hess)

        if self.ke:
            dE = eta_v[:, None] * self.E
            hE = eta_v[:, None, None] * self.E[:, :, None] * self.E[:, None, :]
            eta_j = embed(eta_v, dE, hE, self.sl_eta)
        else:
            eta_j = Jet.constant(eta_v, d, with_hess)
        if self.kp:
            w1 = p_v * (1 - p_v)
            dP = w1[:, None] * self.P
            hP = (w1 * (1 - 2 * p_v))[:, None, None] * self.P[:, :, None] * self.P[
                :, None, :
            ]
            p_j = embed(p_v, dP, hP, self.sl_p)
        else:
            p_j = Jet.constant(p_v, d, with_hess)

        t, x, z = self.data.t, self.data.x, self.data.z
        Sb = weibull.survival_derivatives(t, x, z, lp)
        S_j = embed(Sb.value, Sb.grad, Sb.hess if with_hess else None, self.sl_gamma)
        lf = weibull.log_pdf_derivatives(t, x, z, lp)
        logf_j = embed(lf.value, lf.grad, lf.hess if with_hess else None, self.sl_gamma)
        return eta_j, p_j, S_j, logf_j

    @staticmethod
    def _take(j: Jet, idx) -> Jet:
        return Jet(
            j.val[idx], j.grad[idx], None if j.hess is None else j.hess[idx]
        )

    def _q_derivatives(self, theta_star, xi, phi, with_hess: bool):
        if self._check_theta(theta_star) is None:
            raise InfeasibleParameterError("invalid gamma block")
        xi = np.asarray(xi, float)
        evt = np.flatnonzero(self._evt)
        cen = np.flatnonzero(self._cen)
        active = xi > 0.0
        cen_a = cen[active]
        xi_a = xi[active]
        eta_j, p_j, S_j, logf_j = self._component_jets(theta_star, with_hess)
        fam = self.fam.family

        def gsum(jet, idx=None, weights=None):
            sub = jet if idx is None else self._take(jet, idx)
            return sub.sum(weights)

        if fam is Family.DEWP:
            phi = self.fam.validate_phi(phi)
            M = eta_j * p_j * math.exp(phi)
            MS = M * S_j
            if np.any(MS.val[cen_a] < 1e-300):
                raise InfeasibleParameterError("DEWP censored term underflow")
            terms = [
                gsum(self._take(M, evt).log() + self._take(MS, evt) + self._take(logf_j, evt)),
                gsum(-M),
                gsum(self._take(MS, cen_a).log_expm1(), weights=xi_a),
            ]
        elif fam is Family.DLBP:
            F_j = 1.0 - S_j
            ep = eta_j * p_j
            B = 1.0 - p_j * F_j + 1.0 / eta_j
            if np.any(B.val[evt] <= 0):
                raise InfeasibleParameterError("DLBP density bracket <= 0")
            u_j = self._take(
                ep * S_j + (p_j * S_j / (1.0 - p_j)).log1p(), cen_a
            )
            if np.any(u_j.val < 1e-300):
                raise InfeasibleParameterError("DLBP censored term <= 0")
            terms = [
                gsum(
                    self._take(ep, evt).log()
                    + self._take(logf_j, evt)
                    - self._take(ep * F_j, evt)
                    + self._take(B, evt).log()
                ),
                gsum(-self._take(ep, cen) + self._take(1.0 - p_j, cen).log()),
                gsum(u_j.log_expm1(), weights=xi_a),
            ]
        else:
            phi = self.fam.validate_phi(phi)
            F_j = 1.0 - S_j
            E_j = eta_j * p_j * phi
            u = self._take((E_j * S_j / (1.0 + E_j * F_j)).log1p(), cen_a) * (
                1.0 / phi
            )
            if np.any(u.val < 1e-300):
                raise InfeasibleParameterError("DNB censored term <= 0")
            terms = [
                gsum(
                    self._take(eta_j * p_j, evt).log()
                    - (1.0 / phi + 1.0) * (1.0 + self._take(E_j * F_j, evt)).log()
                    + self._take(logf_j, evt)
                ),
                gsum(-(1.0 / phi) * (1.0 + self._take(E_j, cen)).log()),
                gsum(u.log_expm1(), weights=xi_a),
            ]
        value = sum(t[0] for t in terms)
        grad = sum(t[1] for t in terms)
        hess = None
        if with_hess:
            hess = sum(t[2] for t in terms)
            hess = 0.5 * (hess + hess.T)
        return value, grad, hess

    def q_gradient(self, theta_star, xi, phi: float | None = None) -> np.ndarray:
        return self._q_derivatives(theta_star, xi, phi, with_hess=False)[1]

    def q_hessian(self, theta_star, xi, phi: float | None = None) -> np.ndarray:
        return self._q_derivatives(theta_star, xi, phi, with_hess=True)[2]

    # -- observed information ---------------------------------------------
    def observed_information(self, theta_hat, phi: float | None = None, fd_step=1e-4):
        """Negative numeric Hessian of the observed log-likelihood and its
        inverse, with phi held at its profiled value."""
        from .optimize import numeric_hessian

        H = numeric_hessian(lambda th: self.loglik(th, phi), np.asarray(theta_hat, float), fd_step)
        info = -H
        eigvals = np.linalg.eigvalsh(info)
        cond = float(abs(eigvals).max() / max(abs(eigvals).min(), 1e-300))
        if eigvals.min() <= 0 or cond > 1e12:
            raise SingularInformationError(
                f"observed information not positive definite (cond={cond:.3g})",
                condition_number=cond,
                eigenvalues=eigvals,
            )
        cov = np.linalg.inv(info)
        return info, cov


# -- spec-level convenience wrappers (default L1 layout) -------------------
def observed_loglik(fam: ModelFamily, theta_star, data: Dataset, phi=None) -> float:
    return CureModel(fam, data).loglik(theta_star, phi)


def e_step(fam: ModelFamily, theta_star, data: Dataset, phi=None) -> np.ndarray:
    return CureModel(fam, data).e_step(theta_star, phi)


def q_value(fam: ModelFamily, theta_star, xi, data: Dataset, phi=None) -> float:
    return CureModel(fam, data).q_value(theta_star, xi, phi)


def q_gradient(fam: ModelFamily, theta_star, xi, data: Dataset, phi=None) -> np.ndarray:
    return CureModel(fam, data).q_gradient(theta_star, xi, phi)


def q_hessian(fam: ModelFamily, theta_star, xi, data: Dataset, phi=None) -> np.ndarray:
    return CureModel(fam, data).q_hessian(theta_star, xi, phi)


def observed_information(fam: ModelFamily, theta_hat, data: Dataset, phi=None):
    return CureModel(fam, data).observed_information(theta_hat, phi)
