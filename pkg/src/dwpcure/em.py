"""EM fitting loop, profile likelihood over phi, standard errors, LR tests.

The weight parameter phi is never updated inside the EM loop: the loop is
run to convergence for each phi on a grid, and the grid point with the
largest observed log-likelihood wins (ties broken toward smaller |phi|).
Standard errors condition on the profiled phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit
from scipy.stats import chi2

from .data import Dataset
from .families import Family, ModelFamily
from .likelihood import CureModel, InfeasibleParameterError, PENALTY
from .optimize import OptimizerConfig, maximize

DEFAULT_PHI_GRIDS = {
    Family.DEWP: np.round(np.arange(-2.0, 2.0 + 1e-9, 0.1), 10),
    Family.DNB: np.round(np.arange(0.10, 7.00 + 1e-9, 0.05), 10),
}


class NonIdentifiableDataError(ValueError):
    """No observed events: the susceptible-lifetime likelihood is vacuous."""


class FitFailureError(RuntimeError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class EMConfig:
    epsilon: float = 1e-6
    max_em_iter: int = 500
    phi_grid: np.ndarray | None = None  # None = family default
    n_starts: int = 5
    start_jitter: float = 0.15
    mstep_max_iter: int = 60
    compute_se: bool = True

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.phi_grid is not None:
            g = np.asarray(self.phi_grid, float)
            if g.size and np.any(np.diff(g) <= 0):
                raise ValueError("phi_grid must be strictly increasing")


@dataclass
class FitResult:
    family: ModelFamily
    theta_hat: np.ndarray
    phi_hat: float | None
    se: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    loglik: float
    aic: float
    bic: float
    n_params: int
    em_iterations: int
    profile_trace: list[tuple[float, float]]
    converged: bool
    param_names: list[str] = field(default_factory=list)
    free_mask: np.ndarray | None = None
    cov: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


def _mstep(model: CureModel, theta, xi, phi, cfg: EMConfig):
    """Maximize Q over the free coordinates; quasi-Newton with analytic
    gradients first, simplex fallback when the penalty region is hit."""
    f = lambda v: model.q_value(v, xi, phi)
    # run quasi-Newton with the positive coordinates (Weibull shape/scale)
    # on a log scale, so the line search never crosses their feasibility
    # boundary; the remaining infeasibility guards still fall back to simplex
    pos = model.positive_mask
    theta = np.asarray(theta, float)

    def to_internal(v):
        w = np.array(v, float)
        w[pos] = np.log(w[pos])
        return w

    def to_theta(w):
        v = np.array(w, float)
        v[pos] = np.exp(np.clip(v[pos], -700.0, 700.0))
        return v

    def fw(w):
        return f(to_theta(w))

    def gw(w):
        v = to_theta(w)
        grad = model.q_gradient(v, xi, phi)
        grad = np.array(grad, float)
        grad[pos] *= v[pos]  # chain rule for the log scale
        return grad

    try:
        res = maximize(
            fw,
            gw,
            to_internal(theta),
            OptimizerConfig(method="quasi_newton", max_iter=cfg.mstep_max_iter),
        )
        return to_theta(res.argmax)
    except (InfeasibleParameterError, ValueError, FloatingPointError):
        pass
    res = maximize(
        f,
        None,
        theta,
        OptimizerConfig(method="simplex", max_iter=40 * model.d),
    )
    return res.argmax


class _Masked:
    """Adapter pinning a subset of theta* coordinates at fixed values."""

    def __init__(self, model: CureModel, free_mask=None, fixed_values=None):
        self.model = model
        if free_mask is None:
            free_mask = np.ones(model.d, bool)
        self.free = np.asarray(free_mask, bool)
        self.base = np.zeros(model.d)
        if fixed_values is not None:
            self.base[~self.free] = np.asarray(fixed_values, float)[~self.free]

    def full(self, v):
        th = self.base.copy()
        th[self.free] = v
        return th

    def q_value(self, v, xi, phi):
        return self.model.q_value(self.full(v), xi, phi)

    def q_gradient(self, v, xi, phi):
        return self.model.q_gradient(self.full(v), xi, phi)[self.free]

    def e_step(self, v, phi):
        return self.model.e_step(self.full(v), phi)

    def loglik(self, v, phi):
        return self.model.loglik(self.full(v), phi)

    @property
    def d(self):
        return int(self.free.sum())

    @property
    def positive_mask(self):
        return self.model.positive_mask[self.free]


def em_fit_fixed_phi(model: CureModel, phi, x0, cfg: EMConfig, free_mask=None):
    """Run the EM loop at fixed phi.

    Returns (theta_star, loglik, iterations, converged, ascent_ok).
    """
    if model.data.n_events == 0:
        raise NonIdentifiableDataError(
            "dataset contains no events; cure model parameters are not identifiable"
        )
    x0 = np.asarray(x0, float)
    masked = _Masked(model, free_mask, x0)
    v = x0[masked.free]
    ll_prev = masked.loglik(v, phi)
    if not np.isfinite(ll_prev) or ll_prev <= PENALTY / 2:
        raise InfeasibleParameterError("starting value is infeasible")
    ascent_ok = True
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_em_iter + 1):
        xi = masked.e_step(v, phi)
        v_new = _mstep(masked, v, xi, phi, cfg)
        ll_new = masked.loglik(v_new, phi)
        if ll_new < ll_prev - 1e-8:
            ascent_ok = False
        # relative change, with unit floor so near-zero coefficients do not
        # stall the stopping rule
        delta = np.max(np.abs(v_new - v) / np.maximum(np.abs(v), 1.0))
        v, ll_prev = v_new, ll_new
        if delta < cfg.epsilon:
            converged = True
            break
    return masked.full(v), float(ll_prev), iterations, converged, ascent_ok


def default_start(model: CureModel) -> np.ndarray:
    """Data-driven starting value: logit of one minus the KM plateau for
    the p-link intercept, unit shape, median-time scale, zero elsewhere."""
    from .kaplan_meier import km_estimate

    data = model.data
    x0 = np.zeros(model.d)
    curve = km_estimate(data)
    plateau = float(np.clip(curve.survival[-1] if curve.survival.size else 0.5, 0.02, 0.98))
    target = logit(1.0 - plateau)
    for names, sl in ((model.p_names, model.sl_p), (model.eta_names, model.sl_eta)):
        if "intercept" in names:
            x0[sl][names.index("intercept")] = target
            break
    g = x0[model.sl_gamma]
    g[0] = 1.0
    g[1] = float(np.median(data.t))
    return x0


def _starts(model: CureModel, cfg: EMConfig, x0, seed):
    base = default_start(model) if x0 is None else np.asarray(x0, float)
    rng = np.random.default_rng(seed)
    starts = [base]
    for _ in range(cfg.n_starts):
        jit = base * (1 + cfg.start_jitter * rng.uniform(-1, 1, base.size))
        jit[base == 0] = cfg.start_jitter * rng.uniform(-1, 1, int((base == 0).sum()))
        g = jit[model.sl_gamma]
        g[0] = abs(g[0]) or 1.0
        g[1] = abs(g[1]) or 1.0
        starts.append(jit)
    return starts


def profile_fit(
    model: CureModel,
    cfg: EMConfig = EMConfig(),
    x0=None,
    seed: int = 0,
    free_mask=None,
) -> FitResult:
    """Fit over the phi grid and assemble the full inference summary."""
    fam = model.fam
    if fam.phi_is_free:
        grid = cfg.phi_grid
        if grid is None:
            grid = DEFAULT_PHI_GRIDS[fam.family]
        grid = [float(p) for p in np.asarray(grid, float)]
        if not grid:
            raise ValueError("phi_grid must be nonempty for a free phi")
    else:
        grid = [fam.phi_fixed if fam.has_phi else None]

    starts = _starts(model, cfg, x0, seed)
    trace: list[tuple[float, float]] = []
    best = None  # (ll, -|phi|, theta, phi, iters, conv, ascent)
    warm = None
    failures = {}
    for phi in grid:
        # all starts compete at the first grid point; afterwards the previous
        # point's solution is carried along the profile ridge
        cands = starts if warm is None else [warm]
        point_best = None
        for s in cands:
            try:
                th, ll, iters, conv, asc = em_fit_fixed_phi(model, phi, s, cfg, free_mask)
            except (InfeasibleParameterError, ValueError) as exc:
                failures[phi] = str(exc)
                continue
            if point_best is None or ll > point_best[0]:
                point_best = (ll, th, iters, conv, asc)
        if point_best is None:
            continue
        ll, th, iters, conv, asc = point_best
        trace.append((phi if phi is not None else math.nan, ll))
        warm = th
        key = (ll, -abs(phi) if phi is not None else 0.0)
        if best is None or key > (best[0], best[1]):
            best = (key[0], key[1], th, phi, iters, conv, asc)
    if best is None:
        raise FitFailureError("every phi grid point failed", diagnostics=failures)

    ll, _, theta, phi_hat, iters, conv, asc = best
    mask = np.ones(model.d, bool) if free_mask is None else np.asarray(free_mask, bool)
    k = int(mask.sum()) + (1 if fam.phi_is_free else 0)
    n = model.data.n
    aic = -2 * ll + 2 * k
    bic = -2 * ll + k * math.log(n)

    se = np.full(model.d, np.nan)
    lo = np.full(model.d, np.nan)
    hi = np.full(model.d, np.nan)
    cov = None
    diagnostics = {"ascent_ok": asc, "start_failures": failures}
    if cfg.compute_se and conv:
        try:
            se_free, cov = standard_errors(model, theta, phi_hat, mask)
            se[mask] = se_free
            z = 1.959963984540054
            lo[mask] = theta[mask] - z * se_free
            hi[mask] = theta[mask] + z * se_free
        except Exception as exc:  # singular information is reported, not fatal
            diagnostics["se_error"] = str(exc)

    return FitResult(
        family=fam,
        theta_hat=theta,
        phi_hat=None if not fam.has_phi else float(phi_hat),
        se=se,
        ci_low=lo,
        ci_high=hi,
        loglik=float(ll),
        aic=float(aic),
        bic=float(bic),
        n_params=k,
        em_iterations=iters,
        profile_trace=trace if fam.phi_is_free else [],
        converged=conv,
        param_names=model.param_names,
        free_mask=mask,
        cov=cov,
        diagnostics=diagnostics,
    )


def standard_errors(model: CureModel, theta_hat, phi=None, free_mask=None):
    """(se, cov) from the inverse observed information over free coords."""
    mask = np.ones(model.d, bool) if free_mask is None else np.asarray(free_mask, bool)
    masked = _Masked(model, mask, np.asarray(theta_hat, float))
    from .optimize import numeric_hessian
    from .likelihood import SingularInformationError

    v = np.asarray(theta_hat, float)[mask]
    H = numeric_hessian(lambda w: masked.loglik(w, phi), v, 1e-4)
    info = -H
    eig = np.linalg.eigvalsh(info)
    if eig.min() <= 0:
        raise SingularInformationError(
            f"observed information not positive definite (min eig {eig.min():.3g})",
            eigenvalues=eig,
        )
    cov = np.linalg.inv(info)
    return np.sqrt(np.diag(cov)), cov


def lr_test(full: FitResult, reduced: FitResult):
    """Likelihood-ratio test of a nested reduced model against the full one.

    Returns (statistic, df, p_value).
    """
    if full.family.family is not reduced.family.family:
        raise ValueError("models must share the same competing-cause family")
    full_free = {n for n, m in zip(full.param_names, full.free_mask) if m}
    red_free = {n for n, m in zip(reduced.param_names, reduced.free_mask) if m}
    if full.family.phi_is_free:
        full_free.add("phi")
    if reduced.family.phi_is_free:
        red_free.add("phi")
    if not red_free <= full_free:
        raise ValueError("reduced model is not nested in the full model")
    df = full.n_params - reduced.n_params
    if df < 0:
        raise ValueError("reduced model must not have more parameters")
    stat = max(2.0 * (full.loglik - reduced.loglik), 0.0)
    if df == 0:
        # identical free-parameter sets: the test is degenerate
        return float(stat), 0, 1.0
    return float(stat), int(df), float(chi2.sf(stat, df))
