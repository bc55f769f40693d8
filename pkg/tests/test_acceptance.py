"""Acceptance suite: seven end-to-end checks of the whole package.

Each test prints a one-line pass summary so a suite run reads as a report.
The real-data reproduction test is conditional on a user-supplied melanoma
CSV (see its docstring); absent the file it skips, and the property suites
here and in the unit tests stand in for it.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import binom, chi2, nbinom, poisson

from dwpcure import weibull
from dwpcure.cli import load_csv
from dwpcure.em import DEFAULT_PHI_GRIDS, EMConfig, em_fit_fixed_phi, lr_test, profile_fit
from dwpcure.families import CauseParams, Family, ModelFamily, pmf_d
from dwpcure.likelihood import CureModel
from dwpcure.optimize import central_gradient, numeric_hessian
from dwpcure.selection import cure_rate_metrics
from dwpcure.study import (
    SimDesign,
    generate_dataset,
    run_discrimination,
    run_monte_carlo,
    truth_vector,
)
from dwpcure.weibull import LifetimeParams

MELANOMA_CSV = Path(__file__).parent / "data" / "melanoma.csv"

ETAS = (0.5, 1.0, 3.0, 5.0, 8.0)
PS = (0.1, 0.3, 0.5, 0.7, 0.9)
PHIS = {
    Family.DEWP: (-2.0, -0.5, 0.0, 0.5, 2.0),
    Family.DLBP: (0.0,) * 5,
    Family.DNB: (0.2, 0.7, 1.0, 3.0, 7.0),
}


def _cause_count_pmf(fam, cp, m_max):
    """Vector of P(M = m) for m = 0..m_max from reference distributions."""
    m = np.arange(m_max + 1)
    if fam.family is Family.DLBP:
        pm = np.where(m >= 1, poisson.pmf(np.maximum(m - 1, 0), cp.eta), 0.0)
    elif fam.family is Family.DEWP:
        pm = poisson.pmf(m, cp.eta * math.exp(cp.phi))
    else:
        pm = nbinom.pmf(m, 1.0 / cp.phi, 1.0 / (1.0 + cp.phi * cp.eta))
    return pm


def _tail_cutoff(fam, cp):
    """m beyond which the cause-count mass is below 1e-13."""
    if fam.family is Family.DNB:
        q = nbinom.ppf(1 - 1e-13, 1.0 / cp.phi, 1.0 / (1.0 + cp.phi * cp.eta))
    else:
        rate = cp.eta * (math.exp(cp.phi) if fam.family is Family.DEWP else 1.0)
        q = poisson.ppf(1 - 1e-13, rate) + 1
    return int(q) + 30


def test_criterion_1_distribution_oracle():
    """Closed-form thinned pmfs match the truncated series on a 5x5x5 grid."""
    start = time.time()
    worst = 0.0
    for fam_name in (Family.DEWP, Family.DLBP, Family.DNB):
        fam = ModelFamily(fam_name)
        for eta in ETAS:
            for p in PS:
                for phi in set(PHIS[fam_name]):
                    cp = CauseParams(eta, p, phi)
                    m_max = _tail_cutoff(fam, cp)
                    pm = _cause_count_pmf(fam, cp, m_max)
                    m = np.arange(m_max + 1)
                    d = np.arange(21)[:, None]
                    series = (binom.pmf(d, m[None, :], p) * pm[None, :]).sum(axis=1)
                    closed = np.array([pmf_d(fam, k, cp) for k in range(21)])
                    worst = max(worst, float(np.abs(closed - series).max()))
                    assert np.all(np.abs(closed - series) < 1e-10)
                    # D <= M, so the same cutoff bounds the normalization sum
                    total = sum(pmf_d(fam, k, cp) for k in range(m_max + 1))
                    assert total == pytest.approx(1.0, abs=1e-8)
    elapsed = time.time() - start
    assert elapsed < 10.0
    print(f"\n[criterion 1] PASS worst |closed - series| = {worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_derivative_suite():
    """Analytic lifetime and Q derivatives agree with central differences."""
    start = time.time()
    rng = np.random.default_rng(20260823)
    # lifetime bundles at random feasible parameter points
    for _ in range(100):
        lp = LifetimeParams(
            rng.uniform(0.5, 3.0),
            rng.uniform(0.5, 4.0),
            rng.normal(0, 0.3, 1),
            rng.normal(0, 0.3, 1),
        )
        t = rng.uniform(0.2, 4.0, 3)
        x = rng.normal(0, 1, (3, 1))
        z = rng.integers(0, 2, (3, 1)).astype(float)
        vec = lp.as_vector()
        b = weibull.log_pdf_derivatives(t, x, z, lp)
        for i in range(3):
            f = lambda v: weibull.log_pdf_derivatives(
                t[i : i + 1], x[i : i + 1], z[i : i + 1],
                LifetimeParams.from_vector(v, 1, 1),
            ).value[0]
            g_fd = central_gradient(f, vec)
            denom = np.maximum(np.abs(g_fd), 1.0)
            assert np.all(np.abs(b.grad[i] - g_fd) / denom < 1e-5)
    # Q-function gradients/Hessians for every family
    from conftest import FAMILY_CASES, THETA0, make_dataset

    data = make_dataset(seed=99, n=12)
    for fam, phi in FAMILY_CASES:
        model = CureModel(fam, data)
        n_cen = data.n - data.n_events
        g_checked = h_checked = 0
        while g_checked < 100:
            theta = THETA0 + rng.normal(0, 0.25, THETA0.size)
            theta[3] = abs(theta[3]) + 0.3
            theta[4] = abs(theta[4]) + 0.3
            xi = rng.uniform(0.05, 0.95, n_cen)
            if model.q_value(theta, xi, phi) < -1e9:
                continue
            g = model.q_gradient(theta, xi, phi)
            g_fd = central_gradient(lambda v: model.q_value(v, xi, phi), theta)
            denom = np.maximum(np.abs(g_fd), 1.0)
            assert np.all(np.abs(g - g_fd) / denom < 1e-5)
            g_checked += 1
            if h_checked < 20:
                H = model.q_hessian(theta, xi, phi)
                H_fd = numeric_hessian(lambda v: model.q_value(v, xi, phi), theta)
                hden = np.maximum(np.abs(H_fd), 1.0)
                assert np.all(np.abs(H - H_fd) / hden < 1e-4)
                h_checked += 1
    elapsed = time.time() - start
    assert elapsed < 60.0
    print(f"\n[criterion 2] PASS 100 gradient + 20 Hessian points/family, {elapsed:.1f}s")


def test_criterion_3_em_ascent():
    """Observed log-likelihood never decreases across EM iterations."""
    start = time.time()
    designs = []
    for seed in range(50):
        fam_phi = [
            (ModelFamily(Family.DEWP), 0.5),
            (ModelFamily(Family.DLBP), None),
            (ModelFamily(Family.DNB), 2.0),
            (ModelFamily.from_label("DP"), 0.0),
            (ModelFamily(Family.DEWP), -0.5),
        ][seed % 5]
        psi = (0.05, 0.15, 0.25)[seed % 3]
        p_rng = ((0.2, 0.6), (0.3, 0.9))[seed % 2]
        designs.append(
            SimDesign(true_family=fam_phi[0], phi_true=fam_phi[1],
                      censor_rate=psi, p_range=p_rng, n=120, seed=seed)
        )
    cfg = EMConfig(epsilon=1e-4, max_em_iter=120)
    violations = 0
    for design in designs:
        data, truth = generate_dataset(design)
        fam = design.true_family
        model = CureModel(fam, data)
        tv = truth_vector(model, design, truth)
        phi = design.phi_true if fam.phi_is_free else None
        _, _, _, _, ascent_ok = em_fit_fixed_phi(model, phi, tv, cfg)
        if not ascent_ok:
            violations += 1
    assert violations == 0
    print(f"\n[criterion 3] PASS 0/50 ascent violations, {time.time() - start:.1f}s")


@pytest.mark.skipif(
    not MELANOMA_CSV.exists(),
    reason=(
        "melanoma CSV not shipped and not obtainable in this environment; "
        "place a header CSV (time,status,thickness,ulcer; 205 rows, times in "
        f"years, status 1=death) at {MELANOMA_CSV} to enable. Per the stated "
        "fallback, the property suites (criteria 1-3, 5-7) replace this check."
    ),
)
def test_criterion_4_real_data_reproduction():
    """Published melanoma fits: log-likelihoods, phi, AIC, and LR tests."""
    start = time.time()
    data = load_csv(str(MELANOMA_CSV), ["thickness"], ["ulcer"])
    assert data.n == 205
    cfg = EMConfig(epsilon=1e-6)
    fits = {}
    for label in ("DNB", "DP", "DLBP", "DG", "DEWP"):
        fits[label] = profile_fit(
            CureModel(ModelFamily.from_label(label), data), cfg, seed=0
        )
    assert fits["DNB"].phi_hat == pytest.approx(5.2, abs=1e-9)
    assert fits["DNB"].loglik == pytest.approx(-199.108, abs=0.05)
    assert fits["DNB"].aic == pytest.approx(414.216, abs=0.1)
    assert fits["DP"].loglik == pytest.approx(-203.433, abs=0.05)
    assert fits["DLBP"].loglik == pytest.approx(-204.979, abs=0.05)
    assert fits["DG"].loglik == pytest.approx(-201.536, abs=0.05)
    # lifetime-covariate LR test on the best model
    model = CureModel(ModelFamily(Family.DNB), data)
    mask = np.array(
        [not n.startswith(("gamma2", "gamma3")) for n in model.param_names]
    )
    reduced = profile_fit(model, cfg, seed=0, free_mask=mask)
    _, _, p_cov = lr_test(fits["DNB"], reduced)
    assert p_cov == pytest.approx(0.061, abs=0.005)
    stat = 2.0 * (fits["DNB"].loglik - fits["DG"].loglik)
    assert chi2.sf(stat, 1) == pytest.approx(0.027, abs=0.005)
    alpha = fits["DEWP"].theta_hat[fits["DEWP"].param_names.index("eta:z1")]
    se = fits["DEWP"].se[fits["DEWP"].param_names.index("eta:z1")]
    assert alpha == pytest.approx(0.761, abs=0.02)
    assert se == pytest.approx(0.218, abs=0.03)
    assert time.time() - start < 600.0


def test_criterion_5_simulation_recovery():
    """Monte Carlo parameter recovery at desk scale (100 replications)."""
    start = time.time()
    design = SimDesign(
        true_family=ModelFamily(Family.DEWP), phi_true=-0.5, censor_rate=0.05,
        p_range=(0.2, 0.6), n=400, seed=0,
    )
    cfg = EMConfig(epsilon=1e-6, phi_grid=np.array([-0.5]), n_starts=0)
    report = run_monte_carlo(design, ModelFamily(Family.DEWP), reps=100, cfg=cfg)
    assert report.replications_used >= 90
    i_a = report.param_names.index("eta:z1")
    i_g0 = report.param_names.index("gamma0")
    alpha_mean = report.est[i_a]
    g0_mean = report.est[i_g0]
    cp_alpha = report.cp[i_a]
    assert 0.99 <= alpha_mean <= 1.20
    assert 1.70 <= g0_mean <= 1.86
    assert 0.86 <= cp_alpha <= 0.97
    elapsed = time.time() - start
    assert elapsed < 1200.0
    print(
        f"\n[criterion 5] PASS mean(alpha)={alpha_mean:.3f} "
        f"mean(gamma0)={g0_mean:.3f} CP(alpha)={cp_alpha:.2f}, {elapsed:.0f}s"
    )


def test_criterion_6_discrimination():
    """BIC recovers the true DLBP model at desk scale (100 replications)."""
    start = time.time()
    design = SimDesign(
        true_family=ModelFamily(Family.DLBP), censor_rate=0.15,
        p_range=(0.3, 0.9), n=400, seed=0,
    )
    candidates = [
        ModelFamily(Family.DLBP),
        ModelFamily(Family.DEWP),
        ModelFamily(Family.DNB),
    ]
    report = run_discrimination(
        [design], candidates, reps=100,
        cfg=EMConfig(epsilon=1e-4, n_starts=0, compute_se=False),
    )
    assert report.replications_used >= 90
    bic_rate = report.selection_rates["BIC"]["DLBP"]
    assert bic_rate > 0.85
    assert report.tre["DLBP"] == pytest.approx(1.0, abs=1e-12)
    elapsed = time.time() - start
    assert elapsed < 3600.0
    print(f"\n[criterion 6] PASS BIC selection rate = {bic_rate:.2f}, {elapsed:.0f}s")


def test_criterion_7_arithmetic_identities():
    """Information criteria, CI construction, and RMSE decomposition."""
    start = time.time()
    # AIC/BIC at the published melanoma DNB values
    ll, k, n = -199.108, 8, 205
    assert -2 * ll + 2 * k == pytest.approx(414.216, abs=1e-10)
    assert -2 * ll + k * math.log(n) == pytest.approx(440.800, abs=5e-3)
    # 95% CI around the published DEWP alpha, to two decimals
    est, se = 0.761, 0.218
    lo, hi = est - 1.959963984540054 * se, est + 1.959963984540054 * se
    assert round(lo, 2) == 0.33 and round(hi, 2) == 1.19
    assert lo == pytest.approx(0.333, abs=5e-3)
    assert hi == pytest.approx(1.188, abs=5e-3)
    # RMSE^2 = BIAS^2 + variance on a tiny Monte Carlo run
    design = SimDesign(
        true_family=ModelFamily(Family.DEWP), phi_true=0.2, censor_rate=0.15,
        p_range=(0.3, 0.9), n=150, seed=3,
    )
    cfg = EMConfig(epsilon=1e-4, phi_grid=np.array([0.2]), n_starts=0)
    report = run_monte_carlo(design, ModelFamily(Family.DEWP), reps=5, cfg=cfg)
    assert report.replications_used == 5
    var = report.rmse**2 - report.bias**2
    assert np.all(var >= -1e-10)
    # worked cure-rate metric identity
    trb, tmse = cure_rate_metrics(np.array([0.5, 0.5]), np.array([0.4, 0.6]))
    assert trb == pytest.approx(40.0, abs=1e-10)
    assert tmse == pytest.approx(0.02, abs=1e-10)
    print(f"\n[criterion 7] PASS all identities exact, {time.time() - start:.0f}s")
