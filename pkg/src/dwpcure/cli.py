"""Command-line interface: fit / profile / simulate / discriminate plus
Kaplan-Meier and cure-curve exports.

All outputs are deterministic TSV (tabs, '.' decimal, LF, UTF-8) so runs
with the same configuration and seed diff byte-for-byte.  Exit codes:
0 success, 2 configuration error, 3 data error, 4 convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .data import Dataset
from .em import (
    DEFAULT_PHI_GRIDS,
    EMConfig,
    FitFailureError,
    NonIdentifiableDataError,
    profile_fit,
)
from .families import (
    CauseParams,
    Family,
    InvalidParameterError,
    ModelFamily,
    cure_rate,
    population_survival,
)
from .kaplan_meier import km_by_stratum, km_estimate
from .likelihood import CureModel, LAYOUTS
from .selection import score
from .study import SimDesign, StudyReport, run_discrimination, run_monte_carlo
from . import weibull

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


class DataError(ValueError):
    pass


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return ""
    return f"{float(x):.3f}"


# ---------------------------------------------------------------------------
# configuration

def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cli: cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cli: malformed JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"cli: config {path} must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"cli: config schema_version must be {SCHEMA_VERSION}, got {version!r}"
        )
    return doc


def _parse_phi_grid(text: str) -> np.ndarray:
    """Accept 'lo:hi:step' or a comma-separated list."""
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            return np.round(np.arange(lo, hi + step / 2, step), 10)
        return np.asarray([float(v) for v in text.split(",")], float)
    except ValueError:
        raise ConfigError(
            f"cli: cannot parse phi grid {text!r}; use lo:hi:step or v1,v2,..."
        ) from None


def _em_config(doc: dict, args) -> EMConfig:
    em = dict(doc.get("em", {}))
    if getattr(args, "phi_grid", None):
        em["phi_grid"] = _parse_phi_grid(args.phi_grid)
    elif "phi_grid" in em:
        em["phi_grid"] = np.asarray(em["phi_grid"], float)
    try:
        return EMConfig(**em)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cli: bad em settings: {exc}") from exc


def _model_family(doc: dict, args) -> ModelFamily:
    label = getattr(args, "model", None) or doc.get("model")
    if not label:
        raise ConfigError("cli: no model given (use --model or config 'model')")
    try:
        return ModelFamily.from_label(str(label))
    except InvalidParameterError as exc:
        raise ConfigError(f"cli: {exc}") from exc


def _layout(doc: dict, args) -> str:
    layout = getattr(args, "link_layout", None) or doc.get("link_layout", "L1")
    if layout not in LAYOUTS:
        raise ConfigError(
            f"cli: unknown link layout {layout!r}; expected one of {sorted(LAYOUTS)}"
        )
    return layout


# ---------------------------------------------------------------------------
# data ingestion

def load_csv(path, x_columns, z_columns) -> Dataset:
    """Read a header CSV with `time`, `status` and named covariate columns.

    Rows with missing values in any used column are dropped (with a count
    reported on stderr); structural problems raise DataError naming the row.
    """
    x_columns = list(x_columns)
    z_columns = list(z_columns)
    if set(x_columns) & set(z_columns):
        raise DataError(
            f"cli: covariate columns assigned to both links: "
            f"{sorted(set(x_columns) & set(z_columns))}"
        )
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cli: cannot read data file {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        needed = ["time", "status"] + x_columns + z_columns
        missing = [c for c in needed if c not in header]
        if missing:
            raise DataError(f"cli: data file {path} lacks columns {missing}")
        t, delta, xs, zs = [], [], [], []
        dropped = 0
        for lineno, row in enumerate(reader, start=2):
            cells = [row.get(c) for c in needed]
            if any(c is None or c.strip() == "" for c in cells):
                dropped += 1
                continue
            try:
                ti = float(row["time"])
                di = int(row["status"])
                xi = [float(row[c]) for c in x_columns]
                zi = [float(row[c]) for c in z_columns]
            except ValueError as exc:
                raise DataError(
                    f"cli: unparseable value at {path} line {lineno}: {exc}"
                ) from exc
            if ti <= 0:
                raise DataError(
                    f"cli: nonpositive time {ti} at {path} line {lineno}"
                )
            if di not in (0, 1):
                raise DataError(
                    f"cli: status must be 0/1, got {di} at {path} line {lineno}"
                )
            t.append(ti)
            delta.append(di)
            xs.append(xi)
            zs.append(zi)
    if dropped:
        print(f"cli: dropped {dropped} rows with missing values", file=sys.stderr)
    if not t:
        raise DataError(f"cli: no usable rows in {path}")
    n = len(t)
    x = np.asarray(xs, float).reshape(n, len(x_columns))
    z = np.asarray(zs, float).reshape(n, len(z_columns))
    try:
        return Dataset(np.asarray(t), np.asarray(delta), x, z,
                       list(x_columns), list(z_columns))
    except ValueError as exc:
        raise DataError(f"data: {exc}") from exc


def _dataset(doc: dict, args) -> Dataset:
    path = getattr(args, "data", None) or doc.get("data")
    if not path:
        raise ConfigError("cli: no data file given (use --data or config 'data')")
    cols = doc.get("columns", {})
    return load_csv(path, cols.get("x", []), cols.get("z", []))


# ---------------------------------------------------------------------------
# outputs

def _write(out_dir: Path, name: str, text: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_bytes(text.encode("utf-8"))


def estimates_tsv(fit) -> str:
    lines = ["Parameter\tEST\tSE\t95% CI"]
    rows = list(zip(fit.param_names, fit.theta_hat, fit.se, fit.ci_low, fit.ci_high))
    if fit.family.phi_is_free:
        rows.append(("phi", fit.phi_hat, math.nan, math.nan, math.nan))
    for nm, est, se, lo, hi in rows:
        ci = f"({_fmt(lo)}, {_fmt(hi)})" if math.isfinite(float(lo)) else ""
        lines.append(f"{nm}\t{_fmt(est)}\t{_fmt(se)}\t{ci}")
    return "\n".join(lines) + "\n"


def scores_tsv(fit, n: int) -> str:
    s = score(fit, n)
    lines = ["Model\tk\tloglik\tAIC\tBIC"]
    lines.append(
        f"{s.label}\t{s.n_params}\t{s.loglik:.3f}\t{s.aic:.3f}\t{s.bic:.3f}"
    )
    return "\n".join(lines) + "\n"


def profile_tsv(fit) -> str:
    lines = ["phi\tloglik"]
    for phi, ll in fit.profile_trace:
        lines.append(f"{phi:.6g}\t{ll:.6f}")
    return "\n".join(lines) + "\n"


def km_tsv(curve) -> str:
    lines = ["time\tsurvival\tat_risk\tevents"]
    for t, s, r, d in zip(curve.times, curve.survival, curve.at_risk, curve.events):
        lines.append(f"{t:.6g}\t{s:.6f}\t{r}\t{d}")
    return "\n".join(lines) + "\n"


def export_cure_curves(model: CureModel, fit, profiles, t_grid=None) -> str:
    """TSV of the population survival over time for covariate profiles.

    Each profile is {"label": str, "x": [...], "z": [...]}; the output also
    carries the profile's estimated cure probability (the curve's plateau).
    """
    if not fit.converged:
        raise FitFailureError("cli: cure curves require a converged fit")
    if t_grid is None:
        t_grid = np.linspace(0.0, 1.2 * float(model.data.t.max()), 201)
    t_grid = np.asarray(t_grid, float)
    lp = model.lifetime_params(fit.theta_hat)
    cols = {}
    pi0s = {}
    for prof in profiles:
        label = str(prof.get("label", ",".join(map(str, prof.get("x", []) + prof.get("z", [])))))
        x = np.asarray(prof.get("x", []), float).reshape(1, -1)
        z = np.asarray(prof.get("z", []), float).reshape(1, -1)
        if x.shape[1] != model.q1 or z.shape[1] != model.q2:
            raise ConfigError(
                f"cli: profile {label!r} must give {model.q1} x and {model.q2} z values"
            )
        shadow = CureModel(
            model.fam,
            Dataset(np.ones(1), np.zeros(1, int), x, z,
                    list(model.data.x_names), list(model.data.z_names)),
            model.layout,
        )
        eta, p = shadow.links(fit.theta_hat)
        phi = fit.phi_hat if model.fam.has_phi else 0.0
        cp = CauseParams(float(eta[0]), float(p[0]), phi)
        tt = np.where(t_grid > 0, t_grid, 1.0)
        F = np.where(t_grid > 0, weibull.cdf(tt, np.repeat(x, t_grid.size, 0),
                                             np.repeat(z, t_grid.size, 0), lp), 0.0)
        cols[label] = population_survival(model.fam, cp, F)
        pi0s[label] = cure_rate(model.fam, cp)
    labels = list(cols)
    lines = ["# cure_probability\t" + "\t".join(f"{pi0s[l]:.6f}" for l in labels)]
    lines.append("time\t" + "\t".join(labels))
    for k, t in enumerate(t_grid):
        lines.append(f"{t:.6g}\t" + "\t".join(f"{cols[l][k]:.6f}" for l in labels))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands

def _fit_once(doc, args):
    fam = _model_family(doc, args)
    data = _dataset(doc, args)
    layout = _layout(doc, args)
    cfg = _em_config(doc, args)
    model = CureModel(fam, data, layout)
    fit = profile_fit(model, cfg, seed=int(getattr(args, "seed", None) or doc.get("seed", 0)))
    return model, fit


def cmd_fit(doc, args) -> int:
    model, fit = _fit_once(doc, args)
    out = Path(getattr(args, "out", None) or doc.get("out", "."))
    _write(out, "estimates.tsv", estimates_tsv(fit))
    _write(out, "scores.tsv", scores_tsv(fit, model.data.n))
    if fit.profile_trace:
        _write(out, "profile.tsv", profile_tsv(fit))
    profiles = doc.get("cure_curve_profiles")
    if profiles and fit.converged:
        _write(out, "cure_curves.tsv", export_cure_curves(model, fit, profiles))
    if not fit.converged:
        print("em_engine: EM did not converge within the iteration budget",
              file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_profile(doc, args) -> int:
    fam = _model_family(doc, args)
    if not fam.phi_is_free:
        raise ConfigError(f"cli: model {fam.label} has no free phi to profile")
    model, fit = _fit_once(doc, args)
    out = Path(getattr(args, "out", None) or doc.get("out", "."))
    _write(out, "profile.tsv", profile_tsv(fit))
    return EXIT_OK if fit.converged else EXIT_CONVERGENCE


def _design_from(doc: dict) -> SimDesign:
    d = doc.get("design")
    if not isinstance(d, dict):
        raise ConfigError("cli: config needs a 'design' object")
    try:
        fam = ModelFamily.from_label(str(d["family"]))
        return SimDesign(
            true_family=fam,
            phi_true=d.get("phi_true"),
            censor_rate=float(d["censor_rate"]),
            p_range=tuple(d["p_range"]),
            n=int(d.get("n", 400)),
            eta_for_z1=float(d.get("eta_for_z1", 3.0)),
            ulcer_prob=float(d.get("ulcer_prob", 0.44)),
            seed=int(d.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError, InvalidParameterError) as exc:
        raise ConfigError(f"cli: bad simulation design: {exc}") from exc


def cmd_simulate(doc, args) -> int:
    design = _design_from(doc)
    fit_fam = (
        ModelFamily.from_label(str(doc["fit_model"]))
        if "fit_model" in doc
        else design.true_family
    )
    reps = int(getattr(args, "reps", None) or doc.get("reps", 100))
    cfg = _em_config(doc, args)
    report = run_monte_carlo(design, fit_fam, reps, cfg)
    out = Path(getattr(args, "out", None) or doc.get("out", "."))
    _write(out, "mc_estimates.tsv", report.estimates_tsv())
    if report.replications_used == 0:
        print("study: no replication converged", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_discriminate(doc, args) -> int:
    design = _design_from(doc)
    labels = doc.get("candidates")
    if not labels:
        raise ConfigError("cli: 'candidates' list required")
    candidates = [ModelFamily.from_label(str(l)) for l in labels]
    reps = int(getattr(args, "reps", None) or doc.get("reps", 100))
    cfg = _em_config(doc, args)
    report = run_discrimination([design], candidates, reps, cfg)
    out = Path(getattr(args, "out", None) or doc.get("out", "."))
    _write(out, "selection.tsv", report.selection_tsv())
    if report.replications_used == 0:
        print("study: no replication produced a scorable fit", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_km(doc, args) -> int:
    stratum = getattr(args, "stratum", None) or doc.get("stratum")
    cols = doc.setdefault("columns", {})
    known = list(cols.get("x", [])) + list(cols.get("z", []))
    if stratum and stratum not in known:
        cols["z"] = list(cols.get("z", [])) + [stratum]
    data = _dataset(doc, args)
    out = Path(getattr(args, "out", None) or doc.get("out", "."))
    if stratum:
        names = data.x_names + data.z_names
        if stratum not in names:
            raise DataError(f"cli: stratum column {stratum!r} not among {names}")
        col = (
            data.x[:, data.x_names.index(stratum)]
            if stratum in data.x_names
            else data.z[:, data.z_names.index(stratum)]
        )
        for lab, curve in km_by_stratum(data, col).items():
            _write(out, f"km_{stratum}_{lab:g}.tsv", km_tsv(curve))
    else:
        _write(out, "km.tsv", km_tsv(km_estimate(data)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dwpcure",
        description="Destructive weighted-Poisson cure model fitting and studies",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--model", help="model name (DLBP, DEWP, DNB, DP, ...)")
    common.add_argument("--phi-grid", dest="phi_grid",
                        help="profile grid: lo:hi:step or comma list")
    common.add_argument("--link-layout", dest="link_layout",
                        choices=sorted(LAYOUTS), help="covariate-to-link layout")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--reps", type=int, help="number of replications")
    common.add_argument("--out", help="output directory")
    common.add_argument("--data", help="input CSV (header: time,status,<covariates>)")
    for name, fn in (
        ("fit", cmd_fit),
        ("profile", cmd_profile),
        ("simulate", cmd_simulate),
        ("discriminate", cmd_discriminate),
        ("km", cmd_km),
    ):
        p = sub.add_parser(name, parents=[common])
        p.set_defaults(func=fn)
        if name == "km":
            p.add_argument("--stratum", help="covariate column to stratify by")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = _load_json(args.config) if args.config else {"schema_version": SCHEMA_VERSION}
        return args.func(doc, args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (DataError,) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA
    except (FitFailureError, NonIdentifiableDataError) as exc:
        print(f"em_engine: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
