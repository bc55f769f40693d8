"""Destructive weighted-Poisson cure models with Weibull lifetimes.

Survival data with a cured fraction are modeled through latent competing
causes that undergo a destructive (binomial thinning) process; the
remaining causes race to produce the event.  Three cause-count families
are provided (length-biased Poisson, exponentially weighted Poisson,
negative binomial) together with their six classical sub-models, EM
estimation with profile likelihood over the weight parameter, and Monte
Carlo study runners.
"""

from .data import Dataset
from .em import (
    EMConfig,
    FitResult,
    NonIdentifiableDataError,
    em_fit_fixed_phi,
    lr_test,
    profile_fit,
    standard_errors,
)
from .families import (
    CauseParams,
    DensityInfeasibleError,
    Family,
    InvalidParameterError,
    ModelFamily,
    cure_rate,
    pmf_d,
    pmf_m,
    population_density,
    population_survival,
)
from .kaplan_meier import KMCurve, km_by_stratum, km_estimate
from .likelihood import CureModel, InfeasibleParameterError, SingularInformationError
from .optimize import OptimizerConfig, OptimResult, maximize
from .selection import ModelScore, cure_rate_metrics, rank, score
from .study import (
    SimDesign,
    StudyReport,
    calibrate_logit,
    generate_dataset,
    run_discrimination,
    run_monte_carlo,
    weibull_from_moments,
)
from .weibull import LifetimeParams

__version__ = "0.1.0"

__all__ = [
    "CauseParams",
    "CureModel",
    "Dataset",
    "DensityInfeasibleError",
    "EMConfig",
    "Family",
    "FitResult",
    "InfeasibleParameterError",
    "InvalidParameterError",
    "KMCurve",
    "LifetimeParams",
    "ModelFamily",
    "ModelScore",
    "NonIdentifiableDataError",
    "OptimResult",
    "OptimizerConfig",
    "SimDesign",
    "SingularInformationError",
    "StudyReport",
    "calibrate_logit",
    "cure_rate",
    "cure_rate_metrics",
    "em_fit_fixed_phi",
    "generate_dataset",
    "km_by_stratum",
    "km_estimate",
    "lr_test",
    "maximize",
    "pmf_d",
    "pmf_m",
    "population_density",
    "population_survival",
    "profile_fit",
    "rank",
    "run_discrimination",
    "run_monte_carlo",
    "score",
    "standard_errors",
    "weibull_from_moments",
]
