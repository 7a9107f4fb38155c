"""Monte Carlo oracle: exact/Euler path simulation and estimator checks."""

from .backend import USING_COMPILED
from .estimators import (
    EstimatorReport,
    Functional,
    absorb_martingale_check,
    estimate,
    estimate_many,
    ks_sup_exponential,
    moment_recursion_check,
    passage_martingale_check,
    simulate_functionals,
    sup_moment_mc,
)
from .sampling import (
    FunctionalSample,
    PathFunctionals,
    PathSample,
    lamperti_functionals,
    run_paths,
    simulate_path,
)

__all__ = [
    "USING_COMPILED",
    "EstimatorReport",
    "Functional",
    "PathFunctionals",
    "PathSample",
    "FunctionalSample",
    "run_paths",
    "simulate_path",
    "lamperti_functionals",
    "simulate_functionals",
    "estimate",
    "estimate_many",
    "absorb_martingale_check",
    "passage_martingale_check",
    "moment_recursion_check",
    "sup_moment_mc",
    "ks_sup_exponential",
]
