"""Monte Carlo estimators and the analytic-vs-simulated check battery.

The estimators are the independent oracle for the series-based transforms:
every quantity is a plain mean over per-replication functionals produced by
the exact (finite variation) or Euler (infinite variation) path scans.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..models import PssmpModel
from ..series import series_table
from .sampling import PathFunctionals, run_paths

__all__ = [
    "EstimatorReport",
    "Functional",
    "estimate",
    "estimate_many",
    "simulate_functionals",
    "absorb_martingale_check",
    "passage_martingale_check",
    "moment_recursion_check",
    "sup_moment_mc",
    "ks_sup_exponential",
]


@dataclass
class EstimatorReport:
    """One estimate with its uncertainty and optional analytic target."""

    functional: str
    estimate: float
    stderr: float
    n: int
    seed: int
    analytic: float | None = None
    z: float | None = None

    def to_dict(self) -> dict:
        return {
            "functional": self.functional,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "n": self.n,
            "seed": self.seed,
            "analytic": self.analytic,
            "z": self.z,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _report(label: str, values: np.ndarray, seed: int, analytic: float | None) -> EstimatorReport:
    n = values.shape[0]
    est = float(np.mean(values))
    if np.ptp(values) == 0.0:  # constant sample: exact mean, no spread
        est = float(values[0])
        stderr = 0.0
    else:
        stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    z = None
    if analytic is not None:
        if stderr > 0:
            z = (est - analytic) / stderr
        else:
            z = 0.0 if est == analytic else math.copysign(math.inf, est - analytic)
    return EstimatorReport(label, est, stderr, n, seed, analytic, z)


class Functional:
    """Composable per-replication functional from the fixed menu:
    exp(-beta T0), exp(-gamma L), exp(-beta (T0-L)), g(sup), g(J) and
    jump-event indicators, and products thereof."""

    def __init__(self, label: str, fn):
        self.label = label
        self.fn = fn

    def __call__(self, sample: PathFunctionals) -> np.ndarray:
        return self.fn(sample)

    @staticmethod
    def exp_absorption(beta: float) -> "Functional":
        return Functional(f"exp(-{beta:g}*T0)", lambda s: np.exp(-beta * s.t0))

    @staticmethod
    def exp_peak_time(gamma: float) -> "Functional":
        return Functional(f"exp(-{gamma:g}*L)", lambda s: np.exp(-gamma * s.big_l))

    @staticmethod
    def exp_residual(beta: float) -> "Functional":
        return Functional(f"exp(-{beta:g}*(T0-L))", lambda s: np.exp(-beta * (s.t0 - s.big_l)))

    @staticmethod
    def of_sup(g, label: str) -> "Functional":
        return Functional(label, lambda s: np.asarray(g(s.sup), dtype=float))

    @staticmethod
    def of_jump(g, label: str) -> "Functional":
        return Functional(label, lambda s: np.asarray(g(s.j), dtype=float))

    @staticmethod
    def jump_indicator(pred, label: str) -> "Functional":
        return Functional(label, lambda s: pred(s.j).astype(float))

    @staticmethod
    def product(*fs: "Functional") -> "Functional":
        label = "*".join(f.label for f in fs)

        def fn(s, fs=fs):
            out = fs[0](s)
            for f in fs[1:]:
                out = out * f(s)
            return out

        return Functional(label, fn)


def simulate_functionals(model: PssmpModel, y: float, n: int, seed: int, *,
                         h: float = 1e-3, workers: int = 1) -> PathFunctionals:
    """Simulate the per-replication functional quadruple (sup, L, T0, J)."""
    return run_paths(model, y, n, seed, h=h, workers=workers)


def estimate_many(model: PssmpModel, y: float, functionals, n: int, seed: int, *,
                  h: float = 1e-3, workers: int = 1, analytic=None,
                  sample: PathFunctionals | None = None) -> list[EstimatorReport]:
    """Estimate several functionals on one shared set of replications."""
    if n < 1:
        raise DomainError("need n >= 1 replications")
    if sample is None:
        sample = simulate_functionals(model, y, n, seed, h=h, workers=workers)
    elif sample.n != n or sample.seed != seed:
        raise DomainError("shared sample does not match the requested (n, seed)")
    analytic = analytic or {}
    out = []
    for f in functionals:
        out.append(_report(f.label, f(sample), seed, analytic.get(f.label)))
    return out


def estimate(model: PssmpModel, y: float, functional: Functional, n: int, seed: int, *,
             h: float = 1e-3, workers: int = 1, analytic: float | None = None,
             sample: PathFunctionals | None = None) -> EstimatorReport:
    """Mean and standard error of one functional over n replications."""
    key = {functional.label: analytic} if analytic is not None else None
    return estimate_many(model, y, [functional], n, seed, h=h, workers=workers,
                         analytic=key, sample=sample)[0]


# -- martingale and recursion checks ----------------------------------------


def absorb_martingale_check(model: PssmpModel, y: float, beta: float, times, n: int,
                            seed: int, *, workers: int = 1) -> list[EstimatorReport]:
    """The absorption-series process exp(-beta (s ^ T0)) * series(beta Y_s^alpha)
    has constant mean; reports one z-score per requested time."""
    t = series_table(model)
    times = [float(s) for s in times]
    paths = run_paths(model, y, n, seed, workers=workers,
                      queries={"at_times": times})
    # array evaluation path, bit-identical with the per-path values at s=0
    target = float(t.absorption(np.array([beta * y ** model.alpha]))[0])
    reports = []
    for qi, s in enumerate(times):
        y_s = paths.extras["y_at"][:, qi]
        alive = y_s > 0.0
        vals = np.where(
            alive,
            math.exp(-beta * s) * t.absorption(beta * y_s ** model.alpha),
            np.exp(-beta * paths.t0),
        )
        reports.append(_report(f"absorb-martingale@s={s:g}", vals, seed, target))
    return reports


def passage_martingale_check(model: PssmpModel, y: float, gamma: float, d: float, times,
                             n: int, seed: int, *, workers: int = 1) -> list[EstimatorReport]:
    """The stopped passage-series process exp(-gamma s) Y_s^phi series(gamma Y_s^alpha)
    (stopped at the first passage above d) has constant mean."""
    if d < y:
        raise DomainError("need a barrier d >= y")
    t = series_table(model)
    phi = model.phi_p
    times = [float(s) for s in times]
    paths = run_paths(model, y, n, seed, workers=workers,
                      queries={"at_times": times, "passage_level": d})
    target = float(y ** phi * t.passage(gamma * y ** model.alpha))
    barrier_val = float(d ** phi * t.passage(gamma * d ** model.alpha))
    crossed = paths.extras["crossed"]
    tdp = paths.extras["tdp"]
    reports = []
    for qi, s in enumerate(times):
        y_s = paths.extras["y_at"][:, qi]
        stopped = crossed & (tdp <= s)
        alive = y_s > 0.0
        running = np.where(
            alive, np.exp(-gamma * s) * y_s ** phi * t.passage(gamma * y_s ** model.alpha), 0.0
        )
        vals = np.where(stopped, np.exp(-gamma * tdp) * barrier_val, running)
        reports.append(_report(f"passage-martingale@s={s:g}", vals, seed, target))
    return reports


def moment_recursion_check(model: PssmpModel, y: float, n_mom: int, s: float, n: int,
                           seed: int, *, grid_points: int = 801,
                           workers: int = 1) -> EstimatorReport:
    """Power-moment recursion: E[Y_s^(alpha n)] minus its integral
    representation, estimated per replication (the clock integral is a
    Simpson sum on a shared grid); the report's z-score tests mean zero."""
    if n_mom < 1:
        raise DomainError("need n_mom >= 1")
    alpha = model.alpha
    pow_hi = alpha * n_mom
    pow_lo = alpha * (n_mom - 1)
    factor = model.levy.psi(pow_hi) - model.p
    if factor == 0.0:
        raise DomainError("the recursion factor psi(alpha n) - p vanishes")
    if grid_points % 2 == 0:
        grid_points += 1
    vgrid = np.linspace(0.0, s, grid_points)
    wsimp = np.ones(grid_points)
    wsimp[1:-1:2] = 4.0
    wsimp[2:-1:2] = 2.0
    wsimp *= (s / (grid_points - 1)) / 3.0
    paths = run_paths(model, y, n, seed, workers=workers,
                      queries={"moment": (vgrid, wsimp, pow_hi, pow_lo)})
    lhs = paths.extras["m_lhs"]
    rhs = y ** pow_hi + factor * paths.extras["m_quad"]
    return _report(f"moment-recursion(n={n_mom},s={s:g})", lhs - rhs, seed, 0.0)


def sup_moment_mc(model: PssmpModel, y: float, k: float, gamma: float, n: int, seed: int, *,
                  workers: int = 1) -> EstimatorReport:
    """Monte Carlo counterpart of the exponential-time running-maximum moment:
    draws an independent exponential query time per replication."""
    if gamma <= 0:
        raise DomainError("gamma must be > 0")
    paths = run_paths(model, y, n, seed, workers=workers,
                      queries={"exp_time_rate": gamma})
    vals = paths.extras["ybar_exp"] ** k
    return _report(f"sup-moment(k={k:g},gamma={gamma:g})", vals, seed, None)


def ks_sup_exponential(model: PssmpModel, y: float, n: int, seed: int, *,
                       level: float = 1e-3, workers: int = 1,
                       sample: PathFunctionals | None = None) -> dict:
    """Kolmogorov-Smirnov check of log(sup/y) against the exponential law of
    rate phi(p); passes when the statistic is under the asymptotic critical
    value at the given significance level."""
    if sample is None:
        sample = run_paths(model, y, n, seed, workers=workers)
    logs = np.sort(np.log(sample.sup / y))
    cdf = 1.0 - np.exp(-model.phi_p * logs)
    i = np.arange(1, logs.shape[0] + 1)
    stat = float(np.max(np.maximum(i / n - cdf, cdf - (i - 1) / n)))
    critical = math.sqrt(-math.log(level / 2.0) / (2.0 * n))
    return {"statistic": stat, "critical": critical, "level": level,
            "n": n, "seed": seed, "passed": stat < critical}
