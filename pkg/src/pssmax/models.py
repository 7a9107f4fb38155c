"""Spectrally negative Levy models with killing and their self-similar children.

A model is a triplet (sigma2, drift, jumps) for the parent process plus a
killing rate ``p`` and a self-similarity index ``alpha`` for the positive
self-similar process obtained through the Lamperti time change.  Jumps are
negative and of finite activity, so the Laplace exponent and its derivative
are available in closed form and finite-variation paths can be simulated
exactly.

Drift convention: when ``sigma2 == 0`` (finite variation) ``drift`` is the
true linear slope of the paths between jumps and must be positive; when
``sigma2 > 0`` it is the plain linear coefficient of the exponent (no
small-jump compensation is needed because activity is finite).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ModelError, NoConvergence, SchemaError

__all__ = [
    "ExponentialNegative",
    "PointMassNegative",
    "FiniteMixture",
    "JumpSpec",
    "LevyModel",
    "PssmpModel",
    "first_passage_transform",
    "atom_at_maximum",
    "ladder_up_exponent",
    "ladder_down_exponent",
    "load_model",
    "model_from_dict",
    "model_to_dict",
]

#: relative tolerance below which Phi(p)/alpha is snapped to an integer
DEGENERACY_RTOL = 1e-9

#: iteration cap for the exponent inversion
_ROOT_MAX_ITER = 200


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ModelError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ExponentialNegative:
    """Jump = -E with E exponential of the given rate."""

    rate: float

    def __post_init__(self) -> None:
        if not (_require_finite("rate", self.rate) > 0):
            raise ModelError("exponential jump rate must be > 0")

    def mgf(self, lam):
        # E[exp(lam * jump)] = rate / (rate + lam)
        return self.rate / (self.rate + lam)

    def mgf_prime(self, lam):
        return -self.rate / (self.rate + lam) ** 2

    @property
    def mean(self) -> float:
        return -1.0 / self.rate


@dataclass(frozen=True)
class PointMassNegative:
    """Jump = -c deterministically."""

    c: float

    def __post_init__(self) -> None:
        if not (_require_finite("c", self.c) > 0):
            raise ModelError("point jump size must be > 0")

    def mgf(self, lam):
        return np.exp(-self.c * lam)

    def mgf_prime(self, lam):
        return -self.c * np.exp(-self.c * lam)

    @property
    def mean(self) -> float:
        return -self.c


#: atoms admissible inside a mixture (no nesting)
_MIXTURE_ATOMS = (ExponentialNegative, PointMassNegative)


@dataclass(frozen=True)
class FiniteMixture:
    """Convex mixture of exponential / point-mass negative jumps."""

    components: tuple

    def __post_init__(self) -> None:
        comps = tuple((float(w), law) for w, law in self.components)
        if not comps:
            raise ModelError("mixture needs at least one component")
        for w, law in comps:
            if not (math.isfinite(w) and w > 0):
                raise ModelError("mixture weights must be positive and finite")
            if not isinstance(law, _MIXTURE_ATOMS):
                raise ModelError("mixture components must be exponential or point laws")
        total = math.fsum(w for w, _ in comps)
        if abs(total - 1.0) > 1e-12:
            raise ModelError(f"mixture weights must sum to 1, got {total}")
        object.__setattr__(self, "components", comps)

    def mgf(self, lam):
        return sum(w * law.mgf(lam) for w, law in self.components)

    def mgf_prime(self, lam):
        return sum(w * law.mgf_prime(lam) for w, law in self.components)

    @property
    def mean(self) -> float:
        return math.fsum(w * law.mean for w, law in self.components)


JumpSizeLaw = Union[ExponentialNegative, PointMassNegative, FiniteMixture]


@dataclass(frozen=True)
class JumpSpec:
    """Finite-activity negative jump component: arrival intensity + size law.

    ``size_law`` may be ``None`` only when ``intensity == 0``.
    """

    intensity: float
    size_law: JumpSizeLaw | None = None

    def __post_init__(self) -> None:
        if not (_require_finite("intensity", self.intensity) >= 0):
            raise ModelError("jump intensity must be >= 0")
        if self.intensity > 0 and self.size_law is None:
            raise ModelError("positive jump intensity requires a size law")

    def mgf_term(self, lam):
        """intensity * (E[exp(lam*jump)] - 1); zero when there are no jumps."""
        if self.intensity == 0:
            return np.zeros_like(np.asarray(lam, dtype=float)) if np.ndim(lam) else 0.0
        return self.intensity * (self.size_law.mgf(lam) - 1.0)

    def mgf_term_prime(self, lam):
        if self.intensity == 0:
            return np.zeros_like(np.asarray(lam, dtype=float)) if np.ndim(lam) else 0.0
        return self.intensity * self.size_law.mgf_prime(lam)


@dataclass(frozen=True)
class LevyModel:
    """Spectrally negative Levy process with finite-activity jumps.

    Paths must be non-monotone: a finite-variation model (``sigma2 == 0``)
    needs positive drift and a non-trivial jump component.
    """

    sigma2: float
    drift: float
    jumps: JumpSpec

    def __post_init__(self) -> None:
        s2 = _require_finite("sigma2", self.sigma2)
        _require_finite("drift", self.drift)
        if s2 < 0:
            raise ModelError("sigma2 must be >= 0")
        if s2 == 0:
            if self.drift <= 0:
                raise ModelError("finite variation requires drift > 0")
            if self.jumps.intensity <= 0:
                raise ModelError("finite variation with no jumps gives monotone paths")

    # -- classification ------------------------------------------------

    @property
    def is_finite_variation(self) -> bool:
        return self.sigma2 == 0.0

    @property
    def fv_drift(self) -> float:
        """The finite-variation slope; infinite for infinite-variation paths."""
        return self.drift if self.is_finite_variation else math.inf

    # -- Laplace exponent ----------------------------------------------

    def psi(self, lam):
        """Laplace exponent at ``lam`` (scalar or array), exact closed form."""
        lam = np.asarray(lam, dtype=float) if np.ndim(lam) else float(lam)
        return 0.5 * self.sigma2 * lam * lam + self.drift * lam + self.jumps.mgf_term(lam)

    def psi_prime(self, lam):
        """Exact derivative of the Laplace exponent; strictly increasing."""
        lam = np.asarray(lam, dtype=float) if np.ndim(lam) else float(lam)
        return self.sigma2 * lam + self.drift + self.jumps.mgf_term_prime(lam)

    def phi(self, q: float) -> float:
        """Largest root of psi = q (the right-continuous inverse of psi).

        Locates the convexity minimum first (the exponent is strictly convex)
        and then runs a Newton iteration safeguarded by bisection on the
        increasing branch.  Accuracy: |psi(root) - q| <= 1e-12 * max(1, q).
        """
        q = float(q)
        if q < 0:
            raise DomainError("phi is defined for q >= 0")
        tol = 1e-12 * max(1.0, abs(q))

        # Minimizer of psi: zero of the increasing derivative.
        if self.psi_prime(0.0) >= 0.0:
            lam_star = 0.0
            if q == 0.0:
                return 0.0  # psi increasing from psi(0)=0: largest zero is 0
        else:
            lo, hi = 0.0, 1.0
            it = 0
            while self.psi_prime(hi) < 0.0:
                lo, hi = hi, 2.0 * hi
                it += 1
                if it > _ROOT_MAX_ITER:
                    raise NoConvergence("could not bracket the exponent minimum")
            for _ in range(_ROOT_MAX_ITER):
                mid = 0.5 * (lo + hi)
                if self.psi_prime(mid) < 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-14 * max(1.0, hi):
                    break
            lam_star = 0.5 * (lo + hi)

        # Bracket the root on the increasing branch.
        lo = lam_star
        hi = lam_star + 1.0
        it = 0
        while self.psi(hi) <= q:
            lo, hi = hi, 2.0 * hi
            it += 1
            if it > _ROOT_MAX_ITER:
                raise NoConvergence("could not bracket the exponent root")

        x = hi
        for _ in range(_ROOT_MAX_ITER):
            fx = self.psi(x) - q
            if abs(fx) <= tol:
                return x
            if fx > 0:
                hi = x
            else:
                lo = x
            dfx = self.psi_prime(x)
            step_ok = dfx > 0
            if step_ok:
                x_new = x - fx / dfx
                step_ok = lo < x_new < hi
            if not step_ok:
                x_new = 0.5 * (lo + hi)
            x = x_new
        raise NoConvergence("exponent inversion did not converge in 200 iterations")


@dataclass(frozen=True)
class PssmpModel:
    """A killed spectrally negative parent plus a self-similarity index.

    Construction checks the standing assumption that the overall supremum of
    the self-similar process is finite, i.e. ``phi(p) > 0`` (automatic when
    ``p > 0``; for ``p == 0`` the parent must drift to minus infinity).
    """

    levy: LevyModel
    p: float
    alpha: float
    phi_p: float = None  # type: ignore[assignment]  # computed in __post_init__
    degeneracy: int | None = None

    def __post_init__(self) -> None:
        if not (_require_finite("p", self.p) >= 0):
            raise ModelError("killing rate p must be >= 0")
        if not (_require_finite("alpha", self.alpha) > 0):
            raise ModelError("self-similarity index alpha must be > 0")
        phi_p = self.levy.phi(self.p)
        if phi_p <= 0.0:
            raise ModelError(
                "phi(p) must be positive: with p = 0 the parent has to drift to -infinity"
            )
        object.__setattr__(self, "phi_p", phi_p)
        m = round(phi_p / self.alpha)
        degenerate = m >= 1 and abs(phi_p - m * self.alpha) < DEGENERACY_RTOL * max(1.0, phi_p)
        object.__setattr__(self, "degeneracy", int(m) if degenerate else None)

    @property
    def is_degenerate(self) -> bool:
        return self.degeneracy is not None

    def psi_killed(self, lam):
        """Exponent of the killed parent: psi(lam) - p."""
        return self.levy.psi(lam) - self.p


# -- classical identities -----------------------------------------------


def first_passage_transform(model: LevyModel, x: float, a: float, q: float) -> float:
    """E_x[exp(-q * first passage time above a); passage happens].

    Equals exp(-phi(q) * (a - x)) for x <= a.
    """
    if x > a:
        raise DomainError("first passage upwards needs x <= a")
    return math.exp(-model.phi(q) * (a - x))


def atom_at_maximum(model: PssmpModel) -> float:
    """Probability that the killed parent sits at its running maximum when killed.

    p / (phi(p) * drift) for finite variation, zero for infinite variation.
    """
    if not model.levy.is_finite_variation:
        return 0.0
    return model.p / (model.phi_p * model.levy.drift)


def ladder_up_exponent(model: LevyModel, gamma: float, delta: float) -> float:
    """Laplace exponent of the increasing ladder height process: phi(gamma) + delta."""
    if gamma < 0 or delta < 0:
        raise DomainError("ladder exponents need gamma, delta >= 0")
    return model.phi(gamma) + delta


def ladder_down_exponent(model: LevyModel, gamma: float, delta: float) -> float:
    """Laplace exponent of the decreasing ladder height process.

    (gamma - psi(delta)) / (phi(gamma) - delta), read as psi'(phi(gamma)) on
    the diagonal delta = phi(gamma).
    """
    if gamma < 0 or delta < 0:
        raise DomainError("ladder exponents need gamma, delta >= 0")
    phi_g = model.phi(gamma)
    if abs(phi_g - delta) < DEGENERACY_RTOL * max(1.0, phi_g):
        return model.psi_prime(phi_g)
    return (gamma - model.psi(delta)) / (phi_g - delta)


# -- JSON schema ----------------------------------------------------------
#
# {
#   "sigma2": number, "drift": number,
#   "jumps": {"intensity": number, "size_law": {...} | null},
#   "p": number, "alpha": number
# }
# size_law: {"type": "exp_neg", "rate": r} | {"type": "point_neg", "c": c}
#         | {"type": "mixture", "components": [{"weight": w, "law": {...}}, ...]}
# Unknown keys are rejected everywhere.


def _check_keys(obj: dict, required: set, optional: set = frozenset(), what: str = "object") -> None:
    if not isinstance(obj, dict):
        raise SchemaError(f"{what} must be a JSON object")
    keys = set(obj)
    unknown = keys - required - optional
    if unknown:
        raise SchemaError(f"unknown keys in {what}: {sorted(unknown)}")
    missing = required - keys
    if missing:
        raise SchemaError(f"missing keys in {what}: {sorted(missing)}")


def _number(obj: dict, key: str, what: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{what}.{key} must be a number")
    return float(v)


def _size_law_from_dict(obj: dict, *, allow_mixture: bool = True) -> JumpSizeLaw:
    _check_keys(obj, {"type"}, {"rate", "c", "components"}, "size_law")
    kind = obj["type"]
    if kind == "exp_neg":
        _check_keys(obj, {"type", "rate"}, what="size_law(exp_neg)")
        return ExponentialNegative(rate=_number(obj, "rate", "size_law"))
    if kind == "point_neg":
        _check_keys(obj, {"type", "c"}, what="size_law(point_neg)")
        return PointMassNegative(c=_number(obj, "c", "size_law"))
    if kind == "mixture":
        if not allow_mixture:
            raise SchemaError("mixtures cannot be nested")
        _check_keys(obj, {"type", "components"}, what="size_law(mixture)")
        comps = obj["components"]
        if not isinstance(comps, list):
            raise SchemaError("mixture components must be a list")
        parsed = []
        for comp in comps:
            _check_keys(comp, {"weight", "law"}, what="mixture component")
            w = _number(comp, "weight", "component")
            parsed.append((w, _size_law_from_dict(comp["law"], allow_mixture=False)))
        return FiniteMixture(components=tuple(parsed))
    raise SchemaError(f"unknown size_law type {kind!r}")


def _size_law_to_dict(law: JumpSizeLaw | None):
    if law is None:
        return None
    if isinstance(law, ExponentialNegative):
        return {"type": "exp_neg", "rate": law.rate}
    if isinstance(law, PointMassNegative):
        return {"type": "point_neg", "c": law.c}
    return {
        "type": "mixture",
        "components": [{"weight": w, "law": _size_law_to_dict(l)} for w, l in law.components],
    }


def model_from_dict(obj: dict) -> PssmpModel:
    """Build a model from the documented dict schema (strict keys)."""
    _check_keys(obj, {"sigma2", "drift", "jumps", "p", "alpha"}, what="model")
    jumps_obj = obj["jumps"]
    _check_keys(jumps_obj, {"intensity"}, {"size_law"}, "jumps")
    size_law_obj = jumps_obj.get("size_law")
    size_law = None if size_law_obj is None else _size_law_from_dict(size_law_obj)
    try:
        jumps = JumpSpec(intensity=_number(jumps_obj, "intensity", "jumps"), size_law=size_law)
        levy = LevyModel(
            sigma2=_number(obj, "sigma2", "model"),
            drift=_number(obj, "drift", "model"),
            jumps=jumps,
        )
        return PssmpModel(levy=levy, p=_number(obj, "p", "model"), alpha=_number(obj, "alpha", "model"))
    except ModelError:
        raise
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc)) from exc


def model_to_dict(model: PssmpModel) -> dict:
    return {
        "sigma2": model.levy.sigma2,
        "drift": model.levy.drift,
        "jumps": {
            "intensity": model.levy.jumps.intensity,
            "size_law": _size_law_to_dict(model.levy.jumps.size_law),
        },
        "p": model.p,
        "alpha": model.alpha,
    }


def load_model(path) -> PssmpModel:
    """Read a model file (JSON text, strict schema)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON in model file: {exc}") from exc
    return model_from_dict(obj)
