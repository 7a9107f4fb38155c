"""Laws and Laplace transforms at the maximum of the absorbed process.

Everything here is a deterministic function of an immutable model, built from
the two power-series families in :mod:`pssmax.series`:

* ``confined_absorption_transform`` -- transform of the absorption time on
  the event that the process never goes above a barrier;
* ``upcross_transform`` / ``peak_time_transform`` -- upward-passage and
  last-time-at-the-maximum transforms;
* ``jump_at_max_law`` -- mixed law (atom at 1 plus a continuous part pushed
  from the jump measure) of the relative jump at the overall maximum;
* ``residual_time_transform`` -- transform of the time from the maximum to
  absorption given the maximum and the jump there;
* ``absorption_transform`` -- unconditional transform, through two
  independent routes (series extension vs. integrating the conditional
  factorization against the exponential law of the maximum);
* ``sup_moment_transform`` and ``lookback_price``.

Integer seam: when ``phi(p)`` is an integer multiple of ``alpha`` the
absorption-series coefficients blow up and every formula is replaced by its
analytic limit (log-weighted series); the generic/limit switch is driven by
the model's ``degeneracy`` flag.

Far-argument guard: transforms that *vanish* as their series argument grows
(the extension value, the confined transform at a huge barrier, the
residual transform at a huge maximum) are replaced by their limit 0 (or the
barrier-free limit) once the argument is beyond the reliable series reach;
the replaced quantity is bounded by ``(p + jump intensity)/argument`` there,
an absolute bias of order 1e-4 or less that only matters for Monte Carlo
grade comparisons, never for the small-argument exact criteria.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConsistencyError,
    Degenerate,
    DomainError,
    NoConvergence,
    NotFiniteVariation,
)
from .models import ExponentialNegative, PointMassNegative, PssmpModel, atom_at_maximum
from .quadrature import adaptive_gk
from .series import series_table

__all__ = [
    "SupremumLaw",
    "JumpAtMaxLaw",
    "jump_at_max_law",
    "confined_absorption_transform",
    "residual_transform_iv",
    "upcross_transform",
    "peak_time_transform",
    "residual_time_transform",
    "absorption_transform_given",
    "absorption_transform",
    "sup_moment_transform",
    "lookback_price",
    "expected_peak_transform",
    "expected_residual_transform",
    "ConstantPayoff",
    "PowerPayoff",
    "CallPayoff",
    "IndicatorPayoff",
    "TabulatedPayoff",
]

#: two-route agreement tolerance for the unconditional transform
ROUTE_RTOL = 1e-6

#: direct evaluation of the confined transform is used while the largest
#: series term stays below e^10 (absolute cancellation error ~1e-11);
#: beyond that the cancellation-free extension identity takes over
_LOG_DIRECT = 10.0


def _z(model: PssmpModel, v, beta: float):
    return beta * np.asarray(v, dtype=float) ** model.alpha if np.ndim(v) else beta * v ** model.alpha


# -- supremum law ---------------------------------------------------------


@dataclass(frozen=True)
class SupremumLaw:
    """Law of the overall maximum: log(max / start) is exponential."""

    start: float
    rate: float

    def __post_init__(self) -> None:
        if not (self.start > 0 and self.rate > 0):
            raise DomainError("supremum law needs positive start and rate")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.start * np.exp(rng.exponential(1.0 / self.rate, size=n))

    def cdf(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = np.zeros_like(v)
        above = v > self.start
        out[above] = 1.0 - (self.start / v[above]) ** self.rate
        return out


def supremum_law(model: PssmpModel, y: float) -> SupremumLaw:
    return SupremumLaw(start=y, rate=model.phi_p)


# -- core transforms ------------------------------------------------------


class _ConfinedCtx:
    """Barrier-side context of the confined transform, reused across the
    many start levels an inner quadrature evaluates against one barrier."""

    __slots__ = ("model", "table", "d", "beta", "zd", "mode", "log_i_d", "side_d", "lw_d")

    def __init__(self, model: PssmpModel, d: float, beta: float):
        t = series_table(model)
        self.model, self.table, self.d, self.beta = model, t, d, beta
        zd = _z(model, d, beta)
        self.zd = zd
        self.lw_d = None
        if model.is_degenerate:
            if zd > t.reach():
                self.mode = "far"  # vanishing-limit guard, see module docstring
                return
            self.mode = "degenerate"
            self.log_i_d = t.passage_log(zd)
            self.side_d = t.partial_absorption(zd, model.degeneracy)
            self.lw_d = t.logweight(zd)
        elif zd <= t.reach() and t.log_max_term(zd, "a") <= _LOG_DIRECT:
            self.mode = "direct"
            self.log_i_d = t.passage_log(zd)
            self.side_d = t.absorption(zd)
        elif zd > t.reach():
            self.mode = "far"
        else:
            self.mode = "identity"
            self.log_i_d = t.passage_log(zd)
            self.side_d = float(t.extension_array(zd))

    def eval(self, y):
        """Confined transform at start levels y (scalar or array), y <= d."""
        model, t = self.model, self.table
        zy = _z(model, y, self.beta)
        if self.mode == "far":
            if model.is_degenerate:
                return np.zeros_like(np.asarray(y, dtype=float)) if np.ndim(y) else 0.0
            return t.extension_array(zy)
        pref = (np.asarray(y, dtype=float) / self.d) ** model.phi_p
        ratio = np.exp(t.passage_log(zy) - self.log_i_d)
        if self.mode == "degenerate":
            m = model.degeneracy
            with np.errstate(divide="ignore"):
                log_yd = np.log(np.asarray(y, dtype=float) / self.d)
            base = t.partial_absorption(zy, m) - pref * ratio * self.side_d
            lead = t.a(m - 1) * zy ** m / model.levy.psi_prime(model.phi_p)
            extra = lead * (log_yd * t.passage(zy) - t.logweight(zy) + ratio * self.lw_d)
            return np.minimum(np.clip(base + extra, 0.0, None), 1.0 - pref)
        side_y = t.absorption(zy) if self.mode == "direct" else t.extension_array(zy)
        raw = side_y - pref * ratio * self.side_d
        return np.minimum(np.clip(raw, 0.0, None), 1.0 - pref)


def _big_m_raw(model: PssmpModel, y, d: float, beta: float):
    """Confined absorption transform, vectorized over y <= d, scalar d.

    Three regimes: the plain series difference while cancellation is benign,
    the extension identity  f(z_y) - (y/d)^phi * ratio * f(z_d)  once the
    series values get large (f is the unconditional transform, evaluated
    cancellation-free), and the barrier-free limit f(z_y) once the barrier
    argument is beyond the series reach.
    """
    return _ConfinedCtx(model, d, beta).eval(y)


def confined_absorption_transform(model: PssmpModel, y: float, d: float, beta: float) -> float:
    """E_y[exp(-beta * absorption time); the process never exceeds d].

    Lies in [0, 1 - (y/d)^phi(p)]; reduces to that bound at beta = 0 and to
    0 at y = d.
    """
    if not (0 < y <= d):
        raise DomainError("need 0 < y <= d")
    if beta < 0:
        raise DomainError("beta must be >= 0")
    return float(_big_m_raw(model, y, d, beta))


def residual_transform_iv(model: PssmpModel, y, beta: float):
    """Transform of (absorption time - last time at the maximum) given the
    maximum equals y; the infinite-variation factor of the factorization.

    Defined for any model; meaningful as a conditional transform only when
    the parent has infinite variation (otherwise the jump at the maximum
    enters, see :func:`residual_time_transform`).
    """
    if beta < 0:
        raise DomainError("beta must be >= 0")
    scalar = np.ndim(y) == 0
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr <= 0):
        raise DomainError("y must be > 0")
    t = series_table(model)
    z = _z(model, y_arr, beta)
    out = np.zeros_like(z)
    al, phi = model.alpha, model.phi_p
    if model.is_degenerate:
        m = model.degeneracy
        near = z <= t.cancel_cap()  # vanishing-limit guard, see module notes
        z_near = z[near]
        big_i = t.passage(z_near)
        s1b = t.passage_kweighted(z_near)
        part = t.partial_absorption(z_near, m)
        part_k = t.partial_absorption(z_near, m, kweighted=True)
        val = part + (al / phi) * ((part / big_i) * s1b - part_k)
        lead = t.a(m - 1) * z_near ** m / (model.levy.psi_prime(phi) * phi)
        bracket = al * t.logweight_kweighted(z_near) - al * t.logweight(z_near) * s1b / big_i - big_i
        out[near] = val + lead * bracket
        return float(out) if scalar else out
    near = z <= t.cancel_cap()
    mid = ~near & (z <= t.ext_cap())  # rewrite via the extension, which is
    z_near = z[near]                  # cancellation-free at these sizes
    big_j = t.absorption(z_near)
    big_i = t.passage(z_near)
    out[near] = big_j + (al / phi) * (
        (big_j / big_i) * t.passage_kweighted(z_near) - t.absorption_kweighted(z_near)
    )
    if np.any(mid):
        # N = f (1 + (alpha z / phi) (log I)') - (alpha z / phi) f', with the
        # log-derivative of the passage series from a centered difference of
        # its log evaluation and f' from the tabulated spline slope
        z_mid = z[mid]
        f_val = t.extension_array(z_mid)
        f_prime = f_val * t.extension_log_slope(z_mid) / z_mid
        delta = 1e-4
        dlog_i = (t.passage_log(z_mid * (1 + delta)) - t.passage_log(z_mid * (1 - delta))) \
            / (2 * delta * z_mid)
        w = al * z_mid / phi
        out[mid] = np.clip(f_val * (1.0 + w * dlog_i) - w * f_prime, 0.0, 1.0)
    return float(out) if scalar else out


def upcross_transform(model: PssmpModel, y: float, d: float, gamma: float) -> float:
    """E_y[exp(-gamma * first passage above d); passage before absorption]."""
    if not (0 < y <= d):
        raise DomainError("need 0 < y <= d")
    if gamma < 0:
        raise DomainError("gamma must be >= 0")
    t = series_table(model)
    return float(
        (y / d) ** model.phi_p
        * math.exp(t.passage_log(_z(model, y, gamma)) - t.passage_log(_z(model, d, gamma)))
    )


def peak_time_transform(model: PssmpModel, y: float, sup, gamma: float):
    """Transform of the last time at the running maximum, conditionally on
    the overall maximum: passage-series ratio, decreasing in the maximum."""
    if gamma < 0:
        raise DomainError("gamma must be >= 0")
    if y <= 0:
        raise DomainError("y must be > 0")
    sup_arr = np.asarray(sup, dtype=float)
    if np.any(sup_arr < y):
        raise DomainError("the maximum cannot be below the start")
    t = series_table(model)
    out = np.exp(t.passage_log(_z(model, y, gamma)) - t.passage_log(_z(model, sup_arr, gamma)))
    return float(out) if np.ndim(sup) == 0 else out


# -- law of the jump at the maximum ---------------------------------------


@dataclass
class JumpAtMaxLaw:
    """Mixed law of the relative jump at the overall maximum (finite variation).

    Atom at 1 of mass p/(phi(p)*drift); continuous part on (0,1) pushed from
    the jump measure with density weight (1 - j^phi(p)).
    """

    model: PssmpModel
    atom_mass: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.model.levy.is_finite_variation:
            raise NotFiniteVariation("the jump at the maximum is 1 a.s. for infinite variation")
        self.atom_mass = atom_at_maximum(self.model)

    # components as (arrival weight, law) pairs
    def _components(self):
        spec = self.model.levy.jumps
        law = spec.size_law
        if isinstance(law, (ExponentialNegative, PointMassNegative)):
            return [(spec.intensity, law)]
        return [(spec.intensity * w, comp) for w, comp in law.components]

    def continuous_mass(self) -> float:
        """Closed-form mass of the continuous part."""
        phi = self.model.phi_p
        denom = phi * self.model.levy.drift
        total = 0.0
        for w, law in self._components():
            if isinstance(law, ExponentialNegative):
                total += w * phi / (law.rate + phi)   # integral of (1-e^{phi z}) vs law
            else:
                total += w * (1.0 - math.exp(-phi * law.c))
        return total / denom

    def mass(self) -> float:
        return self.atom_mass + self.continuous_mass()

    def integrate(self, g, abs_tol: float = 1e-10) -> float:
        """Expectation of g(J); ``g`` must accept float arrays.

        Atom and point components are exact; exponential components use
        adaptive quadrature on the log scale (x = -rate * log j), where the
        integrand is analytic with weight e^-x.
        """
        phi = self.model.phi_p
        denom = phi * self.model.levy.drift
        total = self.model.p * float(np.asarray(g(np.array([1.0])))[0])
        for w, law in self._components():
            if isinstance(law, PointMassNegative):
                j = math.exp(-law.c)
                total += w * float(np.asarray(g(np.array([j])))[0]) * (1.0 - j ** phi)
            else:
                eta = law.rate

                def f(x, eta=eta):
                    j = np.exp(-x / eta)
                    return np.exp(-x) * np.asarray(g(j), dtype=float) * (1.0 - j ** phi)

                x_end = -math.log(max(abs_tol * denom / max(w, 1e-300) * 0.1, 1e-300))
                total += w * adaptive_gk(f, 0.0, x_end, abs_tol=abs_tol * denom,
                                         rel_tol=1e-12, initial=4)
        return total / denom

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n values of the jump at the maximum (atom + rejection)."""
        out = np.ones(n)
        u = rng.random(n)
        cont = u >= self.atom_mass
        idx = np.flatnonzero(cont)
        if idx.size == 0:
            return out
        comps = self._components()
        weights = np.array([
            w * (self.model.phi_p / (law.rate + self.model.phi_p)
                 if isinstance(law, ExponentialNegative)
                 else 1.0 - math.exp(-self.model.phi_p * law.c))
            for w, law in comps
        ])
        weights = weights / weights.sum()
        pick = rng.choice(len(comps), size=idx.size, p=weights)
        phi = self.model.phi_p
        for ci, (_, law) in enumerate(comps):
            sel = idx[pick == ci]
            if sel.size == 0:
                continue
            if isinstance(law, PointMassNegative):
                out[sel] = math.exp(-law.c)
            else:
                need = sel
                while need.size:
                    z = -rng.exponential(1.0 / law.rate, size=need.size)
                    acc = rng.random(need.size) < (1.0 - np.exp(phi * z))
                    out[need[acc]] = np.exp(z[acc])
                    need = need[~acc]
        return out


def jump_at_max_law(model: PssmpModel) -> JumpAtMaxLaw:
    return JumpAtMaxLaw(model)


# -- conditional residual transform ---------------------------------------


def residual_time_transform(model: PssmpModel, sup: float, j: float, beta: float) -> float:
    """Transform of (absorption time - last time at the maximum) given the
    maximum ``sup`` and the jump ``j`` there.

    Finite variation: confined transform scaled by 1/(1 - j^phi(p)) for
    j < 1, and exactly 1 on the atom j = 1 (the process is absorbed at its
    maximum there).  Infinite variation: only j = 1 is admissible.
    """
    if not (0.0 < j <= 1.0):
        raise DomainError("j must lie in (0, 1]")
    if sup <= 0:
        raise DomainError("sup must be > 0")
    if beta < 0:
        raise DomainError("beta must be >= 0")
    if model.levy.is_finite_variation:
        if j == 1.0:
            return 1.0
        return confined_absorption_transform(model, sup * j, sup, beta) / (1.0 - j ** model.phi_p)
    if j != 1.0:
        raise DomainError("infinite variation: the jump at the maximum is 1 a.s.")
    return float(residual_transform_iv(model, sup, beta))


def absorption_transform_given(model: PssmpModel, y: float, sup: float, j: float, beta: float) -> float:
    """Conditional transform of the absorption time given the maximum and
    the jump at the maximum: product of the two factors."""
    return float(peak_time_transform(model, y, sup, beta)) * residual_time_transform(model, sup, j, beta)


# -- unconditional absorption transform ------------------------------------


def _sup_quadrature(model: PssmpModel, inner, growth: float, decay_log, abs_tol: float,
                    rel_tol: float, breakpoints=()):
    """integral over u of phi e^{-phi u} * inner(u, start*e^u)-style weights.

    ``inner(u_array)`` must be vectorized; ``decay_log(u)`` returns a log
    upper bound (up to constants) for |inner| used to pick the truncation
    point; ``growth`` adds e^{growth*u} headroom to the weight.
    """
    phi = model.phi_p
    step = 1.0 / phi
    cap = 800
    peak = -math.inf
    t_end = 0.0
    for i in range(1, cap + 1):
        t_end = i * step
        b = (growth - phi) * t_end + decay_log(t_end)
        peak = max(peak, b)
        if b < peak - 39.0:  # tail below e^-39 of the peak contribution
            break
    else:
        raise NoConvergence("could not truncate the supremum-law integral")

    def weighted(u):
        return phi * np.exp(-phi * u) * inner(u)

    return adaptive_gk(weighted, 0.0, t_end, abs_tol=abs_tol, rel_tol=rel_tol,
                       breakpoints=breakpoints)


def _residual_expectation_fv(model: PssmpModel, s: float, beta: float, h=None,
                             abs_tol: float | None = None) -> float:
    """E[h(s, J) * residual transform(s, J, beta)] over the jump law, fixed s.

    The 1/(1 - j^phi) factor of the conditional transform cancels against
    the (1 - j^phi) weight of the jump law, leaving the confined transform
    integrated directly against the jump measure (on the log scale, where
    the integrand is analytic).  ``abs_tol`` lets callers relax the inner
    accuracy where an outer weight damps this value anyway.
    """
    law = jump_at_max_law(model)
    phi = model.phi_p
    denom = phi * model.levy.drift
    h1 = 1.0 if h is None else float(np.asarray(h(np.array([s]), np.array([1.0])))[0])
    total = law.atom_mass * h1
    ctx = _ConfinedCtx(model, s, beta)
    # the seam's limiting formula has no cancellation-free rewrite, so its
    # noise floor caps the useful tolerance (no two-route check exists there)
    base_tol = (5e-8 if model.is_degenerate else 1e-12) * denom
    abs_tol = base_tol if abs_tol is None else max(base_tol, abs_tol)
    rel_tol = 3e-8 if model.is_degenerate else 3e-10
    for w, comp in law._components():
        if isinstance(comp, PointMassNegative):
            j = math.exp(-comp.c)
            hv = 1.0 if h is None else float(np.asarray(h(np.array([s]), np.array([j])))[0])
            total += w * float(ctx.eval(s * j)) * hv / denom
        else:
            eta = comp.rate

            def f(x, eta=eta):
                j = np.exp(-x / eta)
                vals = np.exp(-x) * ctx.eval(s * j)
                if h is not None:
                    vals = vals * np.asarray(h(np.full_like(j, s), j), dtype=float)
                return vals

            total += w * adaptive_gk(f, 0.0, 32.0, abs_tol=abs_tol,
                                     rel_tol=rel_tol, initial=4) / denom
    return total


def absorption_transform(model: PssmpModel, y: float, beta: float, method: str = "extension"):
    """Unconditional transform E_y[exp(-beta * absorption time)].

    ``method='extension'`` evaluates the closed series form with the
    tail-matching constant (undefined on the integer seam);
    ``method='integrated'`` integrates the conditional factorization against
    the exponential law of the maximum (and the jump law for finite
    variation); ``method='both'`` returns the pair after checking that they
    agree to 1e-6 relative.
    """
    if y <= 0:
        raise DomainError("y must be > 0")
    if beta < 0:
        raise DomainError("beta must be >= 0")
    method = method.lower()
    if method == "both":
        ext = absorption_transform(model, y, beta, "extension")
        integ = absorption_transform(model, y, beta, "integrated")
        if abs(ext - integ) > ROUTE_RTOL * max(abs(ext), abs(integ)):
            raise ConsistencyError(
                f"extension {ext!r} vs integrated {integ!r} disagree beyond {ROUTE_RTOL}"
            )
        return ext, integ
    if method == "extension":
        if beta == 0.0:
            return 1.0
        return series_table(model).extension(_z(model, y, beta))
    if method != "integrated":
        raise DomainError(f"unknown method {method!r}")

    if beta == 0.0:
        return 1.0
    t = series_table(model)
    zy = _z(model, y, beta)
    log_iy = t.passage_log(zy)

    if model.levy.is_finite_variation:
        atom = atom_at_maximum(model)
        # on the seam the limiting formula is only trustworthy while the
        # series terms stay small; past that the continuous part has decayed
        # and the residual expectation is replaced by its limit, the atom
        seam_cap = t.cancel_cap(12.0) if model.is_degenerate else math.inf

        def inner(u):
            s_vals = y * np.exp(u)
            ratio = np.exp(log_iy - t.passage_log(_z(model, s_vals, beta)))
            resid = np.zeros_like(s_vals)
            for i, s in enumerate(s_vals):
                if ratio[i] <= 1e-16:  # the ratio already kills these nodes
                    continue
                if _z(model, s, beta) > seam_cap:
                    resid[i] = atom
                else:
                    resid[i] = _residual_expectation_fv(
                        model, s, beta, abs_tol=1e-13 / ratio[i])
            return ratio * resid
    else:
        def inner(u):
            s_vals = y * np.exp(u)
            ratio = np.exp(log_iy - t.passage_log(_z(model, s_vals, beta)))
            return ratio * residual_transform_iv(model, s_vals, beta)

    def decay_log(u):
        return float(log_iy - t.passage_log(_z(model, y * math.exp(u), beta)))

    return _sup_quadrature(model, inner, 0.0, decay_log, abs_tol=1e-11, rel_tol=1e-9)


# -- weighted expectations for verification -------------------------------


def expected_peak_transform(model: PssmpModel, y: float, gamma: float, g, growth: float = 0.0) -> float:
    """E[exp(-gamma * last time at max) * g(overall max)] for vectorized g."""
    if y <= 0 or gamma < 0:
        raise DomainError("need y > 0 and gamma >= 0")
    t = series_table(model)
    log_iy = t.passage_log(_z(model, y, gamma))

    def inner(u):
        s_vals = y * np.exp(u)
        ratio = np.exp(log_iy - t.passage_log(_z(model, s_vals, gamma)))
        return ratio * np.asarray(g(s_vals), dtype=float)

    def decay_log(u):
        return float(log_iy - t.passage_log(_z(model, y * math.exp(u), gamma)))

    return _sup_quadrature(model, inner, growth, decay_log, abs_tol=1e-10, rel_tol=1e-9)


def expected_residual_transform(model: PssmpModel, y: float, beta: float, h=None,
                                growth: float = 0.0) -> float:
    """E[exp(-beta * residual time) * h(overall max, jump at max)].

    ``h(s_array, j_array)`` vectorized; defaults to 1.  For finite variation
    the atom contribution is exact and the continuous part integrates the
    confined transform against the jump measure; for infinite variation the
    residual factor is the barrier-free transform of the maximum.

    Not available on the integer seam: the limiting formulas have no
    cancellation-free rewrite, and without the passage-ratio damping of the
    unconditional transform their noise at large maxima swamps the tail of
    this expectation.
    """
    if y <= 0 or beta < 0:
        raise DomainError("need y > 0 and beta >= 0")
    if model.is_degenerate and beta > 0:
        raise Degenerate(
            "the weighted residual expectation is not available on the integer seam; "
            "the unconditional transform and the pointwise residual transforms remain usable"
        )

    if model.levy.is_finite_variation:
        law = jump_at_max_law(model)

        def inner_atom(u):
            s_vals = y * np.exp(u)
            h1 = np.ones_like(s_vals) if h is None else np.asarray(h(s_vals, np.ones_like(s_vals)), dtype=float)
            return law.atom_mass * h1

        atom_part = _sup_quadrature(model, inner_atom, growth, lambda u: 0.0,
                                    abs_tol=1e-11, rel_tol=1e-10)

        def inner_cont(u):
            s_vals = y * np.exp(u)
            vals = np.empty_like(s_vals)
            for i, s in enumerate(s_vals):
                vals[i] = _residual_expectation_fv(model, s, beta, h) \
                    - law.atom_mass * (1.0 if h is None
                                       else float(np.asarray(h(np.array([s]), np.array([1.0])))[0]))
            return vals

        decay_cont = _continuous_decay_bound(model, y, beta)
        cont_part = _sup_quadrature(model, inner_cont, growth, decay_cont,
                                    abs_tol=1e-9, rel_tol=1e-8)
        return atom_part + cont_part

    c_bound = model.p + model.levy.jumps.intensity + model.levy.sigma2

    def inner(u):
        s_vals = y * np.exp(u)
        vals = residual_transform_iv(model, s_vals, beta)
        if h is not None:
            vals = vals * np.asarray(h(s_vals, np.ones_like(s_vals)), dtype=float)
        return vals

    def decay_log(u):
        if beta == 0.0:
            return 0.0
        a = c_bound / max(_z(model, y * math.exp(u), beta), 1e-300)
        return math.log(min(1.0, a))

    return _sup_quadrature(model, inner, growth, decay_log, abs_tol=1e-9, rel_tol=1e-8)


def _continuous_decay_bound(model: PssmpModel, y: float, beta: float):
    """Truncation log-bound for the continuous part of the residual
    expectation: the confined transform integrated against the jump measure
    decays polynomially in the maximum (first-jump bound (p+intensity)/z)."""
    c_f = model.p + model.levy.jumps.intensity
    comps = jump_at_max_law(model)._components()
    alpha = model.alpha

    def bound_log(u):
        if beta == 0.0:
            return 0.0
        zd = _z(model, y * math.exp(u), beta)
        total = 0.0
        for w, law in comps:
            if isinstance(law, PointMassNegative):
                a = min(1.0, c_f / max(zd * math.exp(-alpha * law.c), 1e-300))
                total += w * a
            else:
                a = min(1.0, c_f / max(zd, 1e-300))
                q = min(1.0, law.rate / alpha)
                total += w * min(1.0, 6.0 * a ** q * (1.0 + abs(math.log(a))))
        return math.log(min(1.0, total) + 1e-300)

    return bound_log


# -- moments of the running maximum ----------------------------------------


def sup_moment_transform(model: PssmpModel, y: float, k: float, gamma: float) -> float:
    """Moments of the running maximum sampled at an independent exponential
    time of rate gamma: integral form of the k-th moment transform."""
    if y <= 0:
        raise DomainError("y must be > 0")
    if gamma <= 0:
        raise DomainError("gamma must be > 0")
    if k < 0:
        raise DomainError("k must be >= 0")
    if k == 0:
        return 1.0
    t = series_table(model)
    log_iy = t.passage_log(_z(model, y, gamma))
    phi = model.phi_p

    # y^k + k * integral over m>y of m^(k-1) (y/m)^phi ratio dm, m = y e^u
    def inner(u):
        s_vals = y * np.exp(u)
        return np.exp(k * u + log_iy - t.passage_log(_z(model, s_vals, gamma)))

    def decay_log(u):
        return float(k * u + log_iy - t.passage_log(_z(model, y * math.exp(u), gamma)))

    # fold the phi e^{-phi u} weight of the helper into the k-integral
    integral = _sup_quadrature(model, inner, 0.0, decay_log, abs_tol=1e-12, rel_tol=1e-10)
    return y ** k * (1.0 + k * integral / phi)


# -- lookback pricing -------------------------------------------------------


class ConstantPayoff:
    """f(s) = value."""

    growth_exponent = 0.0
    breakpoints: tuple = ()

    def __init__(self, value: float = 1.0):
        if value < 0:
            raise DomainError("payoffs are nonnegative")
        self.value = float(value)

    def __call__(self, s):
        return np.full_like(np.asarray(s, dtype=float), self.value)


class PowerPayoff:
    """f(s) = s^k."""

    breakpoints: tuple = ()

    def __init__(self, k: float):
        if k < 0:
            raise DomainError("power payoffs need k >= 0")
        self.k = float(k)
        self.growth_exponent = self.k

    def __call__(self, s):
        return np.asarray(s, dtype=float) ** self.k


class CallPayoff:
    """f(s) = max(s - strike, 0)."""

    growth_exponent = 1.0

    def __init__(self, strike: float):
        self.strike = float(strike)
        self.breakpoints = (self.strike,)

    def __call__(self, s):
        return np.maximum(np.asarray(s, dtype=float) - self.strike, 0.0)


class IndicatorPayoff:
    """f(s) = 1{s > level}."""

    growth_exponent = 0.0

    def __init__(self, level: float):
        self.level = float(level)
        self.breakpoints = (self.level,)

    def __call__(self, s):
        return (np.asarray(s, dtype=float) > self.level).astype(float)


class TabulatedPayoff:
    """Nondecreasing piecewise-linear payoff, constant beyond the last knot."""

    growth_exponent = 0.0

    def __init__(self, knots, values):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape or knots.size < 2:
            raise DomainError("need matching 1-d knots/values with at least two points")
        if np.any(np.diff(knots) <= 0) or np.any(np.diff(values) < 0) or np.any(values < 0):
            raise DomainError("tabulated payoff must be nondecreasing and nonnegative")
        self.knots, self.values = knots, values
        self.breakpoints = tuple(knots.tolist())

    def __call__(self, s):
        return np.interp(np.asarray(s, dtype=float), self.knots, self.values)


def lookback_price(model: PssmpModel, y: float, r: float, payoff) -> float:
    """Expected discounted payoff of the maximum at absorption:
    E_y[exp(-r * absorption time) * payoff(overall maximum)].

    The payoff must be nondecreasing and of polynomial growth strictly
    below phi(p) so its expectation under the exponential-tail law of the
    maximum is finite.
    """
    if y <= 0 or r < 0:
        raise DomainError("need y > 0 and r >= 0")
    growth = float(getattr(payoff, "growth_exponent", math.inf))
    if growth >= model.phi_p - 1e-9 * max(1.0, model.phi_p):
        raise DomainError(
            f"payoff growth exponent {growth} is not integrable against the "
            f"exponential maximum tail of rate {model.phi_p}"
        )
    if isinstance(payoff, ConstantPayoff):
        if r == 0.0:
            return payoff.value
        return payoff.value * absorption_transform(model, y, r, "integrated")

    t = series_table(model)
    zy = _z(model, y, r)
    log_iy = t.passage_log(zy)

    bps = tuple(math.log(b / y) for b in getattr(payoff, "breakpoints", ()) if b > y)

    if r == 0.0:
        def inner0(u):
            return np.asarray(payoff(y * np.exp(u)), dtype=float)

        return _sup_quadrature(model, inner0, growth, lambda u: 0.0, abs_tol=1e-8,
                               rel_tol=1e-9, breakpoints=bps)

    if model.levy.is_finite_variation:
        def inner(u):
            s_vals = y * np.exp(u)
            ratio = np.exp(log_iy - t.passage_log(_z(model, s_vals, r)))
            resid = np.array([_residual_expectation_fv(model, s, r) for s in s_vals])
            return ratio * resid * np.asarray(payoff(s_vals), dtype=float)
    else:
        def inner(u):
            s_vals = y * np.exp(u)
            ratio = np.exp(log_iy - t.passage_log(_z(model, s_vals, r)))
            return ratio * residual_transform_iv(model, s_vals, r) * np.asarray(payoff(s_vals), dtype=float)

    def decay_log(u):
        return float(log_iy - t.passage_log(_z(model, y * math.exp(u), r)))

    return _sup_quadrature(model, inner, growth, decay_log, abs_tol=1e-8, rel_tol=1e-9,
                           breakpoints=bps)
