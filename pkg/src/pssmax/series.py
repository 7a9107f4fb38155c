"""Entire power series attached to a killed Laplace exponent.

Two families drive every transform in the package: the *absorption* series
with coefficients ``1 / prod_{l<=k} (psi(l*alpha) - p)`` and the *passage*
series with coefficients ``1 / prod_{l<=k} (psi(phi(p) + l*alpha) - p)``
(the same construction applied to the exponent tilted to the inverse point).
Both are entire with coefficient ratios tending to zero, so evaluation is a
truncated power sum; cancellation between early terms of the absorption
series (whose coefficients may alternate before settling on one sign) is
controlled with compensated summation.

A log-scaled evaluation path is provided for the huge arguments that appear
while locating integral truncation points and the tail-matching constant;
there the series value overflows double precision long before the ratios of
interest stop being perfectly representable.

The *extension* transform (absorption series minus the tail-matched multiple
of the passage series) is a tame number in (0, 1] assembled from pieces that
agree to roughly log10 of the largest series term digits.  It is evaluated
in multiprecision at a working precision adapted to the argument: exactly
for scalar calls, and through a lazily grown log-log spline table for the
array calls issued by the quadratures.
"""

from __future__ import annotations

import math
import threading

import mpmath as mp
import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConsistencyError, Degenerate, DomainError, ModelError, NoConvergence
from .models import ExponentialNegative, PointMassNegative, PssmpModel

__all__ = ["SeriesTable", "series_table"]

_GROW_CHUNK = 64
_MP_TIER = 64            # precision tiers (decimal digits) for the mp layer
_MP_DPS_TABLE = 280      # precision cap for tabulated extension values
_MP_DPS_SCALAR = 1200    # precision cap for scalar extension calls
_EXT_NODES_PER_DECADE = 40
_EXT_TINY = 1e-10
_LOG10 = math.log(10.0)
#: beyond this log-magnitude the plain sums would overflow double precision
_LOG_FLOAT_MAX = 690.0


class _MpCtx:
    """Per-precision-tier multiprecision context: the inverse point and the
    two factor families, all rounded at the same working precision."""

    def __init__(self, table: "SeriesTable", dps: int):
        self.dps = dps
        self.table = table
        with mp.workdps(dps):
            self.phi = mp.findroot(table._mp_psi_killed, mp.mpf(table.model.phi_p))
        self.fa: list = []
        self.fb: list = []

    def factor(self, k: int, family: str):
        cache = self.fa if family == "a" else self.fb
        if len(cache) < k:
            table = self.table
            with mp.workdps(self.dps):
                while len(cache) < k:
                    lam = mp.mpf(len(cache) + 1) * mp.mpf(table.model.alpha)
                    if family == "b":
                        lam += self.phi
                    cache.append(table._mp_psi_killed(lam))
        return cache[k - 1]

    def series(self, z, family: str):
        """Plain family sum at an mpf argument (term recurrence)."""
        tol = mp.mpf(10) ** (8 - self.dps)
        s = mp.mpf(1)
        t = mp.mpf(1)
        k = 0
        streak = 0
        while True:
            k += 1
            if k > self.table.k_max:
                raise NoConvergence(f"series needed more than {self.table.k_max} terms")
            t = t * z / self.factor(k, family)
            s += t
            if abs(t) <= tol * (1 + abs(s)):
                streak += 1
                if streak >= 2:
                    return s
            else:
                streak = 0

    def tail_constant(self):
        """Ratio limit along the doubling grid, stabilized to this tier
        (just above the series truncation noise, so the test can fire)."""
        deep_tol = mp.mpf(10) ** (-self.dps + 12)
        with mp.workdps(self.dps):
            power = self.phi / mp.mpf(self.table.model.alpha)
            r_prev = None
            for n in range(81):
                z = mp.mpf(2) ** n
                r = self.series(z, "a") / (z ** power * self.series(z, "b"))
                if r_prev is not None and abs(r - r_prev) < deep_tol * abs(r_prev):
                    return r
                r_prev = r
        raise NoConvergence("tail-constant ratio did not stabilize")


class SeriesTable:
    """Coefficient tables and evaluators for one model.

    The table is lazily extended as larger arguments demand more terms;
    extension is guarded by a lock and published atomically, so concurrent
    readers are safe.  ``tol`` is the relative truncation tolerance (a term
    is negligible when ``|term| <= tol * (1 + |partial sum|)``; two
    consecutive negligible terms end the sum, which guards against a single
    accidental near-zero term while early coefficients still alternate in
    sign).  ``k_max`` caps the number of terms.
    """

    def __init__(self, model: PssmpModel, tol: float = 1e-14, k_max: int = 10_000,
                 tail_tol: float = 1e-10):
        self.model = model
        self.tol = float(tol)
        self.k_max = int(k_max)
        self.tail_tol = float(tail_tol)
        self._lock = threading.Lock()
        # factors f^a_k = psi(k a)-p and f^b_k = psi(phi_p + k a)-p, k >= 1
        self._fa = np.empty(0)
        self._fb = np.empty(0)
        self._log_abs_fa = np.empty(0)
        self._log_fb = np.empty(0)
        self._cum_log_abs_fa = np.empty(0)
        self._cum_log_fb = np.empty(0)
        self._wc = np.empty(0)  # increments psi'(phi_p+ka) / f^b_k
        self._tail_constant: float | None = None
        self._tail_trace: list[float] | None = None
        self._mp_ctxs: dict[int, _MpCtx] = {}
        self._tail_mpf: dict[int, object] = {}
        self._ext_log_z: np.ndarray | None = None  # spline nodes (log argument)
        self._ext_splines = None

    # -- factor table ----------------------------------------------------

    def _grow(self, n: int) -> None:
        with self._lock:
            have = len(self._fa)
            if have >= n:
                return
            n = max(n, have + _GROW_CHUNK, 2 * have)
            ks = np.arange(have + 1, n + 1, dtype=float)
            m = self.model
            fa = np.asarray(m.psi_killed(ks * m.alpha), dtype=float)
            lam_b = m.phi_p + ks * m.alpha
            fb = np.asarray(m.psi_killed(lam_b), dtype=float)
            if np.any(fb <= 0.0):
                raise ModelError("tilted exponent factors must be positive; malformed model")
            if not self.model.is_degenerate and np.any(fa == 0.0):
                raise ModelError("exact zero factor off the degenerate seam; malformed model")
            wc = np.asarray(m.levy.psi_prime(lam_b), dtype=float) / fb
            self._fa = np.concatenate([self._fa, fa])
            self._fb = np.concatenate([self._fb, fb])
            with np.errstate(divide="ignore"):
                self._log_abs_fa = np.concatenate([self._log_abs_fa, np.log(np.abs(fa))])
            self._log_fb = np.concatenate([self._log_fb, np.log(fb)])
            self._cum_log_abs_fa = np.cumsum(self._log_abs_fa)
            self._cum_log_fb = np.cumsum(self._log_fb)
            self._wc = np.concatenate([self._wc, wc])

    def _factors(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if len(self._fa) < n:
            self._grow(n)
        return self._fa, self._fb, self._wc

    def term_count(self, z: float, family: str = "b") -> int:
        """Terms a direct sum needs at argument z (ratio-decay estimate)."""
        if z <= 0.0:
            return 4
        k = 8
        while True:
            fa, fb, _ = self._factors(k)
            f = fa if family == "a" else fb
            if abs(f[k - 1]) > 2.0 * z or k >= self.k_max:
                return min(k + 64, self.k_max)
            k *= 2

    def log_max_term(self, z: float, family: str = "a") -> float:
        """log of the largest absolute term of a family sum at argument z.

        Gauges the cancellation floor of a direct evaluation: the absolute
        rounding error is roughly eps * k * exp(log_max_term)."""
        if z <= 0.0:
            return 0.0
        k = self.term_count(z, family)
        self._factors(k)
        cum = self._cum_log_abs_fa if family == "a" else self._cum_log_fb
        vals = math.log(z) * np.arange(1, k + 1) - cum[:k]
        return max(0.0, float(vals.max()))

    def reach(self) -> float:
        """Largest argument the direct summation handles: the term cap and
        the double-precision magnitude ceiling, whichever binds first."""
        cached = getattr(self, "_reach_cache", None)
        if cached is None:
            k = max(self.k_max // 2, 1)
            fb = self._factors(k)[1]
            cached = 0.8 * float(fb[k - 1])
            if self.log_max_term(cached, "b") > 600.0:
                lo, hi = 1.0, cached
                for _ in range(60):
                    mid = math.sqrt(lo * hi)
                    if self.log_max_term(mid, "b") <= 600.0:
                        lo = mid
                    else:
                        hi = mid
                cached = lo
            self._reach_cache = cached
        return cached

    # -- coefficients ------------------------------------------------------

    def _a_guard(self, k: int) -> None:
        if self.model.is_degenerate and k >= self.model.degeneracy:
            raise Degenerate(
                "absorption coefficients past the blow-up index are undefined on the seam"
            )

    def a(self, k: int) -> float:
        """Absorption-series coefficient (plain float; underflows for large k)."""
        self._a_guard(k)
        self._factors(max(k, 1))
        return float(np.prod(1.0 / self._fa[:k])) if k else 1.0

    def b(self, k: int) -> float:
        """Passage-series coefficient."""
        self._factors(max(k, 1))
        return float(np.prod(1.0 / self._fb[:k])) if k else 1.0

    def c(self, k: int) -> float:
        """Log-weighted passage coefficient b_k * sum_{l<=k} psi'/(psi-p) at the tilt."""
        if k < 1:
            raise DomainError("log-weighted coefficients start at k = 1")
        self._factors(k)
        return self.b(k) * float(np.sum(self._wc[:k]))

    def a_sign_changes(self, upto: int = 64) -> list[int]:
        """Indices k where the absorption coefficient changes sign (diagnostic)."""
        self._a_guard(upto)
        fa, _, _ = self._factors(upto)
        signs = np.cumprod(np.sign(fa[:upto]))
        return [int(k) for k in range(1, upto) if signs[k] != signs[k - 1]]

    def a_ultimate_sign(self) -> int:
        """Sign shared by all late absorption coefficients."""
        if self.model.is_degenerate:
            raise Degenerate("absorption coefficients undefined on the integer seam")
        k0 = int(math.ceil(self.model.phi_p / self.model.alpha)) + 1
        fa, _, _ = self._factors(k0)
        return int(np.sign(np.prod(np.sign(fa[:k0]))))

    # -- direct evaluation -------------------------------------------------

    def _sum_terms_scalar(self, x: float, family: str, weight: str) -> float:
        fa, fb, wc = self._fa, self._fb, self._wc
        have = len(fa)
        tol = self.tol
        s = 0.0 if weight != "none" else 1.0
        comp = 0.0
        term = 1.0
        wsum = 0.0
        streak = 0
        k = 0
        while True:
            k += 1
            if k > have:
                fa, fb, wc = self._factors(k)
                have = len(fa)
            if k > self.k_max:
                raise NoConvergence(f"series needed more than {self.k_max} terms")
            term *= x / (fa[k - 1] if family == "a" else fb[k - 1])
            if weight == "none":
                contrib = term
            elif weight == "k":
                contrib = term * k
            else:
                wsum += wc[k - 1]
                contrib = term * (wsum if weight == "logw" else k * wsum)
            # Neumaier step
            t = s + contrib
            if abs(s) >= abs(contrib):
                comp += (s - t) + contrib
            else:
                comp += (contrib - t) + s
            s = t
            if abs(contrib) <= tol * (1.0 + abs(s)):
                streak += 1
                if streak >= 2:
                    break
            else:
                streak = 0
        out = s + comp
        if not math.isfinite(out):
            raise NoConvergence("series evaluation overflowed; use the log-scaled path")
        return out

    def _sum_terms(self, x, family: str, weight: str = "none"):
        """Truncated compensated power sum over one coefficient family.

        family: 'a' or 'b'.  weight: 'none' (plain series), 'k' (terms times
        k, starting at k=1), 'logw' (terms times the cumulative log-weight,
        i.e. the series used by the integer-seam limits), 'klogw' (both).
        """
        if family == "a" and self.model.is_degenerate:
            raise Degenerate("absorption series undefined on the integer seam")
        if np.ndim(x) == 0:
            if x < 0:
                raise DomainError("series arguments must be >= 0")
            return self._sum_terms_scalar(float(x), family, weight)
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0):
            raise DomainError("series arguments must be >= 0")
        if x_arr.size == 0:
            return np.ones_like(x_arr) if weight == "none" else np.zeros_like(x_arr)
        x_max = float(x_arr.max())
        n_terms = self.term_count(x_max, family)
        fa, fb, wc = self._factors(n_terms)
        f = fa if family == "a" else fb
        if n_terms >= self.k_max and abs(f[n_terms - 1]) < 2.0 * x_max:
            raise NoConvergence(f"series needed more than {self.k_max} terms")
        # one cumulative product builds every term; pairwise summation is
        # ample except under real cancellation, which falls back to the
        # compensated scalar path
        terms = np.cumprod(x_arr[..., None] / f[:n_terms], axis=-1)
        if weight == "k":
            terms = terms * np.arange(1, n_terms + 1)
        elif weight in ("logw", "klogw"):
            wsum = np.cumsum(wc[:n_terms])
            terms = terms * (wsum if weight == "logw" else wsum * np.arange(1, n_terms + 1))
        lead = 0.0 if weight != "none" else 1.0
        out = lead + terms.sum(axis=-1)
        if not np.all(np.isfinite(out)):
            raise NoConvergence("series evaluation overflowed; use the log-scaled path")
        cond = (np.abs(terms).sum(axis=-1) + lead) / np.maximum(np.abs(out), 1e-300)
        if np.any(cond > 64.0):
            flat = out.reshape(-1)
            bad = np.flatnonzero(cond.reshape(-1) > 64.0)
            x_flat = x_arr.reshape(-1)
            for i in bad:
                flat[i] = self._sum_terms_scalar(float(x_flat[i]), family, weight)
            out = flat.reshape(out.shape)
        return out

    def absorption(self, x):
        """The series with coefficients 1/prod(psi(l a) - p); drives the
        absorption-time martingale and transform."""
        return self._sum_terms(x, "a")

    def passage(self, x):
        """The series with coefficients 1/prod(psi(phi_p + l a) - p); drives
        upward-passage transforms.  >= 1 on [0, inf)."""
        return self._sum_terms(x, "b")

    def absorption_kweighted(self, x):
        """sum_k k * a_k * x^k (zero at zero)."""
        return self._sum_terms(x, "a", weight="k")

    def passage_kweighted(self, x):
        """sum_k k * b_k * x^k (zero at zero)."""
        return self._sum_terms(x, "b", weight="k")

    def logweight(self, x):
        """The log-derivative-weighted passage series used on the integer seam."""
        return self._sum_terms(x, "b", weight="logw")

    def logweight_kweighted(self, x):
        """sum_k k * c_k * x^k (companion of ``logweight`` in the seam limits)."""
        return self._sum_terms(x, "b", weight="klogw")

    def partial_absorption(self, x, m: int, kweighted: bool = False):
        """First m terms (k = 0 .. m-1) of the absorption series, valid on the
        seam as well; with ``kweighted`` the k-weighted variant (k = 1 .. m-1)."""
        fa, _, _ = self._factors(max(m - 1, 1))
        x_arr = np.asarray(x, dtype=float)
        s = np.zeros_like(x_arr) if kweighted else np.ones_like(x_arr)
        term = np.ones_like(x_arr)
        for k in range(1, m):
            term = term * (x_arr / fa[k - 1])
            s = s + (term * k if kweighted else term)
        return float(s) if np.ndim(x) == 0 else s

    # -- log-scaled evaluation ----------------------------------------------

    def _sum_terms_log(self, x, family: str):
        """(sign, log|value|) of a plain family sum; stable for huge arguments."""
        scalar = np.ndim(x) == 0
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x_arr < 0):
            raise DomainError("series arguments must be >= 0")
        if family == "a" and self.model.is_degenerate:
            raise Degenerate("absorption series undefined on the integer seam")
        with np.errstate(divide="ignore"):
            log_x = np.log(x_arr)
        fa, fb, _ = self._factors(self.term_count(float(x_arr.max()), family))
        tol = self.tol

        big = np.zeros_like(x_arr)          # running max log-term
        s = np.ones_like(x_arr)             # scaled signed sum
        log_term = np.zeros_like(x_arr)
        sign_term = 1.0
        streak = 0
        k = 0
        while True:
            k += 1
            if k > len(fa):
                fa, fb, _ = self._factors(k)
            if k > self.k_max:
                raise NoConvergence(f"series needed more than {self.k_max} terms")
            if family == "a":
                log_f, sgn_f = self._log_abs_fa[k - 1], math.copysign(1.0, fa[k - 1])
            else:
                log_f, sgn_f = self._log_fb[k - 1], 1.0
            log_term = log_term + log_x - log_f
            sign_term *= sgn_f
            grew = log_term > big
            if np.any(grew):
                new_big = np.where(grew, log_term, big)
                s = s * np.exp(big - new_big) + sign_term * np.exp(log_term - new_big)
                big = new_big
            else:
                s = s + sign_term * np.exp(log_term - big)
            rel = np.exp(log_term - big) <= tol * (1.0 + np.abs(s))
            if np.all(rel | (x_arr == 0.0)):
                streak += 1
                if streak >= 2:
                    break
            else:
                streak = 0
        sign = np.sign(s)
        with np.errstate(divide="ignore"):
            log_val = big + np.log(np.abs(s))
        if scalar:
            return float(sign[0]), float(log_val[0])
        return sign, log_val

    def passage_log(self, x):
        """log of the passage series; switches to the scaled path only when a
        plain sum would overflow."""
        x_max = float(np.max(x)) if np.ndim(x) else float(x)
        if self.log_max_term(x_max, "b") < _LOG_FLOAT_MAX:
            return np.log(self._sum_terms(x, "b"))
        _, log_val = self._sum_terms_log(x, "b")
        return log_val

    def absorption_signed_log(self, x):
        """(sign, log|.|) of the absorption series."""
        return self._sum_terms_log(x, "a")

    # -- multiprecision layer ------------------------------------------------

    def _mp_psi_killed(self, lam):
        """Killed exponent at an mpf point, rebuilt from the exact binary
        model parameters so the multiprecision series is self-consistent."""
        levy = self.model.levy
        val = mp.mpf(levy.sigma2) / 2 * lam * lam + mp.mpf(levy.drift) * lam
        spec = levy.jumps
        if spec.intensity > 0:
            law = spec.size_law

            def law_mgf(one_law):
                if isinstance(one_law, ExponentialNegative):
                    r = mp.mpf(one_law.rate)
                    return r / (r + lam)
                if isinstance(one_law, PointMassNegative):
                    return mp.e ** (-mp.mpf(one_law.c) * lam)
                return mp.fsum(mp.mpf(w) * law_mgf(c) for w, c in one_law.components)

            val += mp.mpf(spec.intensity) * (law_mgf(law) - 1)
        return val - mp.mpf(self.model.p)

    def _mp_ctx(self, dps: int) -> _MpCtx:
        tier = _MP_TIER * max(1, math.ceil(dps / _MP_TIER))
        ctx = self._mp_ctxs.get(tier)
        if ctx is None:
            with self._lock:
                ctx = self._mp_ctxs.get(tier)
                if ctx is None:
                    ctx = _MpCtx(self, tier)
                    self._mp_ctxs[tier] = ctx
        return ctx

    def _tail_at(self, dps: int):
        ctx = self._mp_ctx(dps)
        c = self._tail_mpf.get(ctx.dps)
        if c is None:
            if self.model.is_degenerate:
                raise Degenerate("tail constant undefined on the integer seam")
            c = ctx.tail_constant()
            if math.copysign(1.0, float(c)) != self.a_ultimate_sign():
                raise ConsistencyError("tail constant sign disagrees with coefficient signs")
            self._tail_mpf[ctx.dps] = c
        return c

    # -- tail-matching constant ---------------------------------------------

    def tail_constant(self) -> float:
        """The unique C with absorption(z) - C z^(phi/alpha) passage(z) -> 0.

        Computed as the stabilized limit of the ratio along z = 2^n (relative
        stabilization tolerance ``tail_tol``); the sign must agree with the
        ultimate sign of the absorption coefficients.
        """
        if self._tail_constant is not None:
            return self._tail_constant
        if self.model.is_degenerate:
            raise Degenerate("tail constant undefined on the integer seam")
        ctx = self._mp_ctx(40)
        with mp.workdps(ctx.dps):
            power = ctx.phi / mp.mpf(self.model.alpha)
            trace: list[float] = []
            r_prev = None
            for n in range(61):
                z = mp.mpf(2) ** n
                r = ctx.series(z, "a") / (z ** power * ctx.series(z, "b"))
                trace.append(float(r))
                if r_prev is not None and abs(r - r_prev) < self.tail_tol * abs(r_prev):
                    if math.copysign(1.0, float(r)) != self.a_ultimate_sign():
                        raise ConsistencyError(
                            "tail constant sign disagrees with coefficient signs"
                        )
                    self._tail_trace = trace
                    self._tail_constant = float(r)
                    return self._tail_constant
                r_prev = r
        raise NoConvergence("tail-constant ratio did not stabilize within 60 doublings")

    def tail_constant_trace(self) -> list[float]:
        """The ratio sequence along the doubling grid, up to acceptance."""
        self.tail_constant()
        return list(self._tail_trace)

    # -- extension transform ---------------------------------------------------

    def _ext_dps(self, z: float) -> int:
        """Digits needed so the extension difference survives cancellation."""
        lead = max(self.log_max_term(z, "a"), self.log_max_term(z, "b"))
        return 22 + int(lead / _LOG10)

    def ext_cap(self) -> float:
        """Largest argument the tabulated extension covers (precision cap).

        Past the cap the tabulated value is 0; the discarded quantity is
        bounded by (killing rate + jump intensity) / argument.
        """
        cached = getattr(self, "_ext_cap_cache", None)
        if cached is None:
            lo, hi = 1.0, 2.0
            while self._ext_dps(hi) <= _MP_DPS_TABLE and hi < self.reach():
                lo, hi = hi, hi * 2.0
            for _ in range(40):
                mid = math.sqrt(lo * hi)
                if self._ext_dps(mid) <= _MP_DPS_TABLE:
                    lo = mid
                else:
                    hi = mid
            cached = min(lo, self.reach())
            self._ext_cap_cache = cached
        return cached

    def cancel_cap(self, threshold: float = 10.0) -> float:
        """Largest argument whose direct family sums keep absolute accuracy
        ~eps * e^threshold; beyond it cancellation-prone combinations must
        switch to the multiprecision-backed forms."""
        key = ("_cancel_cap", threshold)
        cached = getattr(self, "_cancel_cache", {}).get(key)
        if cached is None:
            lo, hi = 1.0, 2.0
            while max(self.log_max_term(hi, "a") if not self.model.is_degenerate else 0.0,
                      self.log_max_term(hi, "b")) <= threshold and hi < self.reach():
                lo, hi = hi, 2.0 * hi
            for _ in range(50):
                mid = math.sqrt(lo * hi)
                lead = max(self.log_max_term(mid, "a") if not self.model.is_degenerate else 0.0,
                           self.log_max_term(mid, "b"))
                if lead <= threshold:
                    lo = mid
                else:
                    hi = mid
            cached = min(lo, self.reach())
            if not hasattr(self, "_cancel_cache"):
                self._cancel_cache = {}
            self._cancel_cache[key] = cached
        return cached

    def extension_log_slope(self, z):
        """d log(extension) / d log z from the tabulated spline (array ok)."""
        if self.model.is_degenerate:
            raise Degenerate("the series extension is undefined on the integer seam")
        z_arr = np.atleast_1d(np.asarray(z, dtype=float))
        log_z = np.log(np.clip(z_arr, 1e-300, None))
        need = self._ext_log_z is None or log_z.min() < self._ext_log_z[0] \
            or log_z.max() > self._ext_log_z[-1]
        if need:
            self._extend_ext_table(float(log_z.min()), float(log_z.max()))
        out = self._ext_splines[0].derivative()(log_z)
        return out if np.ndim(z) else float(out[0])

    def extension(self, z: float) -> float:
        """absorption(z) - C z^(phi/alpha) passage(z), in (0, 1].

        The two pieces agree to roughly log10 of the largest series term
        digits, so the difference is taken in multiprecision at a working
        precision adapted to the argument.
        """
        if self.model.is_degenerate:
            raise Degenerate("the series extension is undefined on the integer seam")
        if z < 0:
            raise DomainError("series arguments must be >= 0")
        if z == 0.0:
            return 1.0
        dps = self._ext_dps(z)
        if dps > _MP_DPS_SCALAR:
            raise NoConvergence(f"extension argument {z:g} needs ~{dps} digits to evaluate")
        ctx = self._mp_ctx(dps)
        c = self._tail_at(dps)
        with mp.workdps(ctx.dps):
            power = ctx.phi / mp.mpf(self.model.alpha)
            zm = mp.mpf(z)
            val = ctx.series(zm, "a") - c * zm ** power * ctx.series(zm, "b")
        return float(val)

    def _extension_tiny(self, z):
        # below the table: two-term expansion around 0 (fractional power term
        # plus the linear series terms); error O(z^2) past double rounding
        c = self.tail_constant()
        power = self.model.phi_p / self.model.alpha
        fa1 = self._factors(1)[0][0]
        fb1 = self._factors(1)[1][0]
        return 1.0 + z / fa1 - c * z ** power * (1.0 + z / fb1)

    def _extend_ext_table(self, lo: float, hi: float) -> None:
        """Grow the spline node set to cover [lo, hi] (log arguments)."""
        step = _LOG10 / _EXT_NODES_PER_DECADE
        lo = math.floor(lo / step) * step - 2 * step
        hi = math.ceil(hi / step) * step + 2 * step
        have = self._ext_log_z
        if have is not None and have[0] <= lo and have[-1] >= hi:
            return
        if have is not None:
            lo = min(lo, have[0])
            hi = max(hi, have[-1])
        n = int(round((hi - lo) / step)) + 1
        log_z = lo + step * np.arange(n)
        log_f = np.empty(n)
        log_1mf = np.empty(n)
        for i, lz in enumerate(log_z):
            v = self.extension(math.exp(lz))
            v = min(max(v, 1e-300), 1.0 - 1e-16)
            log_f[i] = math.log(v)
            log_1mf[i] = math.log(1.0 - v)
        with self._lock:
            self._ext_log_z = log_z
            self._ext_splines = (CubicSpline(log_z, log_f), CubicSpline(log_z, log_1mf))

    def extension_array(self, z):
        """Spline-backed extension values for array arguments.

        Relative accuracy ~1e-7 on whichever of f, 1-f is smaller; exact 1 at
        zero; asymptotic forms below 1e-10; 0 beyond the precision cap (where
        the true value is below (p + intensity)/z).
        """
        if self.model.is_degenerate:
            raise Degenerate("the series extension is undefined on the integer seam")
        z_arr = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.empty_like(z_arr)
        cap = self.ext_cap()
        zero = z_arr == 0.0
        tiny = (z_arr > 0) & (z_arr < _EXT_TINY)
        far = z_arr > cap
        mid = ~(zero | tiny | far)
        out[zero] = 1.0
        if np.any(tiny):
            out[tiny] = self._extension_tiny(z_arr[tiny])
        out[far] = 0.0
        if np.any(mid):
            log_mid = np.log(z_arr[mid])
            need = self._ext_log_z is None or log_mid.min() < self._ext_log_z[0] \
                or log_mid.max() > self._ext_log_z[-1]
            if need:
                self._extend_ext_table(float(log_mid.min()), float(log_mid.max()))
            sp_f, sp_1mf = self._ext_splines
            f_small = np.exp(sp_f(log_mid))
            f_large = 1.0 - np.exp(sp_1mf(log_mid))
            out[mid] = np.where(f_small <= 0.5, f_small, f_large)
        return out if np.ndim(z) else float(out[0])


_TABLE_CACHE: dict[PssmpModel, SeriesTable] = {}
_TABLE_LOCK = threading.Lock()


def series_table(model: PssmpModel) -> SeriesTable:
    """Shared per-model table (models are immutable, so caching is safe)."""
    tab = _TABLE_CACHE.get(model)
    if tab is None:
        with _TABLE_LOCK:
            tab = _TABLE_CACHE.setdefault(model, SeriesTable(model))
    return tab
