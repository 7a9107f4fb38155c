"""Path simulation drivers: counter-based draws, packing, kernel dispatch.

Reproducibility contract: replication ``i`` of a run seeded with ``seed``
draws all of its randomness from ``Generator(Philox(key=[seed, i]))``, in a
fixed order (kill time, jump count, arrival uniforms, size uniforms /
component uniforms, Euler normals, then any auxiliary draws).  Replications
are therefore independent of chunking and of how many workers execute them.

Finite variation paths are simulated exactly: exponential kill time,
Poisson jump count given the kill time, ordered uniform arrival times,
closed-form Lamperti integrals per linear segment.  Infinite variation uses
an Euler grid of step ``h`` for the Brownian part with the jumps overlaid
exactly (each jump splits its grid cell).  With no killing (p = 0) the walk
is truncated once the drawdown exceeds 40/phi(0) and the remaining
exponential-functional tail is below 1e-12 of the accumulated integral;
this requires psi(alpha) < 0 so the tail is controlled.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import NoConvergence, Unsupported
from ..models import ExponentialNegative, PointMassNegative, PssmpModel
from . import backend

__all__ = ["PathFunctionals", "run_paths", "USING_COMPILED"]

USING_COMPILED = backend.USING_COMPILED

_CHUNK = 8192
_P0_BLOCK = 64
_P0_DRAWDOWN = 40.0
_P0_TAIL_REL = 1e-12


def _generator(seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, rep], dtype=np.uint64)))


def _draw_sizes(law, g: np.random.Generator, n: int) -> np.ndarray:
    """Positive jump magnitudes; fixed draw counts per protocol."""
    if isinstance(law, ExponentialNegative):
        return -np.log1p(-g.random(n)) / law.rate
    if isinstance(law, PointMassNegative):
        return np.full(n, law.c)
    # mixture: one component uniform + one size uniform per jump
    u_comp = g.random(n)
    u_size = g.random(n)
    weights = np.cumsum([w for w, _ in law.components])
    idx = np.searchsorted(weights, u_comp, side="right").clip(0, len(law.components) - 1)
    out = np.empty(n)
    for ci, (_, comp) in enumerate(law.components):
        sel = idx == ci
        if isinstance(comp, ExponentialNegative):
            out[sel] = -np.log1p(-u_size[sel]) / comp.rate
        else:
            out[sel] = comp.c
    return out


def _fv_draw(model: PssmpModel, g: np.random.Generator, x0: float):
    """One finite-variation skeleton: kill time, jump times, jump sizes."""
    lam = model.levy.jumps.intensity
    if model.p > 0:
        e = -math.log1p(-g.random()) / model.p
        n_j = int(g.poisson(lam * e)) if lam > 0 else 0
        if n_j:
            jt = np.sort(g.random(n_j)) * e
            js = _draw_sizes(model.levy.jumps.size_law, g, n_j)
        else:
            jt = js = np.empty(0)
        return e, jt, js
    return _fv_draw_p0(model, g, x0)


def _fv_draw_p0(model: PssmpModel, g: np.random.Generator, x0: float):
    levy = model.levy
    lam = levy.jumps.intensity
    drift = levy.drift
    alpha = model.alpha
    drawdown = _P0_DRAWDOWN / model.phi_p
    inv_tail = 1.0 / abs(levy.psi(alpha))
    ia = 1.0 / (alpha * drift)
    times: list[np.ndarray] = []
    sizes: list[np.ndarray] = []
    x = x0
    t = 0.0
    xbar = x0
    acc = 0.0
    for _ in range(20_000):
        dt_block = -np.log1p(-g.random(_P0_BLOCK)) / lam
        sz_block = _draw_sizes(levy.jumps.size_law, g, _P0_BLOCK)
        tb = t + np.cumsum(dt_block)
        times.append(tb)
        sizes.append(sz_block)
        for k in range(_P0_BLOCK):
            v = x + drift * (tb[k] - t)
            acc += (math.exp(alpha * v) - math.exp(alpha * x)) * ia
            xbar = max(xbar, v)
            x = v - sz_block[k]
            t = tb[k]
            if xbar - x >= drawdown and math.exp(alpha * x) * inv_tail <= _P0_TAIL_REL * acc:
                jt = np.concatenate(times)
                js = np.concatenate(sizes)
                keep = jt <= t
                return t, jt[keep], js[keep]
    raise NoConvergence("drawdown truncation rule was not reached")


def _iv_draw(model: PssmpModel, g: np.random.Generator, h: float):
    """One Euler skeleton: merged (dt, normal, jump) segments up to the kill."""
    e = -math.log1p(-g.random()) / model.p
    lam = model.levy.jumps.intensity
    m = max(int(math.ceil(e / h)), 1)
    grid = np.minimum(h * np.arange(1, m + 1), e)
    grid[-1] = e
    if lam > 0:
        n_j = int(g.poisson(lam * e))
        jt = np.sort(g.random(n_j)) * e if n_j else np.empty(0)
        js = _draw_sizes(model.levy.jumps.size_law, g, n_j) if n_j else np.empty(0)
        bounds = np.unique(np.concatenate([grid, jt]))
        dt = np.diff(np.concatenate([[0.0], bounds]))
        jump = np.zeros_like(bounds)
        if n_j:
            jump[np.searchsorted(bounds, jt)] = js
    else:
        dt = np.diff(np.concatenate([[0.0], grid]))
        jump = np.zeros_like(dt)
    z = g.standard_normal(dt.shape[0])
    return e, dt, z, jump


@dataclass
class PathFunctionals:
    """Per-replication functionals extracted from simulated paths.

    Levels are on the process scale (sup = exp of the parent's maximum);
    ``j`` is the relative jump at the overall maximum, exactly 1 on the
    atom (where ``big_l == t0`` bit-for-bit by construction).
    """

    start: float
    seed: int
    sup: np.ndarray
    j: np.ndarray
    g_time: np.ndarray
    big_l: np.ndarray
    t0: np.ndarray
    extras: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.sup.shape[0]


@dataclass
class PathSample:
    """One simulated parent path as an inspectable skeleton.

    ``skeleton`` rows are (time, left limit, post-jump value); for the exact
    scheme the rows are the jump instants plus the terminal point and the
    path is linear in between, for the Euler scheme they are the grid nodes.
    ``kill_time`` is the exponential kill (infinite when unkilled, in which
    case ``horizon`` carries the drawdown-rule truncation time).
    """

    x0: float
    skeleton: np.ndarray
    kill_time: float
    horizon: float
    exact: bool
    drift: float = math.nan  # slope of the linear pieces (exact scheme only)


@dataclass
class FunctionalSample:
    """The functional quadruple of one path (plus the parent-time maximum)."""

    sup: float
    g_time: float
    big_l: float
    t0: float
    j: float


def simulate_path(model: PssmpModel, x0: float, seed: int, *, rep: int = 0,
                  h: float = 1e-3) -> PathSample:
    """Simulate one parent path and return its skeleton (replication ``rep``
    of the stream seeded by ``seed``; the batch drivers draw identically)."""
    g = _generator(seed, rep)
    fv = model.levy.is_finite_variation
    if model.p == 0:
        if not fv:
            raise Unsupported("unkilled simulation is only supported for finite variation")
        if model.levy.psi(model.alpha) >= 0:
            raise Unsupported(
                "p = 0 needs psi(alpha) < 0 so the truncated integral tail is controlled"
            )
    if fv:
        e, jt, js = _fv_draw(model, g, x0)
        drift = model.levy.drift
        rows = []
        x = x0
        t = 0.0
        for k in range(jt.shape[0]):
            left = x + drift * (jt[k] - t)
            rows.append((jt[k], left, left - js[k]))
            x = left - js[k]
            t = jt[k]
        final = x + drift * (e - t)
        rows.append((e, final, final))
        kill = e if model.p > 0 else math.inf
        horizon = math.inf if model.p > 0 else e
        return PathSample(x0, np.array(rows, dtype=float), kill, horizon, True, drift)
    e, dt, z, jump = _iv_draw(model, g, h)
    mu = model.levy.drift
    sigma = math.sqrt(model.levy.sigma2)
    times = np.cumsum(dt)
    post = x0 + np.cumsum(mu * dt + sigma * np.sqrt(dt) * z - jump)
    rows = np.column_stack([times, post + jump, post])
    return PathSample(x0, rows, e, math.inf, False)


def lamperti_functionals(path: PathSample, alpha: float) -> FunctionalSample:
    """Extract (sup, G, L, T0, J) from a path skeleton through the time change.

    Exact per-segment integrals of exp(alpha X) for the piecewise-linear
    scheme; trapezoid sums on the Euler grid.
    """
    sk = path.skeleton
    end = path.kill_time if math.isfinite(path.kill_time) else path.horizon
    if path.exact:
        jt = sk[:-1, 0]
        js = sk[:-1, 1] - sk[:-1, 2]
        out = [np.empty(1) for _ in range(5)]
        from . import backend

        backend.fv_scan(path.x0, path.drift, alpha, np.array([end]),
                        np.ascontiguousarray(jt), np.ascontiguousarray(js),
                        np.array([0, jt.shape[0]], dtype=np.int64), *out)
        xbar, xg, g_time, big_l, t0 = (float(o[0]) for o in out)
    else:
        times = np.concatenate([[0.0], sk[:, 0]])
        values = np.concatenate([[path.x0], sk[:, 2]])
        w = np.exp(alpha * values)
        acc = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (w[:-1] + w[1:]))])
        idx = int(np.flatnonzero(values == values.max())[-1])
        xbar = float(values.max())
        xg = xbar
        g_time = float(times[idx])
        big_l = float(acc[idx])
        t0 = float(acc[-1])
    return FunctionalSample(sup=math.exp(xbar), g_time=g_time, big_l=big_l, t0=t0,
                            j=math.exp(xg - xbar))


def _run_fv_range(model, x0, seed, start, stop, queries):
    """Simulate replications [start, stop) of a finite-variation run."""
    alpha = model.alpha
    drift = model.levy.drift
    n = stop - start
    out = {k: np.empty(n) for k in ("xbar", "xg", "g_time", "big_l", "t0")}
    queries = queries or {}
    q_times = queries.get("at_times")
    exp_rate = queries.get("exp_time_rate")
    level = queries.get("passage_level")
    moment = queries.get("moment")
    if q_times is not None:
        out["y_at"] = np.empty((n, len(q_times)))
        out["ybar_at"] = np.empty((n, len(q_times)))
    if exp_rate is not None:
        out["s_exp"] = np.empty(n)
        out["y_exp"] = np.empty(n)
        out["ybar_exp"] = np.empty(n)
    if level is not None:
        out["crossed"] = np.empty(n, dtype=np.uint8)
        out["tdp"] = np.empty(n)
    if moment is not None:
        vgrid, wsimp, pow_hi, pow_lo = moment
        vgrid = np.ascontiguousarray(vgrid, dtype=float)
        wsimp = np.ascontiguousarray(wsimp, dtype=float)
        out["m_lhs"] = np.empty(n)
        out["m_quad"] = np.empty(n)

    for c0 in range(0, n, _CHUNK):
        c1 = min(c0 + _CHUNK, n)
        es = np.empty(c1 - c0)
        jts: list[np.ndarray] = []
        jss: list[np.ndarray] = []
        offs = np.zeros(c1 - c0 + 1, dtype=np.int64)
        s_exp = np.empty((c1 - c0, 1)) if exp_rate is not None else None
        for i in range(c0, c1):
            g = _generator(seed, start + i)
            e, jt, js = _fv_draw(model, g, x0)
            es[i - c0] = e
            jts.append(jt)
            jss.append(js)
            offs[i - c0 + 1] = offs[i - c0] + jt.shape[0]
            if exp_rate is not None:
                s_exp[i - c0, 0] = -math.log1p(-g.random()) / exp_rate
        jt_flat = np.ascontiguousarray(np.concatenate(jts) if jts else np.empty(0))
        js_flat = np.ascontiguousarray(np.concatenate(jss) if jss else np.empty(0))
        sl = slice(c0, c1)
        backend.fv_scan(x0, drift, alpha, es, jt_flat, js_flat, offs,
                        out["xbar"][sl], out["xg"][sl], out["g_time"][sl],
                        out["big_l"][sl], out["t0"][sl])
        if q_times is not None:
            sq = np.ascontiguousarray(
                np.broadcast_to(np.asarray(q_times, dtype=float), (c1 - c0, len(q_times)))
            )
            backend.fv_query(x0, drift, alpha, es, jt_flat, js_flat, offs, sq,
                             out["y_at"][sl], out["ybar_at"][sl])
        if exp_rate is not None:
            y1 = np.empty((c1 - c0, 1))
            yb1 = np.empty((c1 - c0, 1))
            backend.fv_query(x0, drift, alpha, es, jt_flat, js_flat, offs, s_exp, y1, yb1)
            out["s_exp"][sl] = s_exp[:, 0]
            out["y_exp"][sl] = y1[:, 0]
            out["ybar_exp"][sl] = yb1[:, 0]
        if level is not None:
            backend.fv_passage(x0, drift, alpha, es, jt_flat, js_flat, offs,
                               float(level), out["crossed"][sl], out["tdp"][sl])
        if moment is not None:
            backend.fv_moment(x0, drift, alpha, es, jt_flat, js_flat, offs,
                              vgrid, wsimp, float(pow_hi), float(pow_lo),
                              out["m_lhs"][sl], out["m_quad"][sl])
    return out


def _run_iv_range(model, x0, seed, start, stop, h):
    alpha = model.alpha
    mu = model.levy.drift
    sigma = math.sqrt(model.levy.sigma2)
    n = stop - start
    out = {k: np.empty(n) for k in ("xbar", "xg", "g_time", "big_l", "t0")}
    for c0 in range(0, n, _CHUNK):
        c1 = min(c0 + _CHUNK, n)
        dts: list[np.ndarray] = []
        zs: list[np.ndarray] = []
        jumps: list[np.ndarray] = []
        offs = np.zeros(c1 - c0 + 1, dtype=np.int64)
        for i in range(c0, c1):
            g = _generator(seed, start + i)
            _, dt, z, jump = _iv_draw(model, g, h)
            dts.append(dt)
            zs.append(z)
            jumps.append(jump)
            offs[i - c0 + 1] = offs[i - c0] + dt.shape[0]
        sl = slice(c0, c1)
        backend.euler_scan(x0, mu, sigma, alpha,
                           np.concatenate(dts), np.concatenate(zs), np.concatenate(jumps),
                           offs, out["xbar"][sl], out["xg"][sl], out["g_time"][sl],
                           out["big_l"][sl], out["t0"][sl])
    return out


def run_paths(model: PssmpModel, y: float, n: int, seed: int, *, h: float = 1e-3,
              workers: int = 1, queries: dict | None = None) -> PathFunctionals:
    """Simulate n replications started at level y and extract functionals.

    Optional queries (finite variation only):
      at_times:       sequence of clock times -> state and running max there
      exp_time_rate:  rate of an independent exponential query time per path
      passage_level:  barrier d -> passage indicator and passage time
      moment:         (vgrid, simpson weights, pow_hi, pow_lo) per-path pair
                      (state^pow_hi at the grid end, weighted alive sum)
    """
    if y <= 0:
        raise ValueError("start level must be positive")
    if n < 1:
        raise ValueError("need at least one replication")
    fv = model.levy.is_finite_variation
    if model.p == 0:
        if not fv:
            raise Unsupported("unkilled simulation is only supported for finite variation")
        if model.levy.psi(model.alpha) >= 0:
            raise Unsupported(
                "p = 0 needs psi(alpha) < 0 so the truncated integral tail is controlled"
            )
    x0 = math.log(y)
    queries = dict(queries) if queries else None
    if queries and "passage_level" in queries:
        queries["passage_level"] = math.log(float(queries["passage_level"]))
    if queries and not fv:
        raise Unsupported("path queries are implemented for the exact scheme only")

    ranges = _split(n, workers)
    if fv:
        parts = _fanout(_run_fv_range, [(model, x0, seed, a, b, queries) for a, b in ranges],
                        workers)
    else:
        parts = _fanout(_run_iv_range, [(model, x0, seed, a, b, h) for a, b in ranges], workers)
    out = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}

    extras = {}
    for key in ("y_at", "ybar_at", "s_exp", "y_exp", "ybar_exp", "tdp", "m_lhs", "m_quad"):
        if key in out:
            extras[key] = out[key]
    if "crossed" in out:
        extras["crossed"] = out["crossed"].astype(bool)
    return PathFunctionals(
        start=y,
        seed=seed,
        sup=np.exp(out["xbar"]),
        j=np.exp(out["xg"] - out["xbar"]),
        g_time=out["g_time"],
        big_l=out["big_l"],
        t0=out["t0"],
        extras=extras,
    )


def _split(n: int, workers: int):
    workers = max(1, int(workers))
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _fanout(fn, arg_tuples, workers: int):
    if workers <= 1 or len(arg_tuples) <= 1:
        return [fn(*args) for args in arg_tuples]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *args) for args in arg_tuples]
        return [f.result() for f in futures]
