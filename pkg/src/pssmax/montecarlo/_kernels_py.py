"""Pure-Python mirror of the compiled path-scan kernels.

Same signatures and same per-path semantics as ``_kernels.pyx``; used when
the extension is not built.  The finite-variation scans loop over the (few)
jumps per path in Python; the Euler scan and the grid-heavy moment scan are
vectorized per path with numpy.
"""

from __future__ import annotations

import math

import numpy as np


def fv_scan(x0, drift, alpha, e, jt, js, offs, xbar, xg, g_time, big_l, t0):
    ia = 1.0 / (alpha * drift)
    for i in range(e.shape[0]):
        lo, hi = offs[i], offs[i + 1]
        x = x0
        t = 0.0
        acc = 0.0
        best = -math.inf
        best_xg = best_t = best_l = 0.0
        ex = math.exp(alpha * x0)
        for k in range(lo, hi):
            v = x + drift * (jt[k] - t)
            ev = math.exp(alpha * v)
            acc = acc + (ev - ex) * ia
            if v >= best:
                best, best_xg, best_t, best_l = v, v - js[k], jt[k], acc
            x = v - js[k]
            ex = math.exp(alpha * x)
            t = jt[k]
        v = x + drift * (e[i] - t)
        acc = acc + (math.exp(alpha * v) - ex) * ia
        t0[i] = acc
        if v >= best:
            xbar[i], xg[i], g_time[i], big_l[i] = v, v, e[i], acc
        else:
            xbar[i], xg[i], g_time[i], big_l[i] = best, best_xg, best_t, best_l


def fv_query(x0, drift, alpha, e, jt, js, offs, s_query, y_out, ybar_out):
    ia = 1.0 / (alpha * drift)
    ad = alpha * drift
    for i in range(e.shape[0]):
        lo, hi = offs[i], offs[i + 1]
        for q in range(s_query.shape[1]):
            s = s_query[i, q]
            x = x0
            t = 0.0
            acc = 0.0
            cur_max = x0
            ex = math.exp(alpha * x0)
            done = False
            for k in range(lo, hi + 1):
                v = x + drift * ((jt[k] if k < hi else e[i]) - t)
                ev = math.exp(alpha * v)
                seg = (ev - ex) * ia
                if acc + seg > s:
                    xv = math.log(ex + ad * (s - acc)) / alpha
                    y_out[i, q] = math.exp(xv)
                    ybar_out[i, q] = math.exp(max(cur_max, xv))
                    done = True
                    break
                acc += seg
                cur_max = max(cur_max, v)
                if k < hi:
                    x = v - js[k]
                    ex = math.exp(alpha * x)
                    t = jt[k]
            if not done:
                y_out[i, q] = 0.0
                ybar_out[i, q] = math.exp(cur_max)


def fv_passage(x0, drift, alpha, e, jt, js, offs, level, crossed, tdp):
    ia = 1.0 / (alpha * drift)
    elev = math.exp(alpha * level)
    for i in range(e.shape[0]):
        lo, hi = offs[i], offs[i + 1]
        if x0 >= level:
            crossed[i] = 1
            tdp[i] = 0.0
            continue
        x = x0
        t = 0.0
        acc = 0.0
        ex = math.exp(alpha * x0)
        crossed[i] = 0
        tdp[i] = 0.0
        for k in range(lo, hi + 1):
            v = x + drift * ((jt[k] if k < hi else e[i]) - t)
            if v > level:
                crossed[i] = 1
                tdp[i] = acc + (elev - ex) * ia
                break
            acc += (math.exp(alpha * v) - ex) * ia
            if k < hi:
                x = v - js[k]
                ex = math.exp(alpha * x)
                t = jt[k]


def fv_moment(x0, drift, alpha, e, jt, js, offs, vgrid, wsimp, pow_hi, pow_lo, lhs, quad):
    ia = 1.0 / (alpha * drift)
    ad = alpha * drift
    m = vgrid.shape[0]
    for i in range(e.shape[0]):
        lo, hi = offs[i], offs[i + 1]
        times = np.concatenate([jt[lo:hi], [e[i]]])
        starts = np.empty(times.shape[0])      # X at segment starts
        breaks = np.empty(times.shape[0] + 1)  # Lamperti clock at boundaries
        x = x0
        t = 0.0
        acc = 0.0
        breaks[0] = 0.0
        for k in range(times.shape[0]):
            starts[k] = x
            v = x + drift * (times[k] - t)
            acc += (math.exp(alpha * v) - math.exp(alpha * x)) * ia
            breaks[k + 1] = acc
            if k < times.shape[0] - 1:
                x = v - js[lo + k]
            t = times[k]
        seg = np.searchsorted(breaks, vgrid, side="right") - 1
        alive = seg < times.shape[0]
        segc = np.clip(seg, 0, times.shape[0] - 1)
        base = np.exp(alpha * starts[segc]) + ad * (vgrid - breaks[segc])
        vals = np.where(alive, base ** (pow_lo / alpha), 0.0)
        quad[i] = float(wsimp @ vals)
        lhs[i] = float(base[m - 1] ** (pow_hi / alpha)) if alive[m - 1] else 0.0


def euler_scan(x0, mu, sigma, alpha, dt, dw, jump, offs, xbar, xg, g_time, big_l, t0):
    for i in range(offs.shape[0] - 1):
        lo, hi = offs[i], offs[i + 1]
        d = dt[lo:hi]
        steps = mu * d + sigma * np.sqrt(d) * dw[lo:hi] - jump[lo:hi]
        xs = np.empty(hi - lo + 1)
        xs[0] = x0
        np.cumsum(steps, out=xs[1:])
        xs[1:] += x0
        w = np.exp(alpha * xs)
        acc = np.empty_like(xs)
        acc[0] = 0.0
        np.cumsum(0.5 * d * (w[:-1] + w[1:]), out=acc[1:])
        best = xs.max()
        idx = int(np.flatnonzero(xs == best)[-1])
        times = np.empty_like(xs)
        times[0] = 0.0
        np.cumsum(d, out=times[1:])
        xbar[i] = best
        xg[i] = best
        g_time[i] = times[idx]
        big_l[i] = acc[idx]
        t0[i] = acc[-1]
