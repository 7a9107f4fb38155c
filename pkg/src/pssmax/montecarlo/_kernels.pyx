# cython: boundscheck=False, wraparound=False, cdivision=True
"""Per-path scan kernels (compiled core).

Each function consumes pre-drawn random inputs packed in flat arrays with
per-path offsets and writes per-path outputs into caller-allocated arrays.
The pure-Python module `_kernels_py` mirrors these signatures; the backend
is selected at import time in `backend.py`.
"""

from libc.math cimport exp, log, pow, sqrt

cdef double NEG_INF = float("-inf")


def fv_scan(double x0, double drift, double alpha,
            double[::1] e, double[::1] jt, double[::1] js, long long[::1] offs,
            double[::1] xbar, double[::1] xg, double[::1] g_time,
            double[::1] big_l, double[::1] t0):
    """Exact compound-Poisson-with-drift skeleton scan.

    Piecewise-linear paths: drift up between jumps, down-jumps of the given
    sizes at the given times, killed at e.  Lamperti integrals of exp(alpha X)
    are exact per segment.  The last time at the running maximum is either a
    jump left-limit (the path is at the max and jumps away) or the kill time
    itself (the atom: absorbed at the maximum, so L = T0 exactly).
    """
    cdef Py_ssize_t i, k, lo, hi
    cdef double ia = 1.0 / (alpha * drift)
    cdef double x, t, acc, best, best_xg, best_t, best_l, v, ex, ev
    for i in range(e.shape[0]):
        lo = offs[i]
        hi = offs[i + 1]
        x = x0
        t = 0.0
        acc = 0.0
        best = NEG_INF
        best_xg = 0.0
        best_t = 0.0
        best_l = 0.0
        ex = exp(alpha * x0)
        for k in range(lo, hi):
            v = x + drift * (jt[k] - t)
            ev = exp(alpha * v)
            acc = acc + (ev - ex) * ia
            if v >= best:
                best = v
                best_xg = v - js[k]
                best_t = jt[k]
                best_l = acc
            x = v - js[k]
            ex = exp(alpha * x)
            t = jt[k]
        v = x + drift * (e[i] - t)
        ev = exp(alpha * v)
        acc = acc + (ev - ex) * ia
        t0[i] = acc
        if v >= best:
            xbar[i] = v
            xg[i] = v
            g_time[i] = e[i]
            big_l[i] = acc
        else:
            xbar[i] = best
            xg[i] = best_xg
            g_time[i] = best_t
            big_l[i] = best_l


def fv_query(double x0, double drift, double alpha,
             double[::1] e, double[::1] jt, double[::1] js, long long[::1] offs,
             double[:, ::1] s_query,
             double[:, ::1] y_out, double[:, ::1] ybar_out):
    """State and running maximum of the time-changed path at given clock
    times (0 and the overall maximum once absorbed)."""
    cdef Py_ssize_t i, q, k, lo, hi
    cdef double ia = 1.0 / (alpha * drift)
    cdef double x, t, acc, cur_max, v, ex, ev, s, seg, xv, tot_max, tot
    for i in range(e.shape[0]):
        lo = offs[i]
        hi = offs[i + 1]
        for q in range(s_query.shape[1]):
            s = s_query[i, q]
            x = x0
            t = 0.0
            acc = 0.0
            cur_max = x0
            ex = exp(alpha * x0)
            xv = NEG_INF
            for k in range(lo, hi + 1):
                if k < hi:
                    v = x + drift * (jt[k] - t)
                else:
                    v = x + drift * (e[i] - t)
                ev = exp(alpha * v)
                seg = (ev - ex) * ia
                if acc + seg > s:
                    xv = log(ex + alpha * drift * (s - acc)) / alpha
                    y_out[i, q] = exp(xv)
                    if xv > cur_max:
                        cur_max = xv
                    ybar_out[i, q] = exp(cur_max)
                    break
                acc = acc + seg
                if v > cur_max:
                    cur_max = v
                if k < hi:
                    x = v - js[k]
                    ex = exp(alpha * x)
                    t = jt[k]
            else:
                # absorbed before s
                y_out[i, q] = 0.0
                ybar_out[i, q] = exp(cur_max)


def fv_passage(double x0, double drift, double alpha,
               double[::1] e, double[::1] jt, double[::1] js, long long[::1] offs,
               double level,
               unsigned char[::1] crossed, double[::1] tdp):
    """First passage of the time-changed path above exp(level), before kill.

    Spectrally negative: upcrossings happen continuously along the drift, so
    the crossing instant and its Lamperti time are exact.
    """
    cdef Py_ssize_t i, k, lo, hi
    cdef double ia = 1.0 / (alpha * drift)
    cdef double x, t, acc, v, ex, ev, elev
    elev = exp(alpha * level)
    for i in range(e.shape[0]):
        lo = offs[i]
        hi = offs[i + 1]
        if x0 >= level:
            crossed[i] = 1
            tdp[i] = 0.0
            continue
        x = x0
        t = 0.0
        acc = 0.0
        ex = exp(alpha * x0)
        crossed[i] = 0
        tdp[i] = 0.0
        for k in range(lo, hi + 1):
            if k < hi:
                v = x + drift * (jt[k] - t)
            else:
                v = x + drift * (e[i] - t)
            if v > level:
                crossed[i] = 1
                tdp[i] = acc + (elev - ex) * ia
                break
            ev = exp(alpha * v)
            acc = acc + (ev - ex) * ia
            if k < hi:
                x = v - js[k]
                ex = exp(alpha * x)
                t = jt[k]


def fv_moment(double x0, double drift, double alpha,
              double[::1] e, double[::1] jt, double[::1] js, long long[::1] offs,
              double[::1] vgrid, double[::1] wsimp, double pow_hi, double pow_lo,
              double[::1] lhs, double[::1] quad):
    """Left side Y_s^pow_hi (s = last grid point) and the Simpson-weighted
    sum of Y_v^pow_lo 1{alive} over the grid, per path."""
    cdef Py_ssize_t i, k, g, lo, hi, m
    cdef double ia = 1.0 / (alpha * drift)
    cdef double x, t, acc, v, ex, ev, seg, s, base
    m = vgrid.shape[0]
    for i in range(e.shape[0]):
        lo = offs[i]
        hi = offs[i + 1]
        x = x0
        t = 0.0
        acc = 0.0
        ex = exp(alpha * x0)
        g = 0
        lhs[i] = 0.0
        quad[i] = 0.0
        for k in range(lo, hi + 1):
            if k < hi:
                v = x + drift * (jt[k] - t)
            else:
                v = x + drift * (e[i] - t)
            ev = exp(alpha * v)
            seg = (ev - ex) * ia
            while g < m and vgrid[g] < acc + seg:
                base = ex + alpha * drift * (vgrid[g] - acc)
                quad[i] = quad[i] + wsimp[g] * pow(base, pow_lo / alpha)
                if g == m - 1:
                    lhs[i] = pow(base, pow_hi / alpha)
                g = g + 1
            acc = acc + seg
            if k < hi:
                x = v - js[k]
                ex = exp(alpha * x)
                t = jt[k]
        # grid points at or past absorption contribute zero


def euler_scan(double x0, double mu, double sigma, double alpha,
               double[::1] dt, double[::1] dw, double[::1] jump, long long[::1] offs,
               double[::1] xbar, double[::1] xg, double[::1] g_time,
               double[::1] big_l, double[::1] t0):
    """Euler grid scan with exact jump overlay.

    dw carries the pre-drawn standard normals (scaled inside by
    sigma*sqrt(dt)); jump is the downward jump applied at the end of each
    sub-step.  Lamperti integrals use the trapezoid rule on the grid; the
    running maximum and its last index are grid-resolution quantities.
    """
    cdef Py_ssize_t i, k, lo, hi
    cdef double x, t, acc, best, best_t, best_l, xn, ex, en
    for i in range(offs.shape[0] - 1):
        lo = offs[i]
        hi = offs[i + 1]
        x = x0
        t = 0.0
        acc = 0.0
        best = x0
        best_t = 0.0
        best_l = 0.0
        ex = exp(alpha * x0)
        for k in range(lo, hi):
            xn = x + mu * dt[k] + sigma * sqrt(dt[k]) * dw[k] - jump[k]
            en = exp(alpha * xn)
            acc = acc + 0.5 * dt[k] * (ex + en)
            t = t + dt[k]
            if xn >= best:
                best = xn
                best_t = t
                best_l = acc
            x = xn
            ex = en
        xbar[i] = best
        xg[i] = best
        g_time[i] = best_t
        big_l[i] = best_l
        t0[i] = acc
