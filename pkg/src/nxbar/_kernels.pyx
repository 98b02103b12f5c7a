# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: equidistant level fitting and crossbar MVM trials.

Same API and arithmetic as the pure-NumPy reference in ``_kernels_py``
(constants mirror ``_powell``); ``_backend`` picks whichever is importable.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, fabs, sqrt

cnp.import_array()

IS_COMPILED = True

# Restart schedule for the level fit: a1 jittered by +-d0/2, d scaled.
RESTARTS = ((1.0, 0.5), (-1.0, 0.75), (1.0, 1.25), (-1.0, 1.5), (1.0, 1.0))

cdef double GOLD = 1.618034
cdef double GLIMIT = 100.0
cdef double TINY = 1e-20
cdef double CGOLD = 0.3819660
cdef double ZEPS = 1e-12
cdef double LINE_TOL = 1e-8
cdef int LINE_ITMAX = 100
cdef double FIT_TOL = 1e-10
cdef int FIT_MAX_ITER = 200

cdef double[5] RESTART_SIGN = [1.0, -1.0, 1.0, -1.0, 1.0]
cdef double[5] RESTART_SCALE = [0.5, 0.75, 1.25, 1.5, 1.0]


cdef inline double _copysign(double mag, double sign) noexcept nogil:
    if sign >= 0.0:
        return fabs(mag)
    return -fabs(mag)


cdef double _sse(const double* w, Py_ssize_t k, double a1, double d, long n) noexcept nogil:
    """Sum of squared distances to the nearest level; midpoint ties go low."""
    cdef double dd = fabs(d)
    cdef double acc = 0.0
    cdef double r
    cdef Py_ssize_t i
    cdef long j
    if n == 1 or dd == 0.0:
        for i in range(k):
            r = w[i] - a1
            acc += r * r
        return acc
    for i in range(k):
        j = <long>ceil((w[i] - a1) / dd - 0.5)
        if j < 0:
            j = 0
        elif j >= n:
            j = n - 1
        r = w[i] - (a1 + j * dd)
        acc += r * r
    return acc


cdef struct LineCtx:
    const double* w
    Py_ssize_t k
    long n
    double p0, p1
    double u0, u1


cdef inline double _geval(LineCtx* c, double t) noexcept nogil:
    return _sse(c.w, c.k, c.p0 + t * c.u0, c.p1 + t * c.u1, c.n)


cdef void _bracket(LineCtx* c, double* oxa, double* oxb, double* oxc,
                   double* ofb) noexcept nogil:
    cdef double xa = 0.0, xb = 1.0
    cdef double fa = _geval(c, xa)
    cdef double fb = _geval(c, xb)
    cdef double t, tmp, xc, fc, r, q, denom, u, ulim, fu
    if fb > fa:
        t = xa; xa = xb; xb = t
        t = fa; fa = fb; fb = t
    xc = xb + GOLD * (xb - xa)
    fc = _geval(c, xc)
    while fb > fc:
        r = (xb - xa) * (fb - fc)
        q = (xb - xc) * (fb - fa)
        denom = fabs(q - r)
        if denom < TINY:
            denom = TINY
        denom = 2.0 * _copysign(denom, q - r)
        u = xb - ((xb - xc) * q - (xb - xa) * r) / denom
        ulim = xb + GLIMIT * (xc - xb)
        if (xb - u) * (u - xc) > 0.0:
            fu = _geval(c, u)
            if fu < fc:
                oxa[0] = xb; oxb[0] = u; oxc[0] = xc; ofb[0] = fu
                return
            if fu > fb:
                oxa[0] = xa; oxb[0] = xb; oxc[0] = u; ofb[0] = fb
                return
            u = xc + GOLD * (xc - xb)
            fu = _geval(c, u)
        elif (xc - u) * (u - ulim) > 0.0:
            fu = _geval(c, u)
            if fu < fc:
                tmp = u + GOLD * (u - xc)
                xb = xc
                xc = u
                u = tmp
                fb = fc
                fc = fu
                fu = _geval(c, u)
        elif (u - ulim) * (ulim - xc) >= 0.0:
            u = ulim
            fu = _geval(c, u)
        else:
            u = xc + GOLD * (xc - xb)
            fu = _geval(c, u)
        xa = xb; xb = xc; xc = u
        fa = fb; fb = fc; fc = fu
    oxa[0] = xa; oxb[0] = xb; oxc[0] = xc; ofb[0] = fb


cdef double _brent(LineCtx* c, double xa, double xb, double xc, double fb,
                   double* xmin_out) noexcept nogil:
    cdef double a = xa if xa < xc else xc
    cdef double b = xc if xa < xc else xa
    cdef double x = xb, w = xb, v = xb
    cdef double fx = fb, fw = fb, fv = fb
    cdef double e = 0.0, d = 0.0
    cdef double xm, tol1, tol2, r, q, p, etemp, u, fu
    cdef int it
    for it in range(LINE_ITMAX):
        xm = 0.5 * (a + b)
        tol1 = LINE_TOL * fabs(x) + ZEPS
        tol2 = 2.0 * tol1
        if fabs(x - xm) <= tol2 - 0.5 * (b - a):
            break
        if fabs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = fabs(q)
            etemp = e
            e = d
            if fabs(p) >= fabs(0.5 * q * etemp) or p <= q * (a - x) or p >= q * (b - x):
                e = a - x if x >= xm else b - x
                d = CGOLD * e
            else:
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = _copysign(tol1, xm - x)
        else:
            e = a - x if x >= xm else b - x
            d = CGOLD * e
        if fabs(d) >= tol1:
            u = x + d
        else:
            u = x + _copysign(tol1, d)
        fu = _geval(c, u)
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v = w; w = x; x = u
            fv = fw; fw = fx; fx = fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v = w; w = u
                fv = fw; fw = fu
            elif fu <= fv or v == x or v == w:
                v = u
                fv = fu
    xmin_out[0] = x
    return fx


cdef double _linmin(const double* w, Py_ssize_t k, long n, double* p, double* u) noexcept nogil:
    """Minimize along p + t*u; moves p, scales u by the step taken."""
    cdef LineCtx c
    cdef double xa, xb, xc, fb, xmin, fmin
    c.w = w; c.k = k; c.n = n
    c.p0 = p[0]; c.p1 = p[1]
    c.u0 = u[0]; c.u1 = u[1]
    _bracket(&c, &xa, &xb, &xc, &fb)
    fmin = _brent(&c, xa, xb, xc, fb, &xmin)
    u[0] *= xmin
    u[1] *= xmin
    p[0] += u[0]
    p[1] += u[1]
    return fmin


cdef int _powell2(const double* w, Py_ssize_t k, long n, double* p,
                  double* fret) noexcept nogil:
    """2-D Powell on the level-fit objective; returns 1 on tol-convergence."""
    cdef double[2][2] dirs
    cdef double[2] pt, ptt, xit, u
    cdef double fp, fptt, biggest_drop, fbefore, t
    cdef int it, i, ibig
    dirs[0][0] = 1.0; dirs[0][1] = 0.0
    dirs[1][0] = 0.0; dirs[1][1] = 1.0
    fret[0] = _sse(w, k, p[0], p[1], n)
    for it in range(FIT_MAX_ITER):
        fp = fret[0]
        pt[0] = p[0]; pt[1] = p[1]
        biggest_drop = 0.0
        ibig = 0
        for i in range(2):
            u[0] = dirs[i][0]; u[1] = dirs[i][1]
            fbefore = fret[0]
            fret[0] = _linmin(w, k, n, p, u)
            if fbefore - fret[0] > biggest_drop:
                biggest_drop = fbefore - fret[0]
                ibig = i
        if fp - fret[0] <= FIT_TOL:
            return 1
        ptt[0] = 2.0 * p[0] - pt[0]
        ptt[1] = 2.0 * p[1] - pt[1]
        xit[0] = p[0] - pt[0]
        xit[1] = p[1] - pt[1]
        fptt = _sse(w, k, ptt[0], ptt[1], n)
        if fptt < fp:
            t = (2.0 * (fp - 2.0 * fret[0] + fptt) * (fp - fret[0] - biggest_drop)
                 * (fp - fret[0] - biggest_drop) - biggest_drop * (fp - fptt) * (fp - fptt))
            if t < 0.0:
                fret[0] = _linmin(w, k, n, p, xit)
                dirs[ibig][0] = dirs[1][0]
                dirs[ibig][1] = dirs[1][1]
                dirs[1][0] = xit[0]
                dirs[1][1] = xit[1]
    return 0


cdef int _fit(const double* w, Py_ssize_t k, long n_states, double* a1_out,
              double* d_out, double* sse_out) noexcept nogil:
    cdef double w_min = w[0], w_max = w[0], mean = 0.0
    cdef Py_ssize_t i
    cdef double d0, best_f, f
    cdef double[2] p
    cdef int best_conv, conv, s
    for i in range(k):
        if w[i] < w_min:
            w_min = w[i]
        if w[i] > w_max:
            w_max = w[i]
        mean += w[i]
    mean /= k
    if n_states == 1:
        a1_out[0] = mean
        d_out[0] = 0.0
        sse_out[0] = _sse(w, k, mean, 0.0, 1)
        return 1
    if w_min == w_max:
        a1_out[0] = w_min
        d_out[0] = 0.0
        sse_out[0] = 0.0
        return 1
    d0 = (w_max - w_min) / (n_states - 1)
    p[0] = w_min
    p[1] = d0
    best_conv = _powell2(w, k, n_states, p, &best_f)
    a1_out[0] = p[0]
    d_out[0] = fabs(p[1])
    for s in range(5):
        p[0] = w_min + RESTART_SIGN[s] * d0 / 2.0
        p[1] = RESTART_SCALE[s] * d0
        conv = _powell2(w, k, n_states, p, &f)
        if f < best_f:
            best_f = f
            best_conv = conv
            a1_out[0] = p[0]
            d_out[0] = fabs(p[1])
    sse_out[0] = best_f
    return best_conv


def quantize_fit(w, long n_states):
    """Fit (a1, d) minimizing the snap error; returns (a1, d, sse, converged)."""
    cdef cnp.ndarray[double, ndim=1, mode="c"] arr = np.ascontiguousarray(
        np.asarray(w, dtype=np.float64).ravel())
    if arr.shape[0] == 0:
        raise ValueError("cannot fit levels to an empty weight set")
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    cdef double a1, d, s
    cdef int conv
    conv = _fit(&arr[0], arr.shape[0], n_states, &a1, &d, &s)
    return a1, d, s, bool(conv)


def quantize_fit_batch(w2d, long n_states):
    """Row-wise quantize_fit; returns (a1, d, converged) arrays."""
    cdef cnp.ndarray[double, ndim=2, mode="c"] arr = np.ascontiguousarray(
        np.asarray(w2d, dtype=np.float64))
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    cdef Py_ssize_t t = arr.shape[0]
    cdef Py_ssize_t k = arr.shape[1]
    cdef cnp.ndarray[double, ndim=1] a1 = np.empty(t)
    cdef cnp.ndarray[double, ndim=1] d = np.empty(t)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] conv = np.empty(t, dtype=np.uint8)
    cdef double s
    cdef Py_ssize_t i
    with nogil:
        for i in range(t):
            conv[i] = <cnp.uint8_t>_fit(&arr[i, 0], k, n_states, &a1[i], &d[i], &s)
    return a1, d, conv


def assign_levels(w, double a1, double d, long n_states):
    """Index of the nearest level for each weight; midpoint ties go low."""
    arr = np.asarray(w, dtype=np.float64)
    shape = arr.shape
    cdef cnp.ndarray[double, ndim=1, mode="c"] flat = np.ascontiguousarray(arr.ravel())
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(flat.shape[0], dtype=np.int64)
    cdef Py_ssize_t i
    cdef long j
    if n_states == 1 or d == 0.0:
        out[:] = 0
        return out.reshape(shape)
    for i in range(flat.shape[0]):
        j = <long>ceil((flat[i] - a1) / d - 0.5)
        if j < 0:
            j = 0
        elif j >= n_states:
            j = n_states - 1
        out[i] = j
    return out.reshape(shape)


def sse_value(w, double a1, double d, long n_states):
    """Sum over weights of the squared distance to the nearest level."""
    cdef cnp.ndarray[double, ndim=1, mode="c"] arr = np.ascontiguousarray(
        np.asarray(w, dtype=np.float64).ravel())
    return _sse(&arr[0], arr.shape[0], a1, d, n_states)


def mvm_rmse_multi(w, x, a1, d, sys_z, cell_z, long m, long n, long tile_m,
                   long tile_n, long n_states, sigma_nl, sigma_perp,
                   double r_min, double r_max, double a_i, double b_i):
    """RMSE of retrieved crossbar MVMs vs the exact product, per (sigma, trial).

    Mirrors _kernels_py.mvm_rmse_multi: w (T, m*n) row-major, x (T, n),
    fitted (a1, d) per trial, standard-normal draws sys_z (T, tiles, N) and
    cell_z (T, tiles, tile_m*tile_n, N) (None when every sigma is zero),
    sigma grids (S,). Returns (S, T).
    """
    if m % tile_m or n % tile_n:
        raise ValueError("kernel path requires matrix dims to be tile multiples")
    cdef cnp.ndarray[double, ndim=2, mode="c"] W = np.ascontiguousarray(
        np.asarray(w, dtype=np.float64))
    cdef cnp.ndarray[double, ndim=2, mode="c"] X = np.ascontiguousarray(
        np.asarray(x, dtype=np.float64))
    cdef cnp.ndarray[double, ndim=1, mode="c"] A1 = np.ascontiguousarray(
        np.asarray(a1, dtype=np.float64))
    cdef cnp.ndarray[double, ndim=1, mode="c"] D = np.ascontiguousarray(
        np.asarray(d, dtype=np.float64))
    cdef cnp.ndarray[double, ndim=1, mode="c"] SNL = np.ascontiguousarray(
        np.asarray(sigma_nl, dtype=np.float64))
    cdef cnp.ndarray[double, ndim=1, mode="c"] SP = np.ascontiguousarray(
        np.asarray(sigma_perp, dtype=np.float64))
    cdef Py_ssize_t trials = W.shape[0]
    cdef Py_ssize_t n_sigma = SNL.shape[0]
    cdef long n_rb = m // tile_m
    cdef long n_cb = n // tile_n
    cdef long n_tiles = n_rb * n_cb
    cdef long cells = tile_m * tile_n
    cdef bint have_noise = sys_z is not None
    cdef cnp.ndarray[double, ndim=3, mode="c"] SYSZ
    cdef cnp.ndarray[double, ndim=4, mode="c"] CELLZ
    if have_noise:
        SYSZ = np.ascontiguousarray(np.asarray(sys_z, dtype=np.float64))
        CELLZ = np.ascontiguousarray(np.asarray(cell_z, dtype=np.float64))
        if (SYSZ.shape[0] != trials or SYSZ.shape[1] != n_tiles
                or SYSZ.shape[2] != n_states):
            raise ValueError("sys_z shape mismatch")
        if (CELLZ.shape[0] != trials or CELLZ.shape[1] != n_tiles
                or CELLZ.shape[2] != cells or CELLZ.shape[3] != n_states):
            raise ValueError("cell_z shape mismatch")
    else:
        SYSZ = np.zeros((1, 1, 1))
        CELLZ = np.zeros((1, 1, 1, 1))
    cdef cnp.ndarray[double, ndim=2, mode="c"] out = np.empty((n_sigma, trials))
    cdef cnp.ndarray[cnp.int64_t, ndim=1] idx = np.empty(m * n, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] y_true = np.empty(m)
    cdef cnp.ndarray[double, ndim=1] y_est = np.empty(m)
    cdef cnp.ndarray[double, ndim=1] cur = np.empty(n)
    cdef double mid = 0.5 * (r_min + r_max)
    cdef Py_ssize_t t, s
    cdef long rb, cb, ti, r, cc, gr, gc, lvl
    cdef double a1t, dt, a_r, b_r, acc, aval, res, volts, row_a, sum_i, part, diff, snl, sp
    with nogil:
        for t in range(trials):
            a1t = A1[t]
            dt = D[t]
            if n_states == 1 or dt == 0.0:
                a_r = 1.0
                b_r = mid - a1t
                for gr in range(m * n):
                    idx[gr] = 0
            else:
                a_r = (r_max - r_min) / ((n_states - 1) * dt)
                b_r = r_min - a_r * a1t
                for gr in range(m * n):
                    lvl = <long>ceil((W[t, gr] - a1t) / dt - 0.5)
                    if lvl < 0:
                        lvl = 0
                    elif lvl >= n_states:
                        lvl = n_states - 1
                    idx[gr] = lvl
            for gc in range(n):
                cur[gc] = a_i * X[t, gc] + b_i
            for gr in range(m):
                acc = 0.0
                for gc in range(n):
                    acc += W[t, gr * n + gc] * X[t, gc]
                y_true[gr] = acc
            for s in range(n_sigma):
                snl = SNL[s]
                sp = SP[s]
                for gr in range(m):
                    y_est[gr] = 0.0
                for rb in range(n_rb):
                    for cb in range(n_cb):
                        ti = rb * n_cb + cb
                        sum_i = 0.0
                        for cc in range(tile_n):
                            sum_i += cur[cb * tile_n + cc]
                        for r in range(tile_m):
                            gr = rb * tile_m + r
                            volts = 0.0
                            row_a = 0.0
                            for cc in range(tile_n):
                                gc = cb * tile_n + cc
                                lvl = idx[gr * n + gc]
                                aval = a1t + lvl * dt
                                res = a_r * aval + b_r
                                if have_noise:
                                    res += snl * SYSZ[t, ti, lvl]
                                    res += sp * CELLZ[t, ti, r * tile_n + cc, lvl]
                                volts += res * cur[gc]
                                row_a += aval
                            part = (volts - b_r * sum_i - a_r * b_i * row_a) / (a_r * a_i)
                            y_est[gr] += part
                acc = 0.0
                for gr in range(m):
                    diff = y_est[gr] - y_true[gr]
                    acc += diff * diff
                out[s, t] = sqrt(acc / m)
    return out
