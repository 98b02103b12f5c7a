"""Derivative-free Powell minimization (direction-set method with Brent line searches).

Used to fit the equidistant quantization levels; kept dependency-free so the
compiled kernel can mirror it constant-for-constant.
"""

import math
from dataclasses import dataclass

# Bracketing (golden-section expansion)
_GOLD = 1.618034
_GLIMIT = 100.0
_TINY = 1e-20

# Brent line search
_CGOLD = 0.3819660
_ZEPS = 1e-12
_LINE_TOL = 1e-8
_LINE_ITMAX = 100

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200


@dataclass
class PowellResult:
    x: tuple
    fun: float
    success: bool
    n_cycles: int
    n_evals: int


def _bracket(f, xa, xb):
    """Expand (xa, xb) downhill until a triple xa, xb, xc brackets a minimum."""
    fa = f(xa)
    fb = f(xb)
    if fb > fa:
        xa, xb = xb, xa
        fa, fb = fb, fa
    xc = xb + _GOLD * (xb - xa)
    fc = f(xc)
    n = 3
    while fb > fc:
        r = (xb - xa) * (fb - fc)
        q = (xb - xc) * (fb - fa)
        denom = 2.0 * math.copysign(max(abs(q - r), _TINY), q - r)
        u = xb - ((xb - xc) * q - (xb - xa) * r) / denom
        ulim = xb + _GLIMIT * (xc - xb)
        if (xb - u) * (u - xc) > 0.0:
            fu = f(u)
            n += 1
            if fu < fc:
                return xb, u, xc, fb, fu, fc, n
            if fu > fb:
                return xa, xb, u, fa, fb, fu, n
            u = xc + _GOLD * (xc - xb)
            fu = f(u)
            n += 1
        elif (xc - u) * (u - ulim) > 0.0:
            fu = f(u)
            n += 1
            if fu < fc:
                xb, xc, u = xc, u, u + _GOLD * (u - xc)
                fb, fc = fc, fu
                fu = f(u)
                n += 1
        elif (u - ulim) * (ulim - xc) >= 0.0:
            u = ulim
            fu = f(u)
            n += 1
        else:
            u = xc + _GOLD * (xc - xb)
            fu = f(u)
            n += 1
        xa, xb, xc = xb, xc, u
        fa, fb, fc = fb, fc, fu
    return xa, xb, xc, fa, fb, fc, n


def _brent(f, xa, xb, xc, fb):
    """Brent's method on a bracketed minimum; returns (xmin, fmin, n_evals)."""
    a = min(xa, xc)
    b = max(xa, xc)
    x = w = v = xb
    fx = fw = fv = fb
    e = 0.0
    d = 0.0
    n = 0
    for _ in range(_LINE_ITMAX):
        xm = 0.5 * (a + b)
        tol1 = _LINE_TOL * abs(x) + _ZEPS
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (b - a):
            return x, fx, n
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            etemp = e
            e = d
            if abs(p) >= abs(0.5 * q * etemp) or p <= q * (a - x) or p >= q * (b - x):
                e = a - x if x >= xm else b - x
                d = _CGOLD * e
            else:
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = math.copysign(tol1, xm - x)
        else:
            e = a - x if x >= xm else b - x
            d = _CGOLD * e
        u = x + d if abs(d) >= tol1 else x + math.copysign(tol1, d)
        fu = f(u)
        n += 1
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, fx, n


def _line_minimize(f, p, direction):
    """Minimize f along p + t*direction; returns (new p, f value, step vector, evals)."""

    def f1d(t):
        return f([pi + t * ui for pi, ui in zip(p, direction)])

    xa, xb, xc, fa, fb, fc, n1 = _bracket(f1d, 0.0, 1.0)
    xmin, fmin, n2 = _brent(f1d, xa, xb, xc, fb)
    step = [ui * xmin for ui in direction]
    p_new = [pi + si for pi, si in zip(p, step)]
    return p_new, fmin, step, n1 + n2


def powell_minimize(objective, start, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Minimize a scalar function of a small vector without derivatives.

    Sequential line minimizations along a direction set, replacing the
    direction of largest decrease with the cycle's net displacement when the
    standard acceptance test passes. Converged when one full cycle improves
    the objective by no more than ``tol``.

    Returns a PowellResult; ``success`` is False when ``max_iter`` cycles pass
    without tol-convergence (best point found is still reported).
    """
    p = [float(v) for v in start]
    ndim = len(p)
    dirs = [[1.0 if i == j else 0.0 for j in range(ndim)] for i in range(ndim)]
    fret = objective(p)
    if not math.isfinite(fret):
        raise ValueError("objective not finite at the start point")
    nev = 1
    for cycle in range(1, max_iter + 1):
        fp = fret
        p_start = list(p)
        biggest_drop = 0.0
        i_biggest = 0
        for i in range(ndim):
            fbefore = fret
            p, fret, step, n = _line_minimize(objective, p, dirs[i])
            nev += n
            if fbefore - fret > biggest_drop:
                biggest_drop = fbefore - fret
                i_biggest = i
        if fp - fret <= tol:
            return PowellResult(tuple(p), fret, True, cycle, nev)
        extrap = [2.0 * pi - psi for pi, psi in zip(p, p_start)]
        new_dir = [pi - psi for pi, psi in zip(p, p_start)]
        fe = objective(extrap)
        nev += 1
        if fe < fp:
            t = (
                2.0 * (fp - 2.0 * fret + fe) * (fp - fret - biggest_drop) ** 2
                - biggest_drop * (fp - fe) ** 2
            )
            if t < 0.0:
                p, fret, step, n = _line_minimize(objective, p, new_dir)
                nev += n
                dirs[i_biggest] = dirs[ndim - 1]
                dirs[ndim - 1] = step
    return PowellResult(tuple(p), fret, False, max_iter, nev)
