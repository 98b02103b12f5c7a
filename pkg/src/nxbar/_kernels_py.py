"""Pure-NumPy implementations of the hot kernels.

This is the fallback backend (and the reference the compiled kernels in
``_kernels.pyx`` are tested against). API and arithmetic are shared:

* equidistant level fitting: minimize the summed squared distance of each
  weight to its nearest level, over (first level a1, spacing d), via Powell
  started from the weight range plus five deterministic restarts;
* Monte-Carlo crossbar trials: given pre-drawn standard-normal/uniform blocks,
  program -> accumulate -> retrieve each tile and report the RMSE against the
  full-precision product.
"""

import numpy as np

from ._powell import DEFAULT_MAX_ITER, DEFAULT_TOL, powell_minimize

IS_COMPILED = False

# Restart schedule for the level fit: a1 jittered by +-d0/2, d scaled.
RESTARTS = ((1.0, 0.5), (-1.0, 0.75), (1.0, 1.25), (-1.0, 1.5), (1.0, 1.0))


def assign_levels(w, a1, d, n_states):
    """Index of the nearest level a1 + i*d for each weight; midpoint ties go low."""
    w = np.asarray(w, dtype=np.float64)
    if n_states == 1 or d == 0.0:
        return np.zeros(w.shape, dtype=np.int64)
    idx = np.ceil((w - a1) / d - 0.5).astype(np.int64)
    return np.clip(idx, 0, n_states - 1)


def sse_value(w, a1, d, n_states):
    """Sum over weights of the squared distance to the nearest level."""
    w = np.asarray(w, dtype=np.float64).ravel()
    idx = assign_levels(w, a1, abs(d), n_states)
    r = w - (a1 + idx * abs(d))
    return float(np.dot(r, r))


def quantize_fit(w, n_states):
    """Fit (a1, d) minimizing sse_value; returns (a1, d, sse, converged)."""
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.size == 0:
        raise ValueError("cannot fit levels to an empty weight set")
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    w_min = float(w.min())
    w_max = float(w.max())
    if n_states == 1:
        a1 = float(w.mean())
        return a1, 0.0, sse_value(w, a1, 0.0, 1), True
    if w_min == w_max:
        return w_min, 0.0, 0.0, True

    def objective(p):
        return sse_value(w, p[0], abs(p[1]), n_states)

    d0 = (w_max - w_min) / (n_states - 1)
    starts = [(w_min, d0)]
    starts += [(w_min + sign * d0 / 2.0, scale * d0) for sign, scale in RESTARTS]
    best = None
    for start in starts:
        res = powell_minimize(objective, start, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER)
        if best is None or res.fun < best.fun:
            best = res
    return float(best.x[0]), abs(float(best.x[1])), float(best.fun), bool(best.success)


def quantize_fit_batch(w2d, n_states):
    """Row-wise quantize_fit; returns (a1, d, converged) arrays."""
    w2d = np.asarray(w2d, dtype=np.float64)
    t = w2d.shape[0]
    a1 = np.empty(t)
    d = np.empty(t)
    conv = np.empty(t, dtype=np.uint8)
    for i in range(t):
        a1[i], d[i], _, ok = quantize_fit(w2d[i], n_states)
        conv[i] = ok
    return a1, d, conv


def mvm_rmse_multi(
    w, x, a1, d, sys_z, cell_z, m, n, tile_m, tile_n, n_states,
    sigma_nl, sigma_perp, r_min, r_max, a_i, b_i,
):
    """RMSE of retrieved crossbar MVMs against the exact product, per (sigma, trial).

    w: (T, m*n) row-major weights; x: (T, n) inputs; a1, d: (T,) fitted levels;
    sys_z: (T, tiles, N) and cell_z: (T, tiles, tile_m*tile_n, N) standard-normal
    draws, tiles ordered row-block-major. sigma_nl/sigma_perp: (S,) grids
    evaluated against the same draws. Returns (S, T).
    """
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    sigma_nl = np.asarray(sigma_nl, dtype=np.float64)
    sigma_perp = np.asarray(sigma_perp, dtype=np.float64)
    if m % tile_m or n % tile_n:
        raise ValueError("kernel path requires matrix dims to be tile multiples")
    n_rb = m // tile_m
    n_cb = n // tile_n
    trials = w.shape[0]
    n_sigma = sigma_nl.shape[0]
    mid = 0.5 * (r_min + r_max)
    out = np.empty((n_sigma, trials))
    cells = tile_m * tile_n
    have_noise = sys_z is not None
    zero_blk = np.zeros((tile_m, tile_n))
    for t in range(trials):
        wt = w[t].reshape(m, n)
        xt = x[t]
        a1t = a1[t]
        dt = d[t]
        idx = assign_levels(wt, a1t, dt, n_states)
        a_val = a1t + idx * dt
        if n_states == 1 or dt == 0.0:
            a_r = 1.0
            b_r = mid - a1t
        else:
            a_r = (r_max - r_min) / ((n_states - 1) * dt)
            b_r = r_min - a_r * a1t
        currents = a_i * xt + b_i
        y_true = wt @ xt
        base = []
        sys_g = []
        cell_g = []
        rows_a = []
        sum_i = []
        for rb in range(n_rb):
            for cb in range(n_cb):
                ti = rb * n_cb + cb
                rs = slice(rb * tile_m, (rb + 1) * tile_m)
                cs = slice(cb * tile_n, (cb + 1) * tile_n)
                idx_blk = idx[rs, cs]
                a_blk = a_val[rs, cs]
                base.append(a_r * a_blk + b_r)
                if have_noise:
                    sys_g.append(sys_z[t, ti][idx_blk])
                    zc = cell_z[t, ti].reshape(tile_m, tile_n, n_states)
                    cell_g.append(
                        np.take_along_axis(zc, idx_blk[:, :, None], axis=2)[:, :, 0]
                    )
                else:
                    sys_g.append(zero_blk)
                    cell_g.append(zero_blk)
                rows_a.append(a_blk.sum(axis=1))
                sum_i.append(currents[cs].sum())
        for s in range(n_sigma):
            y_est = np.zeros(m)
            for rb in range(n_rb):
                for cb in range(n_cb):
                    ti = rb * n_cb + cb
                    res = base[ti] + sigma_nl[s] * sys_g[ti] + sigma_perp[s] * cell_g[ti]
                    volts = res @ currents[cb * tile_n:(cb + 1) * tile_n]
                    part = (volts - b_r * sum_i[ti] - a_r * b_i * rows_a[ti]) / (a_r * a_i)
                    y_est[rb * tile_m:(rb + 1) * tile_m] += part
            diff = y_est - y_true
            out[s, t] = np.sqrt(np.dot(diff, diff) / m)
    return out
