"""Seeded Monte-Carlo studies of crossbar MVM error.

Five studies: quantization error vs number of states (1/N law), RMSE vs
systematic and cell-specific noise amplitude (linear laws), the optimal
number of states under noise, and RMSE scaling with array rows/columns.

Randomness is organized as purpose-keyed substreams of a single experiment
seed, so every sweep is a pure function of (spec, seed), trials can be
chunked or parallelized without changing results, and grid points share
their (W, x) draws (common random numbers: each point stays unbiased while
point-to-point comparisons lose most Monte-Carlo jitter).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import crossbar, quantizer
from ._backend import kernels
from .device import DEFAULT_R_MAX, DEFAULT_R_MIN, NoiseSpec, ideal_ladder

# substream purpose labels
_L_QUANT = 1
_L_NOISE = 2
_L_NOPT = 3
_L_SCALING_ROWS = 4
_L_SCALING_COLS = 5

QUANT_N_GRID = (1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64)
NOISE_SIGMA_GRID = (0.0, 25.0, 50.0, 100.0, 150.0, 200.0)
NOPT_SIGMA_GRID = (0.0, 50.0, 100.0, 150.0, 200.0)
SCALING_SIZES = (4, 8, 16, 32, 64, 128, 256)
SCALING_NOISE_CONFIGS = (("systematic", 50.0, 0.0), ("cell-specific", 0.0, 50.0))

_CHUNK = 512


@dataclass(frozen=True)
class RandomMvmSpec:
    """One randomized MVM configuration: W ~ N(0,1), x ~ U(0,1)."""

    rows: int = 4
    cols: int = 4
    n_states: int = 4
    trials: int = 2000
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    tile_rows: int = 4
    tile_cols: int = 4
    r_min: float = DEFAULT_R_MIN
    r_max: float = DEFAULT_R_MAX

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class FitResult:
    model: str  # linear | inverse-n | power-law
    params: dict
    r_squared: float


def substream(seed, *key):
    """Deterministic independent generator for one purpose within an experiment."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def mvm_rmse_trial(spec, rng):
    """One randomized MVM through the full module path; RMSE vs the exact product.

    Ground truth is the full-precision W @ x, so quantization error is part of
    the reported RMSE by construction. Draw order from ``rng``: W (row-major),
    x, then per tile (row-block-major) the shared state offsets followed by
    each cell's per-state draws.
    """
    w = rng.standard_normal((spec.rows, spec.cols))
    x = rng.random(spec.cols)
    q = quantizer.quantize(w, spec.n_states)
    ladder = ideal_ladder(spec.n_states, spec.r_min, spec.r_max)
    params = crossbar.weight_to_resistance_map(q.level_set, ladder)
    result = crossbar.crossbar_matvec(
        q, x, spec.tile_rows, spec.tile_cols, params,
        ladder=ladder, noise=spec.noise, rng=rng, systematic_redraw="per_tile",
    )
    diff = result.y_tilde - w @ x
    return float(np.sqrt(np.mean(diff * diff)))


def draw_mvm_arrays(rng, m, n, tile_rows, tile_cols, n_states):
    """Pre-draw one trial's randomness in mvm_rmse_trial's exact stream order."""
    if m % tile_rows or n % tile_cols:
        raise ValueError("kernel arrays require tile-multiple shapes")
    n_tiles = (m // tile_rows) * (n // tile_cols)
    cells = tile_rows * tile_cols
    w = rng.standard_normal(m * n)
    x = rng.random(n)
    sys_z = np.empty((n_tiles, n_states))
    cell_z = np.empty((n_tiles, cells, n_states))
    for ti in range(n_tiles):
        sys_z[ti] = rng.standard_normal(n_states)
        cell_z[ti] = rng.standard_normal((cells, n_states))
    return w, x, sys_z, cell_z


def _point_rmse(seed, key_wx, key_noise, m, n, tile, n_states, sigma_nl, sigma_perp,
                trials, need_noise):
    """(S, trials) RMSE samples for one grid point, chunked over trials.

    Four substreams (weights, inputs, shared offsets, cell offsets) keyed by
    purpose, so grid points sharing key_wx see identical (W, x) sequences.
    """
    tile_m, tile_n = tile
    n_tiles = (m // tile_m) * (n // tile_n)
    cells = tile_m * tile_n
    s_w = substream(seed, *key_wx, 0)
    s_x = substream(seed, *key_wx, 1)
    s_sys = substream(seed, *key_noise, 2)
    s_cell = substream(seed, *key_noise, 3)
    sigma_nl = np.asarray(sigma_nl, dtype=np.float64)
    sigma_perp = np.asarray(sigma_perp, dtype=np.float64)
    out = np.empty((len(sigma_nl), trials))
    for lo in range(0, trials, _CHUNK):
        t = min(_CHUNK, trials - lo)
        w = s_w.standard_normal((t, m * n))
        x = s_x.random((t, n))
        if need_noise:
            sys_z = s_sys.standard_normal((t, n_tiles, n_states))
            cell_z = s_cell.standard_normal((t, n_tiles, cells, n_states))
        else:
            sys_z = cell_z = None
        a1, d, _ = kernels.quantize_fit_batch(w, n_states)
        out[:, lo:lo + t] = kernels.mvm_rmse_multi(
            w, x, a1, d, sys_z, cell_z, m, n, tile_m, tile_n, n_states,
            sigma_nl, sigma_perp, DEFAULT_R_MIN, DEFAULT_R_MAX,
            crossbar.I_MAX_AMPS, 0.0,
        )
    return out


def fit_linear(xs, ys):
    """OLS line fit; params carry slope/intercept and their standard errors."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    n = len(xs)
    x_mean = xs.mean()
    y_mean = ys.mean()
    sxx = np.sum((xs - x_mean) ** 2)
    slope = np.sum((xs - x_mean) * (ys - y_mean)) / sxx
    intercept = y_mean - slope * x_mean
    resid = ys - (slope * xs + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ys - y_mean) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    s2 = ss_res / max(n - 2, 1)
    return FitResult(
        "linear",
        {
            "slope": float(slope),
            "intercept": float(intercept),
            "slope_stderr": math.sqrt(s2 / sxx),
            "intercept_stderr": math.sqrt(s2 * (1.0 / n + x_mean**2 / sxx)),
        },
        r2,
    )


def fit_inverse_n(ns, ys):
    """Least-squares c/N fit (no intercept)."""
    ns = np.asarray(ns, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    basis = 1.0 / ns
    c = float(np.dot(ys, basis) / np.dot(basis, basis))
    resid = ys - c * basis
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult("inverse-n", {"c": c}, r2)


def fit_power_law(xs, ys):
    """y = c * x^p via OLS on log-log."""
    lin = fit_linear(np.log(xs), np.log(ys))
    return FitResult(
        "power-law",
        {
            "exponent": lin.params["slope"],
            "prefactor": math.exp(lin.params["intercept"]),
            "exponent_stderr": lin.params["slope_stderr"],
        },
        lin.r_squared,
    )


@dataclass(frozen=True)
class QuantizationSweepResult:
    n_values: tuple
    rmse_mean: np.ndarray
    rmse_std: np.ndarray
    trials: int
    fit: FitResult

    CSV_HEADER = ("n_states", "rmse_mean", "rmse_stddev", "trials")

    def csv_rows(self):
        return [
            (n, self.rmse_mean[i], self.rmse_std[i], self.trials)
            for i, n in enumerate(self.n_values)
        ]

    def summary(self):
        return {
            "sweep": "quantization",
            "fit": {"model": self.fit.model, **self.fit.params, "r_squared": self.fit.r_squared},
            "strictly_decreasing": bool(np.all(np.diff(self.rmse_mean) < 0)),
        }


def quantization_sweep(n_values=QUANT_N_GRID, trials=2000, seed=0, shape=(4, 4),
                       tile=(4, 4)):
    """Mean MVM RMSE vs number of states, zero noise; fits c/N."""
    m, n = shape
    means = np.empty(len(n_values))
    stds = np.empty(len(n_values))
    for i, n_states in enumerate(n_values):
        samples = _point_rmse(
            seed, (_L_QUANT,), (_L_QUANT, n_states), m, n, tile, n_states,
            [0.0], [0.0], trials, need_noise=False,
        )[0]
        means[i] = samples.mean()
        stds[i] = samples.std(ddof=1)
    return QuantizationSweepResult(
        tuple(n_values), means, stds, trials, fit_inverse_n(n_values, means)
    )


@dataclass(frozen=True)
class NoiseSweepResult:
    kinds: tuple
    sigma_values: tuple
    rmse_mean: dict  # kind -> array
    rmse_std: dict
    trials: int
    fits: dict  # kind -> FitResult

    CSV_HEADER = ("sigma_kind", "sigma_ohm", "rmse_mean", "rmse_stddev", "trials")

    def csv_rows(self):
        rows = []
        for kind in self.kinds:
            for i, s in enumerate(self.sigma_values):
                rows.append((kind, s, self.rmse_mean[kind][i], self.rmse_std[kind][i], self.trials))
        return rows

    def summary(self):
        return {
            "sweep": "noise",
            "fits": {
                k: {**f.params, "r_squared": f.r_squared} for k, f in self.fits.items()
            },
        }


def noise_sweep(kind="both", sigma_values=NOISE_SIGMA_GRID, trials=2000, seed=0,
                n_states=4, shape=(4, 4), tile=(4, 4)):
    """Mean MVM RMSE vs noise amplitude for one or both noise kinds (N = 4 base).

    Both kinds (and all sigma points) share their weight/input/offset draws,
    so the slope comparison is made on common random numbers.
    """
    kinds = ("systematic", "cell-specific") if kind == "both" else (kind,)
    m, n = shape
    zeros = np.zeros(len(sigma_values))
    means, stds, fits = {}, {}, {}
    for k in kinds:
        if k == "systematic":
            s_nl, s_perp = np.asarray(sigma_values, dtype=np.float64), zeros
        elif k == "cell-specific":
            s_nl, s_perp = zeros, np.asarray(sigma_values, dtype=np.float64)
        else:
            raise ValueError("unknown noise kind %r" % k)
        samples = _point_rmse(
            seed, (_L_NOISE,), (_L_NOISE,), m, n, tile, n_states,
            s_nl, s_perp, trials, need_noise=True,
        )
        means[k] = samples.mean(axis=1)
        stds[k] = samples.std(axis=1, ddof=1)
        fits[k] = fit_linear(sigma_values, means[k])
    return NoiseSweepResult(kinds, tuple(sigma_values), means, stds, trials, fits)


@dataclass(frozen=True)
class NoptStudyResult:
    sigma_perp_values: tuple
    sigma_nl: float
    n_range: tuple
    n_opt: np.ndarray  # (repetitions, n_sigma)
    trials_per_point: int

    HIST_HEADER = ("sigma_perp_ohm", "n_states", "fraction")
    MEDIAN_HEADER = ("sigma_perp_ohm", "median_n_opt")

    @property
    def medians(self):
        return np.median(self.n_opt, axis=0)

    def histogram(self):
        lo, hi = self.n_range
        counts = np.zeros((len(self.sigma_perp_values), hi - lo + 1))
        for si in range(len(self.sigma_perp_values)):
            for value in self.n_opt[:, si]:
                counts[si, int(value) - lo] += 1
        return counts / self.n_opt.shape[0]

    def csv_rows(self):
        rows = []
        hist = self.histogram()
        lo, hi = self.n_range
        for si, s in enumerate(self.sigma_perp_values):
            for ni, n_states in enumerate(range(lo, hi + 1)):
                rows.append((s, n_states, hist[si, ni]))
        return rows

    def median_rows(self):
        return [(s, m) for s, m in zip(self.sigma_perp_values, self.medians)]

    def summary(self):
        return {
            "sweep": "nopt",
            "sigma_nl_ohm": self.sigma_nl,
            "medians": {repr(s): float(m) for s, m in zip(self.sigma_perp_values, self.medians)},
        }


def _nopt_repetition(packed):
    """argmin_N of the mean trial RMSE for one repetition, per sigma_perp point."""
    seed, rep, sigma_nl, sigma_perp_values, n_range, trials, shape, tile = packed
    m, n = shape
    lo, hi = n_range
    sig_perp = np.asarray(sigma_perp_values, dtype=np.float64)
    sig_nl = np.full(len(sig_perp), float(sigma_nl))
    means = np.empty((len(sig_perp), hi - lo + 1))
    for ni, n_states in enumerate(range(lo, hi + 1)):
        samples = _point_rmse(
            seed, (_L_NOPT, rep), (_L_NOPT, rep, n_states), m, n, tile,
            n_states, sig_nl, sig_perp, trials, need_noise=True,
        )
        means[:, ni] = samples.mean(axis=1)
    return lo + np.argmin(means, axis=1)


def nopt_study(sigma_nl=50.0, sigma_perp_values=NOPT_SIGMA_GRID, n_range=(2, 16),
               repetitions=200, trials_per_point=200, seed=0, shape=(4, 4), tile=(4, 4),
               workers=1):
    """Distribution of the RMSE-minimizing state count under noise.

    The resistance range stays fixed for every N (state spacing shrinks as N
    grows). Each repetition estimates mean RMSE per N over fresh trials and
    records the argmin; one quantizer fit per (repetition, trial, N) serves
    every sigma_perp point. Repetitions own keyed substreams, so running them
    across ``workers`` processes cannot change the result.
    """
    jobs = [
        (seed, rep, sigma_nl, tuple(sigma_perp_values), tuple(n_range),
         trials_per_point, tuple(shape), tuple(tile))
        for rep in range(repetitions)
    ]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_nopt_repetition, jobs, chunksize=8))
    else:
        rows = [_nopt_repetition(job) for job in jobs]
    n_opt = np.stack(rows).astype(np.int64)
    return NoptStudyResult(tuple(sigma_perp_values), float(sigma_nl), n_range, n_opt,
                           trials_per_point)


@dataclass(frozen=True)
class ScalingSweepResult:
    vary: str
    noise_kind: str
    sizes: tuple
    rmse_mean: np.ndarray
    rmse_std: np.ndarray
    trials: int
    fit: FitResult

    CSV_HEADER = ("vary", "noise_kind", "size", "rmse_mean", "rmse_stddev", "trials")

    def csv_rows(self):
        return [
            (self.vary, self.noise_kind, s, self.rmse_mean[i], self.rmse_std[i], self.trials)
            for i, s in enumerate(self.sizes)
        ]

    def summary(self):
        return {
            "sweep": "scaling",
            "vary": self.vary,
            "noise_kind": self.noise_kind,
            "fit": {"model": self.fit.model, **self.fit.params, "r_squared": self.fit.r_squared},
        }


def scaling_sweep(vary, sizes=SCALING_SIZES, fixed_other=4, sigma_nl=0.0, sigma_perp=50.0,
                  noise_kind=None, n_states=4, trials=2000, seed=0, tile=(4, 4)):
    """Mean MVM RMSE vs matrix rows or columns, multiplexed through 4x4 tiles.

    Column sweeps get a power-law fit (the error accumulates along rows);
    row sweeps get a linear fit over the post-transient sizes (>= 16).
    """
    if vary not in ("rows", "cols"):
        raise ValueError("vary must be 'rows' or 'cols'")
    label = _L_SCALING_ROWS if vary == "rows" else _L_SCALING_COLS
    if noise_kind is None:
        noise_kind = "systematic" if sigma_nl >= sigma_perp else "cell-specific"
    means = np.empty(len(sizes))
    stds = np.empty(len(sizes))
    for i, size in enumerate(sizes):
        m, n = (size, fixed_other) if vary == "rows" else (fixed_other, size)
        samples = _point_rmse(
            seed, (label, size), (label, size), m, n, tile, n_states,
            [sigma_nl], [sigma_perp], trials, need_noise=True,
        )[0]
        means[i] = samples.mean()
        stds[i] = samples.std(ddof=1)
    if vary == "cols":
        fit = fit_power_law(sizes, means)
    else:
        steady = [i for i, s in enumerate(sizes) if s >= 16] or list(range(len(sizes)))
        fit = fit_linear(np.asarray(sizes)[steady], means[steady])
    return ScalingSweepResult(vary, noise_kind, tuple(sizes), means, stds, trials, fit)


def check_quantization(result):
    """Fig. 3 verdicts: 1/N fit quality and monotone decrease."""
    return {
        "inverse_n_fit_r2_gt_0.95": bool(result.fit.r_squared > 0.95),
        "rmse_strictly_decreasing": bool(np.all(np.diff(result.rmse_mean) < 0)),
    }


def check_noise(result):
    """Fig. 4 verdicts: linearity, slope ordering, intercept vs sigma=0 point."""
    f_sys = result.fits["systematic"]
    f_cell = result.fits["cell-specific"]
    i0 = result.sigma_values.index(0.0) if 0.0 in result.sigma_values else 0
    checks = {
        "systematic_fit_r2_gt_0.9": bool(f_sys.r_squared > 0.9),
        "cell_fit_r2_gt_0.9": bool(f_cell.r_squared > 0.9),
        "cell_slope_lt_systematic_slope": bool(
            f_cell.params["slope"] < f_sys.params["slope"]
        ),
    }
    for kind, fit in (("systematic", f_sys), ("cell-specific", f_cell)):
        rmse0 = result.rmse_mean[kind][i0]
        se0 = result.rmse_std[kind][i0] / math.sqrt(result.trials)
        band = 2.0 * math.hypot(se0, fit.params["intercept_stderr"])
        checks["%s_intercept_within_2se" % kind] = bool(
            abs(fit.params["intercept"] - rmse0) <= band
        )
    return checks


def check_nopt(result):
    """Fig. 5 verdicts on the median N_opt curve."""
    med = result.medians
    sig = list(result.sigma_perp_values)
    checks = {
        "median_non_increasing": bool(np.all(np.diff(med) <= 0)),
        "median_strictly_lower_at_max_sigma": bool(med[-1] < med[0]),
    }
    if 0.0 in sig and 50.0 in sig:
        checks["median_flat_up_to_50_ohm"] = bool(
            abs(med[sig.index(50.0)] - med[sig.index(0.0)]) <= 1.0
        )
    return checks


def check_scaling(vary, results):
    """Figs. 6-7 verdicts for both noise configs of one rows/cols sweep."""
    checks = {}
    if vary == "cols":
        for kind, res in results.items():
            p = res.fit.params["exponent"]
            checks["%s_exponent_in_band" % kind] = bool(0.4 <= p <= 0.6)
        checks["systematic_prefactor_gt_cell"] = bool(
            results["systematic"].fit.params["prefactor"]
            > results["cell-specific"].fit.params["prefactor"]
        )
    else:
        for kind, res in results.items():
            sizes = list(res.sizes)
            lo = res.rmse_mean[sizes.index(16)]
            hi = res.rmse_mean[sizes.index(256)]
            checks["%s_flat_rows_within_10pct" % kind] = bool(abs(hi / lo - 1.0) < 0.10)
    return checks
