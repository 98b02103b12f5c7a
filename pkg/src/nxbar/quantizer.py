"""Post-training quantization of a weight matrix onto N equidistant levels.

The level set {a1 + i*d} minimizing the total squared snap error is found by
derivative-free Powell minimization over (a1, d); each weight is then assigned
to its nearest level. A brute-force grid oracle is provided as an independent
cross-check of the optimizer.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from ._powell import PowellResult, powell_minimize  # noqa: F401  (public op)


@dataclass(frozen=True)
class LevelSet:
    """Equidistant quantization levels a1, a1+d, ..., a1+(N-1)*d."""

    a1: float
    d: float
    n_states: int
    converged: bool = True

    def __post_init__(self):
        if self.n_states < 1:
            raise ValueError("n_states must be >= 1")
        if self.d < 0:
            raise ValueError("level spacing must be nonnegative")

    @property
    def levels(self):
        return self.a1 + self.d * np.arange(self.n_states)

    def level(self, i):
        """Value of level i, 1-based."""
        return self.a1 + (i - 1) * self.d


@dataclass(frozen=True)
class QuantizedMatrix:
    """A weight matrix snapped to a LevelSet, with the precomputed row sums.

    row_sums[m] = sum_n values[m, n]; this is the vector the retrieval scaling
    consumes, computed once at quantization time.
    """

    values: np.ndarray
    level_set: LevelSet
    assignment: np.ndarray
    row_sums: np.ndarray

    @property
    def shape(self):
        return self.values.shape


def sse(weights, level_set):
    """Total squared distance of every weight to its nearest level."""
    return kernels.sse_value(
        np.asarray(weights, dtype=np.float64).ravel(),
        level_set.a1,
        level_set.d,
        level_set.n_states,
    )


def assign(weights, level_set):
    """Nearest-level index for every entry (0-based; midpoint ties to the lower index)."""
    return kernels.assign_levels(
        np.asarray(weights, dtype=np.float64), level_set.a1, level_set.d, level_set.n_states
    )


def quantize(weights, n_states):
    """Snap ``weights`` onto the best equidistant N-level set.

    For N = 1 the single level is the mean. If the minimizer exhausts its
    cycle budget the best point found is still used, flagged via
    LevelSet.converged.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.size == 0:
        raise ValueError("weights must be non-empty")
    a1, d, _, converged = kernels.quantize_fit(w.ravel(), n_states)
    level_set = LevelSet(a1, d, n_states, converged=bool(converged))
    idx = assign(w, level_set)
    values = level_set.a1 + idx * level_set.d
    return QuantizedMatrix(
        values=values,
        level_set=level_set,
        assignment=idx,
        row_sums=values.sum(axis=-1),
    )


def brute_force_oracle(weights, n_states, grid_resolution):
    """Exhaustive grid search over (a1, d); independent oracle for quantize.

    a1 spans [min(w), max(w)], d spans [0, 2*(max-min)/max(N-1, 1)], both in
    steps of ``grid_resolution``. Small inputs only (<= 1e3 points per axis).
    """
    w = np.asarray(weights, dtype=np.float64).ravel()
    w_min = float(w.min())
    w_max = float(w.max())
    span = w_max - w_min
    if span == 0.0 or n_states == 1:
        # least-squares single level = mean; grid on a1 alone
        a1_grid = np.arange(w_min, w_max + grid_resolution, grid_resolution)
        if a1_grid.size == 0:
            a1_grid = np.array([w_min])
        errs = ((w[None, :] - a1_grid[:, None]) ** 2).sum(axis=1)
        return LevelSet(float(a1_grid[np.argmin(errs)]), 0.0, n_states)
    a1_grid = np.arange(w_min, w_max + grid_resolution, grid_resolution)
    d_max = 2.0 * span / max(n_states - 1, 1)
    d_grid = np.arange(0.0, d_max + grid_resolution, grid_resolution)
    if a1_grid.size > 1001 or d_grid.size > 1001:
        raise ValueError("grid too fine: oracle is for small inputs only")
    best_sse = np.inf
    best = (w_min, 0.0)
    # exact sse evaluated at every grid point, chunked over a1
    levels_idx = np.arange(n_states)
    for a1 in a1_grid:
        # (n_d, n_levels) level values for all d at this a1
        lv = a1 + d_grid[:, None] * levels_idx[None, :]
        # distance of each weight to nearest level: (n_d, n_w)
        dist = np.abs(w[None, None, :] - lv[:, :, None]).min(axis=1)
        sses = (dist * dist).sum(axis=1)
        k = int(np.argmin(sses))
        if sses[k] < best_sse:
            best_sse = float(sses[k])
            best = (float(a1), float(d_grid[k]))
    return LevelSet(best[0], best[1], n_states)
