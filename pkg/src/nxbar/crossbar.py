"""Analog crossbar MVM: encode, program, accumulate, retrieve.

Inputs are linearly encoded as currents (I = a_i*x + b_i) and quantized
weights as resistances (R = a_r*A + b_r); each cell contributes R*I to its
row voltage, and the digital result is recovered exactly from the summed
voltages by the closed-form rescaling

    y[m] = (V[m] - b_r * sum(I) - a_r * b_i * row_sum_A[m]) / (a_r * a_i)

which inverts the two encodings without touching the array. Matrices larger
than the physical array are multiplexed tile by tile and the retrieved
partial results accumulate digitally.

All quantities are SI internally (amperes, ohms, volts).
"""

import math
from dataclasses import dataclass

import numpy as np

from .device import ResistanceLadder, apply_systematic, cell_states

# Input current bounds used throughout: 0 to 0.5 mA for x in [0, 1].
I_MAX_AMPS = 5e-4

PAD_LEVEL = -1  # assignment sentinel for zero-padded cells of ragged tiles


@dataclass(frozen=True)
class EncodingParams:
    """The four linear constants tying digital values to currents and resistances."""

    a_i: float
    b_i: float = 0.0
    a_r: float = 1.0
    b_r: float = 0.0

    def __post_init__(self):
        if self.a_i == 0.0 or self.a_r == 0.0:
            raise ValueError("a_i and a_r must be nonzero (retrieval divides by a_r*a_i)")


@dataclass(frozen=True)
class CrossbarTile:
    """A programmed physical array: per-cell resistances plus the level map used."""

    resistances: np.ndarray
    programmed_levels: np.ndarray

    @property
    def rows(self):
        return self.resistances.shape[0]

    @property
    def cols(self):
        return self.resistances.shape[1]


@dataclass(frozen=True)
class MvmResult:
    y_tilde: np.ndarray
    voltages: np.ndarray
    sub_op_count: int


def input_encoding(x_min=0.0, x_max=1.0, i_max=I_MAX_AMPS):
    """(a_i, b_i) mapping [x_min, x_max] onto [0, i_max] amperes."""
    if not x_max > x_min:
        raise ValueError("calibration range must satisfy x_max > x_min")
    a_i = i_max / (x_max - x_min)
    return a_i, -a_i * x_min


def weight_to_resistance_map(level_set, ladder, x_min=0.0, x_max=1.0):
    """Unique linear map sending level 1 -> r_min and level N -> r_max.

    Degenerate level sets (single state or zero spacing) map every level to
    the ladder midpoint with a_r = 1. The returned EncodingParams also carries
    the input-side constants for the given calibration range.
    """
    a_i, b_i = input_encoding(x_min, x_max)
    if level_set.n_states == 1 or level_set.d == 0.0:
        mid = 0.5 * (ladder.r_min + ladder.r_max)
        return EncodingParams(a_i=a_i, b_i=b_i, a_r=1.0, b_r=mid - level_set.a1)
    a_r = (ladder.r_max - ladder.r_min) / ((level_set.n_states - 1) * level_set.d)
    b_r = ladder.r_min - a_r * level_set.a1
    return EncodingParams(a_i=a_i, b_i=b_i, a_r=a_r, b_r=b_r)


def encode_input(x, params):
    """Current vector I = a_i*x + b_i."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("inputs must be finite")
    return params.a_i * x + params.b_i


def program_tile(levels, level_set, params, ladder=None, noise=None, rng=None):
    """Program one physical tile from a block of level indices.

    ``levels`` holds 0-based level indices, PAD_LEVEL marking zero-padded
    cells. Each real cell realizes the full perturbed state list of the
    mapped ladder (nominal states a_r*level + b_r, plus the shared per-state
    offsets of ``ladder``, plus a fresh per-cell draw) and is programmed to
    its level's entry, so cells are independent. Pad cells sit at exactly
    a_r*0 + b_r and draw nothing. With no noise arguments the tile is the
    pure linear map.
    """
    levels = np.asarray(levels)
    lv = np.where(levels == PAD_LEVEL, 0, levels)
    a_vals = np.where(levels == PAD_LEVEL, 0.0, level_set.a1 + lv * level_set.d)
    resist = params.a_r * a_vals + params.b_r
    if ladder is not None:
        sys_off = np.where(levels == PAD_LEVEL, 0.0, ladder.systematic_offsets[lv])
        resist = resist + sys_off
    if noise is not None and rng is not None:
        mapped_states = params.a_r * level_set.levels + params.b_r
        mapped = ResistanceLadder(
            n_states=level_set.n_states,
            r_min=float(mapped_states.min()),
            r_max=float(mapped_states.max()),
            nominal_states=mapped_states,
            systematic_offsets=(
                ladder.systematic_offsets if ladder is not None else None
            ),
        )
        out = np.array(resist)
        rows, cols = levels.shape
        for r in range(rows):
            for c in range(cols):
                if levels[r, c] == PAD_LEVEL:
                    continue
                states = cell_states(mapped, noise, rng)
                out[r, c] = states[levels[r, c]]
        resist = out
    return CrossbarTile(resistances=resist, programmed_levels=levels)


def simulate_tile(tile, currents):
    """Row voltages V[m] = sum_n R[m, n] * I[n]."""
    currents = np.asarray(currents, dtype=np.float64)
    if currents.shape != (tile.cols,):
        raise ValueError(
            "current vector length %d does not match tile columns %d"
            % (currents.size, tile.cols)
        )
    return tile.resistances @ currents


def retrieve(voltages, currents, a_row_sums, params):
    """Digital MVM result recovered from the measured voltages."""
    scale = params.a_r * params.a_i
    if scale == 0.0:
        raise ValueError("degenerate encoding: a_r * a_i must be nonzero")
    voltages = np.asarray(voltages, dtype=np.float64)
    a_row_sums = np.asarray(a_row_sums, dtype=np.float64)
    total_i = np.asarray(currents, dtype=np.float64).sum()
    return (voltages - params.b_r * total_i - params.a_r * params.b_i * a_row_sums) / scale


def tile_count(m, n, tile_rows, tile_cols):
    """Number of tile sub-operations covering an m x n matrix."""
    if min(m, n, tile_rows, tile_cols) < 1:
        raise ValueError("dimensions must be positive")
    return math.ceil(m / tile_rows) * math.ceil(n / tile_cols)


def program_matrix(q, params, tile_rows, tile_cols, ladder=None, noise=None, rng=None,
                   systematic_redraw="per_call"):
    """Program every tile of a quantized matrix; returns the tile grid.

    systematic_redraw: "per_call" keeps one shared-offset realization for all
    tiles (a single physical array reprogrammed in place); "per_tile" redraws
    the shared per-state offsets before each tile program (each sub-operation
    sees an independent systematic realization).
    """
    m, n = q.shape
    n_rb = math.ceil(m / tile_rows)
    n_cb = math.ceil(n / tile_cols)
    tiles = []
    lad = ladder
    for rb in range(n_rb):
        row = []
        for cb in range(n_cb):
            if ladder is not None and noise is not None and rng is not None \
                    and systematic_redraw == "per_tile":
                lad = apply_systematic(ladder, noise, rng)
            blk = np.full((tile_rows, tile_cols), PAD_LEVEL, dtype=np.int64)
            r0, c0 = rb * tile_rows, cb * tile_cols
            r1, c1 = min(r0 + tile_rows, m), min(c0 + tile_cols, n)
            blk[: r1 - r0, : c1 - c0] = q.assignment[r0:r1, c0:c1]
            row.append(program_tile(blk, q.level_set, params, lad, noise, rng))
        tiles.append(row)
    return tiles


def matvec_programmed(tiles, q, x, params, trace=None):
    """Run one input vector through an already-programmed tile grid."""
    m, n = q.shape
    tile_rows = tiles[0][0].rows
    tile_cols = tiles[0][0].cols
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise ValueError("input length %d does not match matrix columns %d" % (x.size, n))
    x_pad = np.zeros(len(tiles[0]) * tile_cols)
    x_pad[:n] = x
    currents = encode_input(x_pad, params)
    y = np.zeros(m)
    volts_raw = np.zeros(m)
    for rb, tile_row in enumerate(tiles):
        r0 = rb * tile_rows
        r1 = min(r0 + tile_rows, m)
        for cb, tile in enumerate(tile_row):
            c0 = cb * tile_cols
            c1 = min(c0 + tile_cols, n)
            i_blk = currents[c0:c0 + tile_cols]
            volts = simulate_tile(tile, i_blk)
            # row sums of the true A block (pads contribute exactly zero)
            rows_a = np.zeros(tile_rows)
            rows_a[: r1 - r0] = q.values[r0:r1, c0:c1].sum(axis=1)
            part = retrieve(volts, i_blk, rows_a, params)
            y[r0:r1] += part[: r1 - r0]
            volts_raw[r0:r1] += volts[: r1 - r0]
            if trace is not None:
                trace.append(
                    {
                        "row_block": rb,
                        "col_block": cb,
                        "currents_a": i_blk.tolist(),
                        "voltages_v": volts.tolist(),
                        "partial": part[: r1 - r0].tolist(),
                    }
                )
    return MvmResult(y_tilde=y, voltages=volts_raw, sub_op_count=len(tiles) * len(tiles[0]))


def matvec_programmed_batch(tiles, q, xs, params):
    """Vectorized matvec_programmed over a batch of input vectors (rows of xs)."""
    m, n = q.shape
    tile_rows = tiles[0][0].rows
    tile_cols = tiles[0][0].cols
    xs = np.asarray(xs, dtype=np.float64)
    batch = xs.shape[0]
    x_pad = np.zeros((batch, len(tiles[0]) * tile_cols))
    x_pad[:, :n] = xs
    currents = encode_input(x_pad, params)
    scale = params.a_r * params.a_i
    ys = np.zeros((batch, m))
    for rb, tile_row in enumerate(tiles):
        r0 = rb * tile_rows
        r1 = min(r0 + tile_rows, m)
        for cb, tile in enumerate(tile_row):
            c0 = cb * tile_cols
            c1 = min(c0 + tile_cols, n)
            i_blk = currents[:, c0:c0 + tile_cols]
            volts = i_blk @ tile.resistances.T
            rows_a = np.zeros(tile_rows)
            rows_a[: r1 - r0] = q.values[r0:r1, c0:c1].sum(axis=1)
            part = (
                volts - params.b_r * i_blk.sum(axis=1)[:, None]
                - params.a_r * params.b_i * rows_a[None, :]
            ) / scale
            ys[:, r0:r1] += part[:, : r1 - r0]
    return ys


def crossbar_matvec(q, x, tile_rows, tile_cols, params, ladder=None, noise=None, rng=None,
                    systematic_redraw="per_call", trace=None):
    """Multiplexed MVM: program every tile, then simulate and retrieve per tile.

    Ragged edge blocks are zero-padded; pad weights are exactly 0 in A-space
    and drop out of the retrieval identically, so tiling is transparent.
    """
    tiles = program_matrix(
        q, params, tile_rows, tile_cols, ladder, noise, rng, systematic_redraw
    )
    return matvec_programmed(tiles, q, x, params, trace=trace)
