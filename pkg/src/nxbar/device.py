"""Resistance-state model of a crossbar cell family.

A device family exposes N nominal resistance states, evenly spaced over
[r_min, r_max]. Two perturbations apply on top: a systematic per-state offset
shared by every cell in the array (a common fabrication defect), and an
independent per-cell, per-state offset (device-to-device variation and noise).
Perturbed states are deliberately neither clamped nor re-sorted.
"""

from dataclasses import dataclass, field, replace

import numpy as np

# 4-state device family used throughout: states 9402 .. 9919.5 ohm, 172.5 ohm apart.
DEFAULT_R_MIN = 9402.0
DEFAULT_R_MAX = 9919.5
DEFAULT_N_STATES = 4

_PROFILE_KEYS = ("n_states", "r_min_ohm", "r_max_ohm", "sigma_nl_ohm", "sigma_perp_ohm", "seed")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise amplitudes in ohms plus the experiment seed.

    sigma_nl: std of the systematic (array-shared) per-state offset.
    sigma_perp: std of the independent per-cell, per-state offset.
    """

    sigma_nl: float = 0.0
    sigma_perp: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_nl < 0 or self.sigma_perp < 0:
            raise ValueError("noise standard deviations must be nonnegative")

    @property
    def sigma_tot(self):
        return float(np.hypot(self.sigma_nl, self.sigma_perp))


@dataclass(frozen=True)
class ResistanceLadder:
    """The N nominal states of a device family plus the current systematic offsets."""

    n_states: int
    r_min: float
    r_max: float
    nominal_states: np.ndarray
    systematic_offsets: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.systematic_offsets is None:
            object.__setattr__(self, "systematic_offsets", np.zeros(self.n_states))
        if len(self.nominal_states) != self.n_states:
            raise ValueError("nominal_states length must equal n_states")
        if len(self.systematic_offsets) != self.n_states:
            raise ValueError("systematic_offsets length must equal n_states")

    @property
    def spacing(self):
        """Distance between successive nominal states (0 for a single state)."""
        if self.n_states < 2:
            return 0.0
        return (self.r_max - self.r_min) / (self.n_states - 1)


def ideal_ladder(n_states, r_min, r_max):
    """Evenly spaced states over [r_min, r_max]; a single state sits at the midpoint."""
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    if r_min > r_max:
        raise ValueError("r_min must not exceed r_max")
    if n_states == 1:
        states = np.array([(r_min + r_max) / 2.0])
    else:
        step = (r_max - r_min) / (n_states - 1)
        states = r_min + step * np.arange(n_states)
    return ResistanceLadder(n_states, float(r_min), float(r_max), states)


def apply_systematic(ladder, noise, rng):
    """Draw a fresh shared per-state offset realization ~ N(0, sigma_nl).

    One draw per state, always consumed from ``rng`` (scaled by sigma_nl, so a
    zero sigma yields exact zeros without disturbing the stream contract).
    """
    offsets = noise.sigma_nl * rng.standard_normal(ladder.n_states)
    return replace(ladder, systematic_offsets=offsets)


def cell_states(ladder, noise, rng):
    """States as seen by one cell: nominal + shared offsets + a fresh per-cell draw.

    Per-cell offsets ~ N(0, sigma_perp), independent between calls (cells).
    Values may be non-monotonic or leave [r_min, r_max]; that is the model.
    """
    eps = noise.sigma_perp * rng.standard_normal(ladder.n_states)
    return ladder.nominal_states + ladder.systematic_offsets + eps


@dataclass(frozen=True)
class DeviceProfile:
    """Bundle of a ladder family and its noise model, as stored in profile files."""

    ladder: ResistanceLadder
    noise: NoiseSpec

    @property
    def seed(self):
        return self.noise.seed


def default_profile():
    """The 4-state family of the reference device, noise-free."""
    return DeviceProfile(
        ladder=ideal_ladder(DEFAULT_N_STATES, DEFAULT_R_MIN, DEFAULT_R_MAX),
        noise=NoiseSpec(0.0, 0.0, seed=1),
    )


def save_profile(path, profile):
    lines = ["# nxbar device profile"]
    values = {
        "n_states": profile.ladder.n_states,
        "r_min_ohm": repr(profile.ladder.r_min),
        "r_max_ohm": repr(profile.ladder.r_max),
        "sigma_nl_ohm": repr(profile.noise.sigma_nl),
        "sigma_perp_ohm": repr(profile.noise.sigma_perp),
        "seed": profile.noise.seed,
    }
    lines += ["%s = %s" % (k, values[k]) for k in _PROFILE_KEYS]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_profile(path):
    """Parse a key/value profile file (``key = value`` lines, # comments)."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError("%s:%d: expected 'key = value', got %r" % (path, lineno, raw.strip()))
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in _PROFILE_KEYS:
                raise ValueError("%s:%d: unknown profile key %r" % (path, lineno, key))
            values[key] = val.strip()
    missing = [k for k in _PROFILE_KEYS if k not in values]
    if missing:
        raise ValueError("%s: missing profile keys: %s" % (path, ", ".join(missing)))
    ladder = ideal_ladder(
        int(values["n_states"]), float(values["r_min_ohm"]), float(values["r_max_ohm"])
    )
    noise = NoiseSpec(
        float(values["sigma_nl_ohm"]), float(values["sigma_perp_ohm"]), int(values["seed"])
    )
    return DeviceProfile(ladder, noise)
