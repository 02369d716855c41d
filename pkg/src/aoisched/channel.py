"""Wireless channel model: Rayleigh fading, cubic path loss, user mobility,
and non-uniform quantization of channel gains into a finite level set.

Small-scale fading is complex Gaussian, so the power gain |g|^2 is
exponential with mean equal to the fading variance.  The quantizer places
its thresholds at equal-probability quantiles of that exponential (scaled by
a representative mean path loss), which concentrates levels where the
density is highest, and represents each bin by its conditional mean.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChannelConfig:
    fading_variance: float = 1.0
    ref_distance_m: float = 1.0
    cell_radius_m: float = 500.0
    min_distance_m: float = 1.0
    ue_speed_mps: float = 10.0
    pathloss_exp: float = 3.0
    levels: int = 8

    def __post_init__(self):
        if self.fading_variance <= 0:
            raise ValueError("fading_variance must be positive")
        if not 0 < self.ref_distance_m <= self.min_distance_m <= self.cell_radius_m:
            raise ValueError("need 0 < ref_distance <= min_distance <= cell_radius")
        if self.levels < 2:
            raise ValueError("need at least two quantization levels")


@dataclass(frozen=True)
class Quantizer:
    """Ascending thresholds (first 0, last +inf) and one representative per bin."""

    boundaries: np.ndarray
    representatives: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        r = np.asarray(self.representatives, dtype=float)
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "representatives", r)
        if b[0] != 0.0 or not np.isinf(b[-1]):
            raise ValueError("boundaries must start at 0 and end at +inf")
        if np.any(np.diff(b) <= 0):
            raise ValueError("boundaries must be strictly ascending")
        if len(r) != len(b) - 1:
            raise ValueError("need exactly one representative per bin")
        if np.any(r < b[:-1]) or np.any(r[:-1] >= b[1:-1]):
            raise ValueError("each representative must lie inside its bin")

    @property
    def num_levels(self) -> int:
        return len(self.representatives)


@dataclass(frozen=True)
class ChannelState:
    """Quantized gain: 1-based level index plus the bin representative."""

    level: np.ndarray
    gain: np.ndarray


def sample_fading(rng: np.random.Generator, variance: float, size=None):
    """Power gain |g|^2 of zero-mean complex Gaussian fading: Exp(mean=variance)."""
    if variance <= 0:
        raise ValueError("fading variance must be positive")
    out = rng.exponential(variance, size=size)
    return out if size is not None else float(out)


def channel_gain(fading_power, distance_m, ref_distance_m, pathloss_exp: float = 3.0):
    """Linear channel power gain: fading times (d0/d)^exp.

    Distances inside the reference distance are clamped to it (unit path
    loss) with a diagnostic, since the cubic law is not meant that close in.
    """
    distance_m = np.asarray(distance_m, dtype=float)
    if np.any(distance_m < ref_distance_m):
        log.warning("distance below reference distance, clamping to %.3g m", ref_distance_m)
        distance_m = np.maximum(distance_m, ref_distance_m)
    return np.asarray(fading_power, dtype=float) * (ref_distance_m / distance_m) ** pathloss_exp


def mean_cubic_pathloss(ref_distance_m: float, min_distance_m: float, max_distance_m: float) -> float:
    """Average of (d0/d)^3 for area-uniform placement in an annulus.

    Radial density 2d/(r_max^2 - r_min^2) integrated against (d0/d)^3 gives
    2 d0^3 (1/r_min - 1/r_max) / (r_max^2 - r_min^2).
    """
    r0 = max(min_distance_m, ref_distance_m)
    r1 = max_distance_m
    if not r0 < r1:
        raise ValueError("need min_distance < max_distance")
    return 2.0 * ref_distance_m**3 * (1.0 / r0 - 1.0 / r1) / (r1**2 - r0**2)


def build_quantizer(levels: int, fading_variance: float, mean_pathloss: float) -> Quantizer:
    """Equal-probability quantizer for exponentially distributed gains.

    The gain |h|^2 is modeled Exp(mean = fading_variance * mean_pathloss).
    Thresholds are the k/L quantiles -mean*ln(1 - k/L); each bin then carries
    probability exactly 1/L.  The representative is the conditional mean
    E[X | a <= X < b] = ((a+m) e^{-a/m} - (b+m) e^{-b/m}) / (e^{-a/m} - e^{-b/m}),
    which for the open last bin reduces to a + m.
    """
    if levels < 2:
        raise ValueError("need at least two levels")
    mean = fading_variance * mean_pathloss
    if mean <= 0:
        raise ValueError("gain distribution mean must be positive")
    k = np.arange(levels + 1, dtype=float)
    boundaries = np.empty(levels + 1)
    boundaries[:-1] = -mean * np.log1p(-k[:-1] / levels)
    boundaries[-1] = np.inf

    lo = boundaries[:-1]
    hi = boundaries[1:]
    reps = np.empty(levels)
    with np.errstate(invalid="ignore"):
        w_lo = np.exp(-lo / mean)
        w_hi = np.where(np.isinf(hi), 0.0, np.exp(-np.minimum(hi, 1e300) / mean))
        num = (lo + mean) * w_lo - np.where(np.isinf(hi), 0.0, (hi + mean) * w_hi)
        reps = num / (w_lo - w_hi)
    reps[-1] = lo[-1] + mean
    return Quantizer(boundaries=boundaries, representatives=reps)


def quantize_gain(gain, quantizer: Quantizer) -> ChannelState:
    """Map nonnegative gains to their half-open bin [a_i, a_{i+1})."""
    gain = np.asarray(gain, dtype=float)
    if np.any(gain < 0):
        raise ValueError("gains must be nonnegative")
    idx = np.searchsorted(quantizer.boundaries, gain, side="right") - 1
    idx = np.clip(idx, 0, quantizer.num_levels - 1)
    return ChannelState(level=idx + 1, gain=quantizer.representatives[idx])


def place_ues(rng: np.random.Generator, count: int, cell_radius_m: float,
              min_distance_m: float = 0.0) -> np.ndarray:
    """Area-uniform positions in the annulus [min_distance, cell_radius], (count, 2)."""
    u = rng.uniform(size=count)
    radius = np.sqrt(u * (cell_radius_m**2 - min_distance_m**2) + min_distance_m**2)
    angle = rng.uniform(0.0, 2.0 * np.pi, size=count)
    return np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)


def move_ue(position: np.ndarray, speed_mps: float, slot_s: float,
            rng: np.random.Generator, cell_radius_m: float) -> np.ndarray:
    """One mobility step: fixed length, uniform random heading, reflected
    radially at the cell boundary."""
    position = np.asarray(position, dtype=float)
    single = position.ndim == 1
    pos = position[None, :] if single else position.copy()
    heading = rng.uniform(0.0, 2.0 * np.pi, size=pos.shape[0])
    step = speed_mps * slot_s
    pos = pos + step * np.stack([np.cos(heading), np.sin(heading)], axis=1)
    radius = np.linalg.norm(pos, axis=1)
    outside = radius > cell_radius_m
    if np.any(outside):
        folded = (2.0 * cell_radius_m - radius[outside]) / radius[outside]
        pos[outside] *= folded[:, None]
    return pos[0] if single else pos
