"""Temporal scale selection over (time, level) planes.

Detection finds strict local extrema of scale-normalized derivative planes
over a 3x3 neighbourhood in time and scale.  Because causal smoothing delays
coarser levels more than finer ones, one underlying event can produce a
sheared ridge of responses across levels; a post-filtering pass walks along
the adjacent finer and coarser levels to the nearest temporal extremum and
suppresses any response that is dominated by a neighbour level.  Surviving
extrema get a sub-level scale estimate from a parabola through the
neighbouring-level values (in the log tau coordinate for logarithmic
ladders, in the stage-count coordinate for uniform ones) and a
delay-compensated event time from the mode of the smoothing kernel at the
selected scale.

The quasi-quadrature map combines first- and second-order normalized
derivatives into a phase-insensitive energy measure; summing it over time
gives a stationary per-level scale profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .normalization import NormalizedStack
from .scalespace import parabolic_refine

__all__ = [
    "ScaleSpaceExtremum",
    "QuasiQuadratureSpec",
    "detect_extrema",
    "interpolate_scale",
    "post_filter",
    "compensate_delay",
    "strongest_extremum_scale",
    "quasi_quadrature",
    "scale_profile",
    "profile_peaks",
]


@dataclass(frozen=True)
class ScaleSpaceExtremum:
    """One detected extremum over time and temporal scale."""

    time_index: int
    level_index: int
    polarity: str            # 'max' or 'min'
    value: float
    tau_hat: float
    scale_offset: float      # sub-level offset in the ladder coordinate
    time: float
    delay_compensated_time: float
    suppressed: bool = False

    @property
    def sigma_hat(self) -> float:
        return math.sqrt(self.tau_hat)


@dataclass(frozen=True)
class QuasiQuadratureSpec:
    """Parameters of the quasi-quadrature energy measure."""

    Gamma: float = 0.0

    def __post_init__(self):
        if self.Gamma >= 1.0:
            raise ValueError("Gamma must be < 1")

    @property
    def C(self) -> float:
        return 1.0 / math.sqrt((1.0 - self.Gamma) * (2.0 - self.Gamma))


def interpolate_scale(y_m1: float, y_0: float, y_p1: float) -> float:
    """Sub-level offset of an extremum from three neighbouring scale values.

    y_0 must be the extremal value; the offset -b/a of the fitted parabola
    is clamped to [-1/2, 1/2] and a flat configuration yields 0.
    """
    return parabolic_refine(y_m1, y_0, y_p1)


def _tau_at(stack: NormalizedStack, level: float) -> float:
    """Scale value at a fractional level index, in the ladder coordinate."""
    space = stack.space
    taus = space.taus
    k0 = int(np.clip(math.floor(level), 0, len(taus) - 2))
    frac = level - k0
    ladder = space.ladder
    if ladder is not None and ladder.mode == "uniform":
        return float(taus[k0] + frac * (taus[k0 + 1] - taus[k0]))
    # Logarithmic ladders (and the geometric Gaussian baseline grids)
    # interpolate uniformly in log tau.
    return float(math.exp(math.log(taus[k0])
                          + frac * (math.log(taus[k0 + 1]) - math.log(taus[k0]))))


def detect_extrema(stack: NormalizedStack) -> list:
    """Strict local maxima and minima over a 3x3 (time x level) window.

    Boundary levels and boundary time samples are excluded.  Exact ties are
    broken toward the earlier time and the finer level.  Each extremum gets
    a parabolically refined scale estimate and a delay-compensated time.
    """
    P = stack.planes
    n_levels, n_time = P.shape
    if n_levels < 3 or n_time < 3:
        raise ValueError("need at least 3 levels and 3 time samples")

    inner = P[1:-1, 1:-1]
    is_max = np.ones(inner.shape, dtype=bool)
    is_min = np.ones(inner.shape, dtype=bool)
    for dl in (-1, 0, 1):
        for dti in (-1, 0, 1):
            if dl == 0 and dti == 0:
                continue
            nb = P[1 + dl:n_levels - 1 + dl, 1 + dti:n_time - 1 + dti]
            earlier = (dti < 0) or (dti == 0 and dl < 0)
            if earlier:
                is_max &= inner > nb
                is_min &= inner < nb
            else:
                is_max &= inner >= nb
                is_min &= inner <= nb
    is_max &= inner > 0.0
    is_min &= inner < 0.0

    out = []
    for polarity, mask in (("max", is_max), ("min", is_min)):
        ks, its = np.nonzero(mask)
        for k, i in zip(ks + 1, its + 1):
            out.append(_make_extremum(stack, int(k), int(i), polarity))
    out.sort(key=lambda e: (e.time_index, e.level_index))
    return out


def _make_extremum(stack: NormalizedStack, k: int, i: int, polarity: str,
                   neighbor_values=None) -> ScaleSpaceExtremum:
    P = stack.planes
    v = float(P[k, i])
    if neighbor_values is None:
        y_m1, y_p1 = float(P[k - 1, i]), float(P[k + 1, i])
    else:
        y_m1, y_p1 = neighbor_values
    if polarity == "min":
        offset = interpolate_scale(-y_m1, -v, -y_p1)
    else:
        offset = interpolate_scale(y_m1, v, y_p1)
    tau_hat = _tau_at(stack, k + offset)
    t = i * stack.space.dt
    ext = ScaleSpaceExtremum(time_index=i, level_index=k, polarity=polarity,
                             value=v, tau_hat=tau_hat, scale_offset=offset,
                             time=t, delay_compensated_time=t)
    return replace(ext, delay_compensated_time=compensate_delay(ext, stack))


def compensate_delay(extremum: ScaleSpaceExtremum, stack: NormalizedStack) -> float:
    """Event-time estimate t_hat - delay, with the per-level delay taken from
    the mode of the smoothing kernel and interpolated at the refined level."""
    space = stack.space
    delays = space.delays
    pos = extremum.level_index + extremum.scale_offset
    k0 = int(np.clip(math.floor(pos), 0, len(delays) - 2))
    frac = pos - k0
    delay = (1.0 - frac) * delays[k0] + frac * delays[k0 + 1]
    return extremum.time - float(delay)


def _walk_to_temporal_extremum(row: np.ndarray, start: int, direction: int,
                               bound: int, sign: float):
    """Follow sign*row from start in the given direction while it increases.

    Returns the value at the stopping point (a local temporal extremum, the
    walk bound, or the plane boundary).
    """
    i = start
    best = sign * row[i]
    steps = 0
    while steps < bound:
        j = i + direction
        if j < 0 or j >= len(row):
            break
        if sign * row[j] >= best:
            best = sign * row[j]
            i = j
            steps += 1
        else:
            break
    return sign * best, i


def _walk_bounds(stack: NormalizedStack) -> np.ndarray:
    space = stack.space
    bounds = 8.0 * space.delays / space.dt
    return np.maximum(bounds.astype(int), 4)


def post_filter(extrema: list, stack: NormalizedStack) -> list:
    """Suppress multiple responses to one underlying structure.

    For each maximum, search backward in time along the nearest finer level
    and forward along the nearest coarser level as long as the values
    increase monotonically; if the temporal extremum found at either
    neighbouring level is stronger, the current response is suppressed.
    Minima are handled with the polarity reversed.  Walks are bounded by
    eight times the level delay to guarantee termination, and surviving
    extrema are re-interpolated over the neighbour temporal extrema, which
    is robust to the delay shear between adjacent levels.
    """
    P = stack.planes
    n_levels = P.shape[0]
    bounds = _walk_bounds(stack)
    out = []
    for e in extrema:
        sign = 1.0 if e.polarity == "max" else -1.0
        k, i, v = e.level_index, e.time_index, e.value
        suppressed = False
        y_m1 = float(P[k - 1, i])
        y_p1 = float(P[k + 1, i])
        if k - 1 >= 0:
            val, _ = _walk_to_temporal_extremum(P[k - 1], i, -1,
                                                int(bounds[k - 1]), sign)
            y_m1 = val
            if sign * val > sign * v:
                suppressed = True
        if not suppressed and k + 1 < n_levels:
            val, _ = _walk_to_temporal_extremum(P[k + 1], i, +1,
                                                int(bounds[k + 1]), sign)
            y_p1 = val
            if sign * val > sign * v:
                suppressed = True
        if suppressed:
            out.append(replace(e, suppressed=True))
        else:
            out.append(_make_extremum(stack, k, i, e.polarity,
                                      neighbor_values=(y_m1, y_p1)))
    return out


def strongest_extremum_scale(stack: NormalizedStack, polarity: str = "max"):
    """Scale estimate of the single strongest response in the plane stack.

    Takes the per-level temporal extremum, finds the level where it is
    strongest, and interpolates a parabola over the neighbouring levels'
    temporal extrema in the ladder coordinate.  Returns (tau_hat,
    level_index, time_index).
    """
    P = stack.planes if polarity == "max" else -stack.planes
    per_level = P.max(axis=1)
    k = int(np.argmax(per_level))
    if k == 0 or k == len(per_level) - 1:
        raise ValueError("strongest response sits at a ladder boundary; "
                         "extend the scale range")
    offset = interpolate_scale(per_level[k - 1], per_level[k], per_level[k + 1])
    tau_hat = _tau_at(stack, k + offset)
    i = int(np.argmax(P[k]))
    return tau_hat, k, i


def quasi_quadrature(stack1: NormalizedStack, stack2: NormalizedStack,
                     spec: QuasiQuadratureSpec = QuasiQuadratureSpec()) -> np.ndarray:
    """Phase-insensitive energy map (L1^2 + C L2^2) / t^Gamma.

    stack1 and stack2 hold the order-1 and order-2 normalized planes of the
    same scale space.  Time is measured from the first sample, with t = 0
    mapped to one sampling step to keep the Gamma > 0 denominator finite.
    """
    if stack1.spec.order != 1 or stack2.spec.order != 2:
        raise ValueError("quasi_quadrature expects order-1 and order-2 stacks")
    if stack1.planes.shape != stack2.planes.shape:
        raise ValueError("plane stacks have mismatched shapes")
    energy = stack1.planes ** 2 + spec.C * stack2.planes ** 2
    if spec.Gamma == 0.0:
        return energy
    dt = stack1.space.dt
    t = np.arange(stack1.planes.shape[1]) * dt
    t[0] = dt
    return energy / t ** spec.Gamma


def scale_profile(dense_map: np.ndarray) -> np.ndarray:
    """Per-level sums of a dense (level x time) response map."""
    return dense_map.sum(axis=1)


def profile_peaks(profile: np.ndarray, taus: np.ndarray) -> list:
    """Interior local maxima of a per-level profile as (tau_hat, level,
    value) with the scale refined in the log tau coordinate."""
    out = []
    for k in range(1, len(profile) - 1):
        if profile[k] > profile[k - 1] and profile[k] >= profile[k + 1]:
            offset = interpolate_scale(profile[k - 1], profile[k], profile[k + 1])
            log_tau = (math.log(taus[k])
                       + offset * (math.log(taus[min(k + 1, len(taus) - 1)])
                                   - math.log(taus[k])) if offset >= 0 else
                       math.log(taus[k])
                       + offset * (math.log(taus[k]) - math.log(taus[k - 1])))
            out.append((math.exp(log_tau), k, float(profile[k])))
    return out
