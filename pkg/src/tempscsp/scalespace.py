"""Discrete temporal scale-space construction.

The causal path couples first-order recursive smoothing stages in cascade.
Each stage is a backward-Euler style first-order integrator

    L_k[i] = L_k[i-1] + (1 / (1 + mu_d/dt)) * (L_{k-1}[i] - L_k[i-1]),

which is unconditionally stable, has unit DC gain, and is updatable one
sample at a time from a single state value per stage.  The recursion
constant mu_d is derived from the stage's nominal variance increment
mu^2 through mu_d (mu_d + dt) = mu^2, so that the composed discrete kernel
variance equals the ladder's tau level exactly at any sampling rate (a
stage run at its nominal time constant would add an extra mu*dt of
variance, which biases variance-normalized scale selection at coarse
sampling).  Scale levels are
distributed either uniformly in variance (all time constants equal) or
logarithmically (self-similar ladder with ratio c between successive
standard deviations).  For the logarithmic ladder, the finest exposed level
is itself composed of a configurable number of still-finer stages so that it
approximates the limit of the infinite cascade.

A non-causal Gaussian path (truncated sampled Gaussian FIR, renormalized to
unit sum, reflect boundary handling) provides the zero-delay baseline.

Past samples before the start of a signal are treated as zero for the causal
path; batch and streaming evaluation use the same per-stage recursion state
and therefore agree exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d
from scipy.signal import lfilter

__all__ = [
    "ScaleLadder",
    "build_ladder",
    "uniform_ladder",
    "logarithmic_ladder",
    "TemporalScaleSpace",
    "IntegratorState",
    "smooth",
    "stream_init",
    "stream_step",
    "temporal_derivative",
    "smooth_gaussian",
    "measure_delay",
    "parabolic_refine",
]

DEFAULT_PRE_STAGES = 8


@dataclass(frozen=True)
class ScaleLadder:
    """Discrete set of temporal scale levels and their integrator stages.

    taus holds the exposed per-level variances, level_mus the closed-form
    per-level time constants of the pure ladder.  stage_mus lists every
    primitive integrator actually run, finest first, and stages_per_level[k]
    tells how many leading stages compose exposed level k.
    """

    mode: str
    taus: np.ndarray
    level_mus: np.ndarray
    stage_mus: np.ndarray
    stages_per_level: np.ndarray
    c: float = 0.0
    mu: float = 0.0

    @property
    def n_levels(self) -> int:
        return len(self.taus)

    def log_tau_step(self) -> float:
        """Spacing of the levels in the log tau coordinate (logarithmic mode)."""
        if self.mode != "logarithmic":
            raise ValueError("log tau step is only defined for logarithmic ladders")
        return 2.0 * math.log(self.c)


def uniform_ladder(mu: float, K_levels: int) -> ScaleLadder:
    """Ladder with equal time constants; tau_k = k mu^2."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    if K_levels < 1:
        raise ValueError("K_levels must be >= 1")
    mus = np.full(K_levels, float(mu))
    taus = mu ** 2 * np.arange(1, K_levels + 1, dtype=float)
    return ScaleLadder(mode="uniform", taus=taus, level_mus=mus.copy(),
                       stage_mus=mus, stages_per_level=np.arange(1, K_levels + 1),
                       mu=float(mu))


def logarithmic_ladder(c: float, tau_max: float, K_levels: int,
                       pre_stages: int = DEFAULT_PRE_STAGES) -> ScaleLadder:
    """Self-similar ladder tau_k = c^(2(k-K)) tau_max for k = 1..K.

    The per-level time constants follow the closed forms
    mu_1 = c^(1-K) sqrt(tau_max) and mu_k = c^(k-K-1) sqrt(c^2-1) sqrt(tau_max),
    which make the variances exactly additive.  Internally the first level is
    refined into pre_stages additional finer stages of the same geometric
    progression, so the finest exposed level is approximated by pre_stages + 1
    primitive smoothing steps.
    """
    if not c > 1:
        raise ValueError("distribution parameter c must be > 1")
    if not tau_max > 0:
        raise ValueError("tau_max must be positive")
    if K_levels < 1:
        raise ValueError("K_levels must be >= 1")
    if pre_stages < 0:
        raise ValueError("pre_stages must be >= 0")

    K = K_levels
    levels = np.arange(1, K + 1, dtype=float)
    taus = c ** (2.0 * (levels - K)) * tau_max
    level_mus = np.empty(K)
    level_mus[0] = c ** (1.0 - K) * math.sqrt(tau_max)
    if K > 1:
        level_mus[1:] = (c ** (levels[1:] - K - 1.0)
                         * math.sqrt(c * c - 1.0) * math.sqrt(tau_max))

    # Extended cascade: same progression continued pre_stages levels further
    # down; the exposed levels are its tail.
    total = K + pre_stages
    ext_levels = np.arange(1, total + 1, dtype=float)
    ext_taus = c ** (2.0 * (ext_levels - total)) * taus[-1]
    stage_mus = np.empty(total)
    stage_mus[0] = math.sqrt(ext_taus[0])
    stage_mus[1:] = np.sqrt(np.diff(ext_taus))
    stages = np.arange(pre_stages + 1, total + 1)
    return ScaleLadder(mode="logarithmic", taus=taus, level_mus=level_mus,
                       stage_mus=stage_mus, stages_per_level=stages, c=float(c))


def build_ladder(mode: str, **params) -> ScaleLadder:
    """Construct a ScaleLadder; mode is 'uniform' or 'logarithmic'."""
    if mode == "uniform":
        return uniform_ladder(params["mu"], params["K_levels"])
    if mode == "logarithmic":
        return logarithmic_ladder(params["c"], params["tau_max"],
                                  params["K_levels"],
                                  params.get("pre_stages", DEFAULT_PRE_STAGES))
    raise ValueError(f"unknown ladder mode {mode!r}")


def _stage_coeffs(mu: float, dt: float):
    # The recursion constant is chosen so that the discrete impulse response
    # g (1-g)^i has variance exactly mu^2, keeping the ladder's variance
    # additivity exact in the discrete domain: mu_d (mu_d + dt) = mu^2.
    mu_d = 0.5 * (-dt + math.sqrt(dt * dt + 4.0 * mu * mu))
    g = dt / (dt + mu_d)
    return np.array([g]), np.array([1.0, g - 1.0])


@dataclass
class TemporalScaleSpace:
    """Dense multi-scale representation L[level][time] of one signal."""

    dt: float
    taus: np.ndarray
    levels: np.ndarray
    kind: str
    ladder: ScaleLadder | None = None
    _delays: np.ndarray | None = field(default=None, repr=False)
    _responses: list | None = field(default=None, repr=False)

    @property
    def n_levels(self) -> int:
        return len(self.taus)

    @property
    def n_samples(self) -> int:
        return self.levels.shape[1]

    @property
    def delays(self) -> np.ndarray:
        """Per-level temporal delay estimates (zero for the Gaussian path)."""
        if self._delays is None:
            if self.kind == "gaussian":
                self._delays = np.zeros(self.n_levels)
            else:
                self._delays = np.array(
                    [measure_delay(self.ladder, k, self.dt)
                     for k in range(self.n_levels)])
        return self._delays

    def smoothing_impulse_responses(self) -> list:
        """Discrete smoothing kernels per level (rows sum to ~1)."""
        if self._responses is None:
            if self.kind == "gaussian":
                self._responses = [_sampled_gaussian_fir(tau, self.dt)
                                   for tau in self.taus]
            else:
                self._responses = _ladder_impulse_responses(self.ladder, self.dt)
        return self._responses


def _run_cascade(x: np.ndarray, ladder: ScaleLadder, dt: float) -> np.ndarray:
    out = np.empty((ladder.n_levels, len(x)))
    cur = x
    expose = {s: k for k, s in enumerate(ladder.stages_per_level)}
    for j, mu in enumerate(ladder.stage_mus, start=1):
        b, a = _stage_coeffs(mu, dt)
        cur = lfilter(b, a, cur)
        if j in expose:
            out[expose[j]] = cur
    return out


def smooth(signal, ladder: ScaleLadder, dt: float = 1.0) -> TemporalScaleSpace:
    """Run the causal integrator cascade over a uniformly sampled signal.

    Level k of the result is the input filtered through the first
    stages_per_level[k] stages; the output at index i depends only on inputs
    at indices <= i.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("signal must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal contains non-finite samples")
    if not dt > 0:
        raise ValueError("dt must be positive")
    levels = _run_cascade(x, ladder, dt)
    return TemporalScaleSpace(dt=dt, taus=ladder.taus.copy(), levels=levels,
                              kind="causal", ladder=ladder)


@dataclass
class IntegratorState:
    """Streaming state: one carried value per primitive stage."""

    ladder: ScaleLadder
    dt: float
    zi: list
    n_seen: int = 0


def stream_init(ladder: ScaleLadder, dt: float = 1.0) -> IntegratorState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    return IntegratorState(ladder=ladder, dt=dt,
                           zi=[np.zeros(1) for _ in ladder.stage_mus])


def stream_step(state: IntegratorState, sample: float):
    """Advance all stages by one sample; returns (state, per-level outputs).

    Feeding a signal sample by sample reproduces the batch smooth() output
    exactly, because both paths run the identical per-stage recursion.
    """
    if not isinstance(state, IntegratorState):
        raise TypeError("state must be created with stream_init")
    x = np.array([float(sample)])
    ladder = state.ladder
    outputs = np.empty(ladder.n_levels)
    expose = {s: k for k, s in enumerate(ladder.stages_per_level)}
    cur = x
    for j, mu in enumerate(ladder.stage_mus, start=1):
        b, a = _stage_coeffs(mu, state.dt)
        cur, state.zi[j - 1] = lfilter(b, a, cur, zi=state.zi[j - 1])
        if j in expose:
            outputs[expose[j]] = cur[0]
    state.n_seen += 1
    return state, outputs


def temporal_derivative(space: TemporalScaleSpace, order: int) -> np.ndarray:
    """Causal backward-difference derivative planes of every level.

    Order 1 uses (L[i] - L[i-1]) / dt and order 2 uses
    (L[i] - 2 L[i-1] + L[i-2]) / dt^2; leading boundary entries replicate the
    first index at which the stencil is complete.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    L = space.levels
    if L.shape[1] < 3:
        raise ValueError("signal too short for derivative stencils")
    D = np.empty_like(L)
    if order == 1:
        D[:, 1:] = (L[:, 1:] - L[:, :-1]) / space.dt
        D[:, 0] = D[:, 1]
    else:
        D[:, 2:] = (L[:, 2:] - 2.0 * L[:, 1:-1] + L[:, :-2]) / space.dt ** 2
        D[:, 0] = D[:, 1] = D[:, 2]
    return D


def _sampled_gaussian_fir(tau: float, dt: float, k_cut: float = 6.0) -> np.ndarray:
    """Symmetric sampled Gaussian, truncated at +-k_cut std, unit sum."""
    sigma = math.sqrt(tau) / dt
    radius = max(1, int(math.ceil(k_cut * sigma)))
    x = np.arange(-radius, radius + 1, dtype=float)
    kern = np.exp(-x ** 2 / (2.0 * sigma ** 2))
    return kern / kern.sum()


def smooth_gaussian(signal, tau_list, dt: float = 1.0) -> TemporalScaleSpace:
    """Non-causal Gaussian baseline path (zero temporal delay).

    Each level is an independent FIR convolution of the input with a
    truncated sampled Gaussian at variance tau, renormalized to unit sum;
    boundaries are handled by reflection.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("signal must be a non-empty 1-D sequence")
    taus = np.asarray(tau_list, dtype=float)
    if taus.size == 0 or np.any(taus <= 0) or np.any(np.diff(taus) <= 0):
        raise ValueError("tau_list must be ascending and positive")
    levels = np.empty((len(taus), len(x)))
    firs = []
    for k, tau in enumerate(taus):
        fir = _sampled_gaussian_fir(tau, dt)
        firs.append(fir)
        levels[k] = correlate1d(x, fir, mode="reflect")
    space = TemporalScaleSpace(dt=dt, taus=taus.copy(), levels=levels,
                               kind="gaussian", ladder=None)
    space._responses = firs
    return space


def _ladder_impulse_responses(ladder: ScaleLadder, dt: float,
                              tail: float = 16.0) -> list:
    total_delay = float(np.sum(ladder.stage_mus))
    t_cut = total_delay + tail * math.sqrt(ladder.taus[-1])
    n = int(math.ceil(t_cut / dt)) + 2
    pulse = np.zeros(n)
    pulse[0] = 1.0
    planes = _run_cascade(pulse, ladder, dt)
    return [planes[k] for k in range(ladder.n_levels)]


def parabolic_refine(y_m1: float, y_0: float, y_p1: float) -> float:
    """Sub-sample offset of an extremum from three neighbouring values.

    Fits y(x) = a (x - x0)^2 / 2 + b (x - x0) + c and returns -b/a clamped to
    [-1/2, 1/2]; a degenerate (flat) configuration yields offset 0.
    """
    a = y_p1 - 2.0 * y_0 + y_m1
    b = 0.5 * (y_p1 - y_m1)
    if a == 0.0:
        return 0.0
    return float(np.clip(-b / a, -0.5, 0.5))


def measure_delay(ladder: ScaleLadder, level: int, dt: float = 1.0) -> float:
    """Temporal delay of one level, from the mode of its impulse response.

    Returns dt times the (parabolically refined) argmax of the discrete
    impulse response at the requested exposed level.
    """
    if not 0 <= level < ladder.n_levels:
        raise ValueError("level index out of range")
    resp = _ladder_impulse_responses(ladder, dt)[level]
    i = int(np.argmax(resp))
    if 0 < i < len(resp) - 1:
        i_hat = i + parabolic_refine(resp[i - 1], resp[i], resp[i + 1])
    else:
        i_hat = float(i)
    return i_hat * dt
