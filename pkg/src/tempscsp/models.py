"""Analytic model signals and closed-form scale-space signatures.

The signatures give, as a function of the (continuously extended) scale
coordinate, the scale-normalized derivative magnitude that the smoothing
cascade produces at the characteristic point of an idealized input: a causal
temporal peak, its primitive (an onset ramp), or a stationary sine wave.
Their maxima over scale are the analytic references for the scale estimates
produced by the discrete pipeline, and are located here with scalar
maximization in log space so that stage counts of a few hundred remain
well conditioned.

The Gaussian-baseline estimates are fully closed-form: for a Gaussian peak
of variance tau0 the selected scale is 2 gamma / (3 - 2 gamma) tau0, for a
diffuse ramp gamma / (1 - gamma) tau0 (unbounded as gamma -> 1), and for a
sine of angular frequency omega0 the peak over scales of the order-n
response lies at n gamma / omega0^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .kernels import eval_gamma_kernel, eval_gaussian_kernel
from .normalization import reference_gaussian_norm
from .scalespace import ScaleLadder, logarithmic_ladder, smooth

__all__ = [
    "ModelSignal",
    "Signature",
    "signature_peak_uniform",
    "signature_ramp_uniform",
    "signature_ramp_uniform_lp",
    "signature_sine_uniform",
    "signature_sine_uniform_argmax",
    "signature_sine_limit",
    "signature_det_hessian_temporal",
    "peak_postnorm_magnitude",
    "gaussian_baseline_estimates",
    "generate",
    "continuous_argmax",
    "gamma_deriv_lp_norm_quad",
]


@dataclass(frozen=True)
class ModelSignal:
    """Descriptor of an analytic test signal.

    variant is one of 'gamma_peak', 'gamma_onset_ramp', 'sine', 'chirp',
    'gaussian_peak', 'gaussian_ramp', 'limit_kernel_peak',
    'limit_kernel_ramp'.
    """

    variant: str
    mu: float = 1.0
    K0: int = 4
    omega0: float = 1.0
    a: float = 200.0
    b: float = 1000.0
    tau0: float = 1.0
    c: float = math.sqrt(2.0)

    def __post_init__(self):
        known = ("gamma_peak", "gamma_onset_ramp", "sine", "chirp",
                 "gaussian_peak", "gaussian_ramp", "limit_kernel_peak",
                 "limit_kernel_ramp")
        if self.variant not in known:
            raise ValueError(f"unknown model signal {self.variant!r}")
        for name in ("mu", "omega0", "a", "b", "tau0", "c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.K0 < 1:
            raise ValueError("K0 must be >= 1")


@dataclass
class Signature:
    """Sampled scale-space signature with its maximum over scale."""

    scales: np.ndarray
    values: np.ndarray
    argmax: float
    max_value: float


# ---------------------------------------------------------------------------
# Signatures for the uniform (equal time constant) cascade
# ---------------------------------------------------------------------------

def signature_peak_uniform(K0: int, mu: float, gamma: float, K) -> float:
    """Second-order scale-normalized response to a causal temporal peak.

    Evaluated at the temporal maximum of the smoothed peak, as a function of
    the (continuous) stage count K:

        K^gamma mu^(2 gamma - 3) e^(1-K-K0) (K+K0-1)^(K+K0-2) / Gamma(K+K0).
    """
    K = np.asarray(K, dtype=float)
    m = K + K0 - 1.0
    logv = (gamma * np.log(K) + (2.0 * gamma - 3.0) * math.log(mu)
            + (1.0 - K - K0) + (K + K0 - 2.0) * np.log(m) - gammaln(K + K0))
    out = np.exp(logv)
    return float(out) if out.ndim == 0 else out


def signature_ramp_uniform(K0: int, mu: float, gamma: float, K) -> float:
    """First-order scale-normalized response to a causal onset ramp
    (variance-based normalization), at the temporal maximum of the
    derivative:

        (sqrt(K) mu)^gamma (K+K0-1)^(K+K0-1) e^(1-K-K0) / (mu Gamma(K+K0)).
    """
    K = np.asarray(K, dtype=float)
    m = K + K0 - 1.0
    logv = (gamma * (0.5 * np.log(K) + math.log(mu)) + m * np.log(m)
            + (1.0 - K - K0) - math.log(mu) - gammaln(K + K0))
    out = np.exp(logv)
    return float(out) if out.ndim == 0 else out


def gamma_deriv_lp_norm_quad(mu: float, K: float, p: float,
                             order: int = 1) -> float:
    """Lp-norm of the order-n derivative of the cascade kernel by quadrature.

    Supports non-integer K (continuous extension through the gamma
    function); used for the Lp-normalized ramp signature, whose norm factor
    has no tractable closed form.
    """
    tau = K * mu * mu
    t_hi = mu * max(K - 1.0, 0.0) + 25.0 * math.sqrt(tau) + 10.0 * mu

    def deriv(t):
        if t <= 0.0:
            return 0.0
        logu = (K - 1.0) * math.log(t) - t / mu - K * math.log(mu) - gammaln(K)
        u = math.exp(logu)
        if order == 1:
            return u * ((K - 1.0) / t - 1.0 / mu)
        return u * ((K - 1.0) * (K - 2.0) / t ** 2
                    - 2.0 * (K - 1.0) / (mu * t) + 1.0 / mu ** 2)

    pts = [mu * (K - 1.0)] if order == 1 else None
    val, _ = quad(lambda t: abs(deriv(t)) ** p, 0.0, t_hi,
                  points=pts, limit=400)
    return val ** (1.0 / p)


def signature_ramp_uniform_lp(K0: int, mu: float, p: float, K: float) -> float:
    """Lp-normalized first-order response to a causal onset ramp."""
    m = K + K0 - 1.0
    log_lt = m * math.log(m) + (1.0 - K - K0) - math.log(mu) - gammaln(K + K0)
    alpha = reference_gaussian_norm(1, p) / gamma_deriv_lp_norm_quad(mu, K, p, 1)
    return alpha * math.exp(log_lt)


def signature_sine_uniform(omega0: float, mu: float, n: int, gamma: float,
                           K) -> float:
    """Order-n scale-normalized amplitude for a sine through the uniform
    cascade: (K mu^2)^(n gamma / 2) omega0^n / (1 + mu^2 omega0^2)^(K/2)."""
    K = np.asarray(K, dtype=float)
    logv = (0.5 * n * gamma * np.log(K * mu * mu) + n * math.log(omega0)
            - 0.5 * K * math.log1p(mu * mu * omega0 * omega0))
    out = np.exp(logv)
    return float(out) if out.ndim == 0 else out


def signature_sine_uniform_argmax(omega0: float, mu: float, n: int,
                                  gamma: float) -> float:
    """Closed-form argmax K_hat = gamma n / log(1 + mu^2 omega0^2)."""
    return gamma * n / math.log1p(mu * mu * omega0 * omega0)


def signature_det_hessian_temporal(K0: int, mu: float, gamma: float,
                                   K) -> float:
    """Temporal factor of the spatio-temporal Hessian determinant response
    to a causal peak, evaluated at the temporal maximum:

        (mu^2 K)^gamma U(t_max)^3 / (mu^2 (K+K0-1))    (magnitude).
    """
    K = np.asarray(K, dtype=float)
    m = K + K0 - 1.0
    log_u = m * np.log(m) - m - np.log(mu) - gammaln(K + K0)
    logv = (gamma * np.log(mu * mu * K) + 3.0 * log_u
            - 2.0 * math.log(mu) - np.log(m))
    out = np.exp(logv)
    return float(out) if out.ndim == 0 else out


def peak_postnorm_magnitude(K_hat: float, K0: int) -> float:
    """Scale-invariant post-normalized peak magnitude K / (K + K0 - 1)."""
    return K_hat / (K_hat + K0 - 1.0)


# ---------------------------------------------------------------------------
# Signature for the logarithmic (limit kernel) scale distribution
# ---------------------------------------------------------------------------

def signature_sine_limit(omega0: float, tau: float, c: float, n: int,
                         gamma: float, stages: int = 32) -> float:
    """Order-n scale-normalized amplitude for a sine under the limit kernel,
    as a function of the continuous scale variable tau:

        tau^(n gamma / 2) omega0^n prod_k (1 + c^-2k (c^2-1) tau omega0^2)^(-1/2)

    with the infinite product truncated after ``stages`` factors.
    """
    if not c > 1:
        raise ValueError("distribution parameter c must be > 1")
    k = np.arange(1, stages + 1, dtype=float)
    terms = np.log1p(c ** (-2.0 * k) * (c * c - 1.0) * tau * omega0 ** 2)
    logv = (0.5 * n * gamma * math.log(tau) + n * math.log(omega0)
            - 0.5 * float(np.sum(terms)))
    return math.exp(logv)


# ---------------------------------------------------------------------------
# Gaussian-baseline closed forms
# ---------------------------------------------------------------------------

def gaussian_baseline_estimates(model: str, n: int, gamma: float,
                                tau0: float = 1.0, omega0: float = 1.0):
    """Closed-form scale estimate and maximum magnitude for the non-causal
    Gaussian path.

    model is 'peak' (order-2 detection), 'ramp' (order-1) or 'sine'
    (order n).  Returns (tau_hat, max_magnitude); the ramp estimate is
    infinite at gamma = 1 and the corresponding magnitude is for the
    unit-contrast input.
    """
    if model == "peak":
        if not 0 < gamma < 1.5:
            raise ValueError("peak scale estimate requires 0 < gamma < 3/2")
        tau_hat = 2.0 * gamma / (3.0 - 2.0 * gamma) * tau0
        magn = abs(2.0 ** gamma * (2.0 * gamma - 3.0) / (3.0 * tau0)
                   * (gamma * tau0 / (3.0 - 2.0 * gamma)) ** gamma)
        return tau_hat, magn
    if model == "ramp":
        if gamma >= 1.0:
            return math.inf, math.nan
        tau_hat = gamma / (1.0 - gamma) * tau0
        magn = (gamma ** (gamma / 2.0) / math.sqrt(2.0 * math.pi)
                * ((1.0 - gamma) / tau0) ** (0.5 - gamma / 2.0))
        return tau_hat, magn
    if model == "sine":
        tau_hat = n * gamma / omega0 ** 2
        magn = ((gamma * n) ** (gamma * n / 2.0) * math.exp(-gamma * n / 2.0)
                * omega0 ** ((1.0 - gamma) * n))
        return tau_hat, magn
    raise ValueError(f"unknown Gaussian baseline model {model!r}")


# ---------------------------------------------------------------------------
# Sampled model signals
# ---------------------------------------------------------------------------

def _limit_peak_response(tau0: float, c: float, dt: float, n: int) -> np.ndarray:
    ladder = logarithmic_ladder(c=c, tau_max=tau0, K_levels=1,
                                pre_stages=max(DEFAULT_GENERATOR_STAGES - 1, 0))
    pulse = np.zeros(n)
    pulse[0] = 1.0
    return smooth(pulse, ladder, dt).levels[0]


DEFAULT_GENERATOR_STAGES = 24


def generate(model: ModelSignal, dt: float, duration: float) -> np.ndarray:
    """Sample a model signal on a uniform grid t = 0, dt, ..., duration.

    Causal variants are sampled from t = 0; the non-causal Gaussian peak and
    ramp are centred at duration / 2.  The onset ramps are cumulative
    integrals of the corresponding peak samples, and the limit-kernel peak
    is realized by running a discrete impulse through the corresponding
    smoothing cascade.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    v = model.variant
    if v == "gamma_peak":
        return eval_gamma_kernel(t, model.mu, model.K0, 0)
    if v == "gamma_onset_ramp":
        u = eval_gamma_kernel(t, model.mu, model.K0, 0)
        ramp = np.zeros(n)
        ramp[1:] = np.cumsum(0.5 * (u[1:] + u[:-1])) * dt
        return ramp
    if v == "sine":
        return np.sin(model.omega0 * t)
    if v == "chirp":
        return np.sin(np.exp((model.b - t) / model.a))
    if v == "gaussian_peak":
        tc = 0.5 * duration
        return eval_gaussian_kernel(t, model.tau0, tc, 0)
    if v == "gaussian_ramp":
        tc = 0.5 * duration
        from scipy.special import erf
        return 0.5 * (1.0 + erf((t - tc) / math.sqrt(2.0 * model.tau0)))
    if v == "limit_kernel_peak":
        return _limit_peak_response(model.tau0, model.c, dt, n) / dt
    if v == "limit_kernel_ramp":
        resp = _limit_peak_response(model.tau0, model.c, dt, n)
        return np.cumsum(resp)
    raise AssertionError(v)


# ---------------------------------------------------------------------------
# Scalar maximization over scale
# ---------------------------------------------------------------------------

def continuous_argmax(fn, lo: float, hi: float, rel_tol: float = 1e-9):
    """Locate the maximum of a unimodal positive function on [lo, hi].

    Maximizes log(fn) with bounded Brent search; raises if the maximum sits
    on the bracket boundary (non-unimodal or mis-bracketed input), after one
    bracket-widening retry on the upper side.
    """
    def neg_log(x):
        return -math.log(fn(x))

    for attempt in range(2):
        res = minimize_scalar(neg_log, bounds=(lo, hi), method="bounded",
                              options={"xatol": rel_tol * max(hi, 1.0)})
        x = float(res.x)
        span = hi - lo
        if x - lo < 1e-6 * span or hi - x < 1e-6 * span:
            if attempt == 0:
                hi = lo + 4.0 * span
                continue
            raise ValueError("no interior maximum found in bracket")
        return x, float(fn(x))
    raise AssertionError("unreachable")
