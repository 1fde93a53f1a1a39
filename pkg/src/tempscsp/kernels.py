"""Closed-form temporal smoothing kernels and their derivatives.

Four kernel families are covered:

* the non-causal Gaussian kernel ``g(t; tau, delta)`` with variance ``tau``
  and optional time delay ``delta``,
* the causal gamma-type cascade kernel ``U(t; mu, K)`` obtained by coupling
  ``K`` first-order integrators with equal time constants ``mu`` in cascade,
* the scale-invariant causal limit kernel with logarithmically distributed
  scale levels, represented here through its Fourier transform (an infinite
  product truncated after a configurable number of stages),
* the log-domain scale-time kernel ``h(t; sigma, delta)`` (Gaussian smoothing
  on a logarithmically remapped past), used analytically for width and
  duration estimates.

All evaluations are pure functions of their value arguments.  Time-causal
kernels return exactly 0 for t < 0 (t <= 0 for the scale-time kernel, which
lives on the positive half-axis).  Gamma-function factors are evaluated in
log space so that stage counts of several hundred remain representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

__all__ = [
    "KernelSpec",
    "SampledKernel",
    "eval_gamma_kernel",
    "gamma_kernel_deriv_l1_norm",
    "eval_gaussian_kernel",
    "limit_kernel_fourier",
    "limit_kernel_stages",
    "eval_scale_time_kernel",
    "scale_time_l1_norms",
    "scale_time_scaled_normalized_deriv",
    "sample_gamma_kernel",
]


@dataclass(frozen=True)
class KernelSpec:
    """Descriptor of one temporal smoothing kernel family.

    variant is one of 'gaussian', 'gamma_cascade', 'limit', 'scale_time';
    the remaining fields are interpreted per family and validated on
    construction.
    """

    variant: str
    tau: float = 1.0
    delta: float = 0.0
    mu: float = 1.0
    K: int = 1
    c: float = math.sqrt(2.0)
    truncation_stages: int = 32
    sigma: float = 0.5

    def __post_init__(self):
        if self.variant not in ("gaussian", "gamma_cascade", "limit", "scale_time"):
            raise ValueError(f"unknown kernel variant {self.variant!r}")
        if self.variant in ("gaussian", "limit") and not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.variant == "gamma_cascade":
            if not self.mu > 0:
                raise ValueError("mu must be positive")
            if self.K < 1:
                raise ValueError("K must be >= 1")
        if self.variant == "limit":
            if not self.c > 1:
                raise ValueError("distribution parameter c must be > 1")
            if self.truncation_stages < 1:
                raise ValueError("truncation_stages must be >= 1")
        if self.variant == "scale_time":
            if not self.sigma > 0:
                raise ValueError("sigma must be positive")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")

    @property
    def variance(self) -> float:
        """Composed temporal variance of the kernel."""
        if self.variant == "gamma_cascade":
            return self.K * self.mu ** 2
        if self.variant == "scale_time":
            s2 = self.sigma ** 2
            return self.delta ** 2 * math.exp(3 * s2) * (math.exp(s2) - 1.0)
        return self.tau


@dataclass(frozen=True)
class SampledKernel:
    """Uniformly sampled view of a continuous kernel or derivative kernel."""

    dt: float
    origin: float
    values: np.ndarray

    def lp_norm(self, p: float) -> float:
        """Discrete lp-norm including the dt measure factor."""
        a = np.abs(np.asarray(self.values, dtype=float))
        s = float(np.sum(a ** p) * self.dt)
        if s <= 0.0:
            raise ValueError("degenerate kernel: zero lp mass")
        return s ** (1.0 / p)

    def area(self) -> float:
        return float(np.sum(self.values) * self.dt)


def _check_finite(*vals: float) -> None:
    for v in vals:
        if not math.isfinite(v):
            raise ValueError("non-finite kernel argument")


# ---------------------------------------------------------------------------
# Gamma-type cascade kernel U(t; mu, K) and derivatives
# ---------------------------------------------------------------------------

def eval_gamma_kernel(t, mu: float, K: int, order: int = 0):
    """Evaluate U(t; mu, K) = t^(K-1) exp(-t/mu) / (mu^K Gamma(K)) or its
    first or second temporal derivative.

    The kernel is the impulse response of K first-order integrators with
    equal time constants mu coupled in cascade; it is causal and returns 0
    for t < 0.  Accepts scalar or array t.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    if K < 1:
        raise ValueError("K must be >= 1")
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    t_arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t_arr)):
        raise ValueError("non-finite time argument")
    _check_finite(mu)

    out = np.zeros_like(t_arr)
    pos = t_arr > 0.0
    tp = t_arr[pos]
    if tp.size:
        logu = (K - 1) * np.log(tp) - tp / mu - K * math.log(mu) - gammaln(K)
        u = np.exp(logu)
        if order == 0:
            out[pos] = u
        elif order == 1:
            out[pos] = u * ((K - 1) / tp - 1.0 / mu)
        else:
            out[pos] = u * ((K - 1) * (K - 2) / tp ** 2
                            - 2.0 * (K - 1) / (mu * tp) + 1.0 / mu ** 2)

    # Limits at t = 0 from the term-wise polynomial form; nonzero only for
    # the lowest stage counts where t^(K-1-order) does not vanish.
    zero = t_arr == 0.0
    if np.any(zero):
        v = 0.0
        if order == 0 and K == 1:
            v = 1.0 / mu
        elif order == 1:
            if K == 1:
                v = -1.0 / mu ** 2
            elif K == 2:
                v = 1.0 / mu ** 2
        elif order == 2:
            if K == 1:
                v = 1.0 / mu ** 3
            elif K == 2:
                v = -2.0 / mu ** 3
            elif K == 3:
                v = 1.0 / mu ** 3
        out[zero] = v

    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out)
    return out


def gamma_kernel_deriv_l1_norm(mu: float, K: int, order: int) -> float:
    """Closed-form L1 norm of the order-1 or order-2 derivative of U(.; mu, K).

    Requires K >= 2 for order 1 and K >= 3 for order 2 so that the
    zero-crossing structure underlying the closed forms is well defined.
    Evaluated in log space; for order 2 the two positive addends are combined
    with log-sum-exp to survive stage counts of several hundred.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    if order == 1:
        if K < 2:
            raise ValueError("order-1 L1 norm requires K >= 2")
        logn = (math.log(2.0) + (1 - K) + (K - 1) * math.log(K - 1)
                - math.log(mu) - gammaln(K))
        return math.exp(logn)
    if order == 2:
        if K < 3:
            raise ValueError("order-2 L1 norm requires K >= 3")
        r = math.sqrt(K - 1.0)
        log_a = 2.0 * r + math.log(K + 2.0 * r) + K * math.log(K - r - 1.0)
        log_b = math.log(K - 2.0 * r) + K * math.log(K + r - 1.0)
        lse = max(log_a, log_b) + math.log1p(math.exp(-abs(log_a - log_b)))
        logn = (math.log(2.0) + (-K - r + 1.0) + lse
                - 2.0 * math.log(K - 2.0) - 0.5 * math.log(K - 1.0)
                - 2.0 * math.log(mu) - gammaln(K))
        return math.exp(logn)
    raise ValueError("order must be 1 or 2")


def sample_gamma_kernel(mu: float, K: int, dt: float, order: int = 0,
                        tail: float = 20.0) -> SampledKernel:
    """Sample U or a derivative on [0, t_cut] with t_cut = mode + tail*sqrt(tau)."""
    tau = K * mu ** 2
    t_cut = mu * (K - 1) + tail * math.sqrt(tau)
    n = int(math.ceil(t_cut / dt)) + 1
    t = np.arange(n) * dt
    return SampledKernel(dt=dt, origin=0.0,
                         values=eval_gamma_kernel(t, mu, K, order))


# ---------------------------------------------------------------------------
# Non-causal Gaussian kernel
# ---------------------------------------------------------------------------

def eval_gaussian_kernel(t, tau: float, delta: float = 0.0, order: int = 0):
    """Evaluate the time-delayed Gaussian g(t; tau, delta) or a derivative.

    g = exp(-(t-delta)^2 / (2 tau)) / sqrt(2 pi tau);
    g_t = -(t-delta)/tau * g;  g_tt = ((t-delta)^2 - tau)/tau^2 * g.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    t_arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t_arr)):
        raise ValueError("non-finite time argument")
    x = t_arr - delta
    g = np.exp(-x ** 2 / (2.0 * tau)) / math.sqrt(2.0 * math.pi * tau)
    if order == 0:
        out = g
    elif order == 1:
        out = -x / tau * g
    else:
        out = (x ** 2 - tau) / tau ** 2 * g
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Time-causal limit kernel (Fourier domain)
# ---------------------------------------------------------------------------

def limit_kernel_fourier(omega, tau: float, c: float, truncation_stages: int):
    """Fourier transform of the time-causal limit kernel, truncated after
    ``truncation_stages`` factors of the infinite product

        prod_k 1 / (1 + i c^-k sqrt(c^2-1) sqrt(tau) omega).

    Returns a complex value (array for array omega).  The factors depend on
    omega and tau only through c^-2k tau omega^2, so the transform is exactly
    self-similar under (omega, tau) -> (omega/c, c^2 tau).
    """
    if not c > 1:
        raise ValueError("distribution parameter c must be > 1")
    if not tau > 0:
        raise ValueError("tau must be positive")
    if truncation_stages < 1:
        raise ValueError("truncation_stages must be >= 1")
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("non-finite frequency argument")
    base = math.sqrt(c * c - 1.0) * math.sqrt(tau)
    out = np.ones(w.shape, dtype=complex)
    for k in range(1, truncation_stages + 1):
        out /= 1.0 + 1j * (c ** -k) * base * w
    if np.isscalar(omega) or np.ndim(omega) == 0:
        return complex(out)
    return out


def limit_kernel_stages(tau: float, c: float, omega_max: float,
                        tol: float = 1e-12) -> int:
    """Number of product stages needed so that the first dropped factor
    satisfies c^-2k (c^2-1) tau omega_max^2 < tol."""
    if not c > 1:
        raise ValueError("distribution parameter c must be > 1")
    a = (c * c - 1.0) * tau * omega_max ** 2
    if a <= tol:
        return 1
    k = math.log(a / tol) / (2.0 * math.log(c))
    return max(1, int(math.ceil(k)))


# ---------------------------------------------------------------------------
# Scale-time kernel (Gaussian on a logarithmically remapped past)
# ---------------------------------------------------------------------------

def eval_scale_time_kernel(t, sigma: float, delta: float, order: int = 0):
    """Evaluate the unit-area scale-time kernel or its temporal derivatives.

    h(t; sigma, delta) = exp(-log^2(t/delta)/(2 sigma^2) - sigma^2/2)
                         / (sqrt(2 pi) sigma delta)       for t > 0,

    with h = 0 for t <= 0.  Derivative orders up to 3 are supported; the
    third order exists because its zero-crossings delimit the width of the
    second-order derivative.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if not delta > 0:
        raise ValueError("delta must be positive")
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be 0, 1, 2 or 3")
    t_arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t_arr)):
        raise ValueError("non-finite time argument")
    out = np.zeros_like(t_arr)
    pos = t_arr > 0.0
    tp = t_arr[pos]
    if tp.size:
        s2 = sigma ** 2
        L = np.log(tp / delta)
        core = np.exp(-(L ** 2 + s2 ** 2) / (2.0 * s2))
        root = math.sqrt(2.0 * math.pi)
        if order == 0:
            out[pos] = core / (root * sigma * delta)
        elif order == 1:
            out[pos] = -L * core / (root * delta * sigma ** 3 * tp)
        elif order == 2:
            out[pos] = core * (s2 * L + L ** 2 - s2) / (root * delta * sigma ** 5 * tp ** 2)
        else:
            poly = -3.0 * s2 * L ** 2 + (3.0 * s2 - 2.0 * s2 ** 2) * L - L ** 3 + 3.0 * s2 ** 2
            out[pos] = core * poly / (root * delta * sigma ** 7 * tp ** 3)
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out)
    return out


def scale_time_l1_norms(sigma: float, delta: float, order: int) -> float:
    """Closed-form L1 norms of the first- and second-order temporal
    derivatives of the scale-time kernel."""
    if not sigma > 0 or not delta > 0:
        raise ValueError("sigma and delta must be positive")
    s2 = sigma ** 2
    if order == 1:
        return math.sqrt(2.0 / math.pi) * math.exp(-s2 / 2.0) / (delta * sigma)
    if order == 2:
        q = 0.25 * sigma * math.sqrt(s2 + 4.0)
        return (math.sqrt(2.0 / math.pi) * math.exp(-s2 / 4.0 - 0.5)
                / (delta ** 2 * s2)
                * (sigma * math.sinh(q) + math.sqrt(s2 + 4.0) * math.cosh(q)))
    raise ValueError("order must be 1 or 2")


def scale_time_scaled_normalized_deriv(t, sigma: float, delta: float,
                                       order: int, policy) -> float:
    """Scale-normalized first- or second-order scale-time derivative.

    ``policy`` is a NormalizationSpec: variance-based normalization applies
    tau^(order*gamma/2) with tau the kernel variance; Lp normalization is
    supported for p = 1 and applies G_{order,1} / ||h_t^order||_1.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    raw = eval_scale_time_kernel(t, sigma, delta, order)
    if policy.mode == "variance":
        s2 = sigma ** 2
        tau = delta ** 2 * math.exp(3.0 * s2) * (math.exp(s2) - 1.0)
        return tau ** (order * policy.gamma / 2.0) * raw
    if policy.mode == "lp":
        if abs(policy.p - 1.0) > 1e-12:
            raise ValueError("Lp normalization of scale-time derivatives "
                             "is only supported for p = 1")
        from .normalization import reference_gaussian_norm
        g_ref = reference_gaussian_norm(order, 1.0)
        return g_ref / scale_time_l1_norms(sigma, delta, order) * raw
    raise ValueError(f"unknown normalization mode {policy.mode!r}")


# ---------------------------------------------------------------------------
# Quadrature helpers (oracles shared by the test suite)
# ---------------------------------------------------------------------------

def quad_abs_norm(fn, t_lo: float, t_hi: float, points=None) -> float:
    """Adaptive quadrature of |fn| over [t_lo, t_hi]."""
    val, _ = quad(lambda u: abs(fn(u)), t_lo, t_hi, points=points, limit=400)
    return val
