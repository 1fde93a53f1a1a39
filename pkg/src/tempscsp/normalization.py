"""Scale-normalized temporal derivatives.

Two normalization policies are supported:

* variance-based normalization, which multiplies an order-n derivative plane
  at variance tau by tau^(n*gamma/2),
* Lp normalization, which rescales the effective derivative kernel at each
  level so that its discrete lp-norm equals the Lp-norm G_{n,p} of the
  corresponding Gaussian derivative kernel at the reference scale tau = 1.

The two policies are linked by the bijection p = 1 / (1 + n (1 - gamma)).
Discrete lp-norms include the sampling-step measure factor so that they
converge to the continuous Lp-norms as the sampling step tends to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .kernels import SampledKernel, eval_gaussian_kernel
from .scalespace import TemporalScaleSpace, temporal_derivative

__all__ = [
    "NormalizationSpec",
    "gamma_to_p",
    "p_to_gamma",
    "variance_prefactor",
    "reference_gaussian_norm",
    "lp_prefactor",
    "normalize_plane",
    "NormalizedStack",
]


@dataclass(frozen=True)
class NormalizationSpec:
    """Normalization policy for order-n temporal derivatives.

    mode is 'variance' (free exponent gamma) or 'lp' (exponent p in (0, 1]).
    """

    mode: str
    order: int
    gamma: float = 1.0
    p: float = 1.0

    def __post_init__(self):
        if self.mode not in ("variance", "lp"):
            raise ValueError(f"unknown normalization mode {self.mode!r}")
        if self.order < 0:
            raise ValueError("derivative order must be >= 0")
        if self.mode == "lp" and not 0.0 < self.p <= 1.0:
            raise ValueError("p must lie in (0, 1]")

    @classmethod
    def variance(cls, order: int, gamma: float) -> "NormalizationSpec":
        return cls(mode="variance", order=order, gamma=gamma)

    @classmethod
    def lp(cls, order: int, p: float) -> "NormalizationSpec":
        return cls(mode="lp", order=order, p=p)


def gamma_to_p(n: int, gamma: float) -> float:
    """Exponent p of the Lp normalization matching variance exponent gamma."""
    if n < 1:
        raise ValueError("derivative order n must be >= 1")
    den = 1.0 + n * (1.0 - gamma)
    if den <= 0.0:
        raise ValueError(f"gamma = {gamma} has no matching p for n = {n}")
    return 1.0 / den


def p_to_gamma(n: int, p: float) -> float:
    """Inverse of gamma_to_p."""
    if n < 1:
        raise ValueError("derivative order n must be >= 1")
    if p <= 0.0:
        raise ValueError("p must be positive")
    return 1.0 - (1.0 / p - 1.0) / n


def variance_prefactor(tau: float, n: int, gamma: float) -> float:
    """Variance-based scale-normalization factor tau^(n*gamma/2)."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return tau ** (n * gamma / 2.0)


@lru_cache(maxsize=None)
def _reference_gaussian_norm_cached(n: int, p: float) -> float:
    # Zero crossings of the derivative kernels at tau = 1 bound the smooth
    # pieces of |g^(n)|^p; quad needs them as explicit break points.
    if n == 1:
        points = (0.0,)
    else:
        points = (-1.0, 1.0)
    val, _ = quad(lambda t: abs(eval_gaussian_kernel(t, 1.0, 0.0, n)) ** p,
                  -30.0, 30.0, points=list(points), limit=400)
    return val ** (1.0 / p)


def reference_gaussian_norm(n: int, p: float) -> float:
    """Lp-norm G_{n,p} of the order-n Gaussian derivative kernel at tau = 1.

    Computed once by adaptive quadrature and cached.  At the gamma-matched
    exponent p this norm is independent of scale, so tau = 1 is merely a
    convenient reference.
    """
    if n not in (1, 2):
        raise ValueError("only derivative orders 1 and 2 are calibrated")
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    return _reference_gaussian_norm_cached(n, float(p))


def lp_prefactor(discrete_kernel: SampledKernel, n: int, p: float) -> float:
    """Normalization factor alpha_{n,p} = G_{n,p} / lp-norm(kernel).

    ``discrete_kernel`` must hold density-unit samples of the effective
    impulse response of the level smoothing composed with the order-n
    derivative stencil.
    """
    return reference_gaussian_norm(n, p) / discrete_kernel.lp_norm(p)


_STENCILS = {1: np.array([1.0, -1.0]), 2: np.array([1.0, -2.0, 1.0])}


def effective_derivative_kernels(space: TemporalScaleSpace, order: int):
    """Per-level density-unit samples of smoothing + derivative stencil."""
    responses = space.smoothing_impulse_responses()
    stencil = _STENCILS[order]
    scale = space.dt ** (order + 1)
    return [SampledKernel(dt=space.dt, origin=0.0,
                          values=np.convolve(r, stencil) / scale)
            for r in responses]


def level_prefactors(space: TemporalScaleSpace, spec: NormalizationSpec) -> np.ndarray:
    """Scale-normalization factor per exposed level for the given policy."""
    if spec.mode == "variance":
        return np.array([variance_prefactor(tau, spec.order, spec.gamma)
                         for tau in space.taus])
    kernels = effective_derivative_kernels(space, spec.order)
    return np.array([lp_prefactor(k, spec.order, spec.p) for k in kernels])


@dataclass
class NormalizedStack:
    """Scale-normalized derivative planes plus the policy that produced them."""

    planes: np.ndarray
    spec: NormalizationSpec
    space: TemporalScaleSpace
    prefactors: np.ndarray


def normalize_plane(space: TemporalScaleSpace, spec: NormalizationSpec) -> NormalizedStack:
    """Compute scale-normalized derivative planes for every level.

    The order-n derivative planes are obtained with the causal backward
    difference stencils and multiplied by the per-level normalization factor
    of the requested policy.
    """
    if spec.order not in (1, 2):
        raise ValueError("normalize_plane supports derivative orders 1 and 2")
    deriv = temporal_derivative(space, spec.order)
    pref = level_prefactors(space, spec)
    planes = deriv * pref[:, None]
    return NormalizedStack(planes=planes, spec=spec, space=space, prefactors=pref)
