"""Mapping between the causal limit kernel and the scale-time kernel.

Matching the first- and second-order temporal moments of the two kernel
families gives a closed-form transformation between the limit-kernel
parameters (tau, c) and the scale-time parameters (sigma, delta),

    sigma = sqrt(log(2c / (c+1))),
    delta = (c+1)^2 sqrt(tau) / (2 sqrt(2) sqrt((c-1) c^3)),

valid for c > 1 (which keeps sigma below sqrt(log 2)).  Through this mapping
the zero-crossing structure of the scale-time derivatives yields closed-form
estimates d1, d2 of the temporal widths of the first- and second-order
limit-kernel derivatives, and in turn duration estimates d1/2 and
d2/(2 sqrt(3)) for features selected at scale tau; the normalizing factors
are calibrated so that both duration estimates equal sqrt(tau) in the
Gaussian limit c -> 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ScaleTimeMapping",
    "map_parameters",
    "mapping_round_trip_tau",
    "derivative_widths",
    "duration_estimate",
]


@dataclass(frozen=True)
class ScaleTimeMapping:
    """Limit-kernel parameters with their matched scale-time parameters."""

    tau: float
    c: float
    sigma: float
    delta: float


def map_parameters(tau: float, c: float) -> ScaleTimeMapping:
    """Map limit-kernel parameters (tau, c) to scale-time (sigma, delta)."""
    if not c > 1:
        raise ValueError("distribution parameter c must be > 1")
    if not tau > 0:
        raise ValueError("tau must be positive")
    sigma = math.sqrt(math.log(2.0 * c / (c + 1.0)))
    delta = ((c + 1.0) ** 2 * math.sqrt(tau)
             / (2.0 * math.sqrt(2.0) * math.sqrt((c - 1.0) * c ** 3)))
    return ScaleTimeMapping(tau=tau, c=c, sigma=sigma, delta=delta)


def mapping_round_trip_tau(mapping: ScaleTimeMapping) -> float:
    """Variance recovered from (sigma, delta); equals tau algebraically."""
    s2 = mapping.sigma ** 2
    return mapping.delta ** 2 * math.exp(3.0 * s2) * (math.exp(s2) - 1.0)


def derivative_widths(tau: float, c: float):
    """Width estimates (d1, d2) of the first- and second-order limit-kernel
    derivatives, from the inflection/zero-crossing structure of the matched
    scale-time kernel.  Both scale as sqrt(tau) and approach the Gaussian
    widths 2 sqrt(tau) and 2 sqrt(3 tau) as c -> 1."""
    if not c > 1:
        raise ValueError("distribution parameter c must be > 1")
    if not tau > 0:
        raise ValueError("tau must be positive")
    L = math.log(2.0 * c / (c + 1.0))
    d1 = ((c + 1.0) ** 2.5 / (2.0 * c ** 2 * math.sqrt(c - 1.0))
          * math.sinh(0.5 * math.sqrt(L * (L + 4.0))) * math.sqrt(tau))
    d2 = ((c + 1.0) ** 3 / (2.0 * math.sqrt(2.0) * c ** 2 * math.sqrt(c * (c - 1.0)))
          * math.sinh(math.sqrt(L * (L + 3.0))) * math.sqrt(tau))
    return d1, d2


def duration_estimate(tau_hat: float, c: float, order: int) -> float:
    """Temporal-duration estimate for a feature selected at scale tau_hat
    from an order-1 or order-2 derivative extremum: d1/2 or d2/(2 sqrt 3)."""
    d1, d2 = derivative_widths(tau_hat, c)
    if order == 1:
        return d1 / 2.0
    if order == 2:
        return d2 / (2.0 * math.sqrt(3.0))
    raise ValueError("order must be 1 or 2")
