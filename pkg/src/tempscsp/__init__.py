"""Time-causal temporal scale-space representations and automatic temporal
scale selection.

Subpackage overview:

* kernels        - closed-form temporal kernels and their derivatives
* scalespace     - discrete scale ladders, recursive smoothing, streaming
* normalization  - variance-based and Lp scale normalization
* selection      - scale-space extrema, post-filtering, quasi quadrature
* models         - analytic model signals and scale-space signatures
* spatiotemporal - separable space-time smoothing and toy video operators
* scaletime      - limit-kernel to scale-time parameter mapping, durations
* cli            - batch/streaming command line front end
"""

from . import (kernels, models, normalization, scalespace, scaletime,
               selection, spatiotemporal)

__all__ = [
    "kernels",
    "models",
    "normalization",
    "scalespace",
    "scaletime",
    "selection",
    "spatiotemporal",
]

__version__ = "0.1.0"
