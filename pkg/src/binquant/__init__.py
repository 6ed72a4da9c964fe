"""binquant: binary/ternary weight quantization and quantized-SGD training.

Median-based (l1) and mean-based (l2) projectors onto low-bit weight forms,
a Lloyd-style m-bit fitter, relaxed projections with a hardening schedule,
and a small training harness that runs sign-pattern SGD variants on synthetic
classification data.
"""

from .errors import NumericsError, ValidationError
from .projections import (
    Codebook,
    ProjectionResult,
    QuantizedVector,
    assign_codes,
    lloyd_mbit,
    lower_median,
    project_binary_l1,
    project_binary_l2,
    project_ternary_l1,
    project_ternary_l2,
    relax_projection,
    weighted_median,
)

__version__ = "0.1.0"

__all__ = [
    "Codebook",
    "NumericsError",
    "ProjectionResult",
    "QuantizedVector",
    "ValidationError",
    "assign_codes",
    "lloyd_mbit",
    "lower_median",
    "project_binary_l1",
    "project_binary_l2",
    "project_ternary_l1",
    "project_ternary_l2",
    "relax_projection",
    "weighted_median",
    "__version__",
]
