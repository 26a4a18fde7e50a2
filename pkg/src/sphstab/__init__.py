"""Stability of best packings by the simplicial regular polytopes on the sphere."""

__version__ = "0.1.0"

from .densities import build_orthoscheme, delta, simplex_bound
from .polytopes import PolytopeSpec, generate, validate_packing
from .recovery import procrustes_align, recover

__all__ = [
    "__version__",
    "PolytopeSpec",
    "build_orthoscheme",
    "delta",
    "generate",
    "procrustes_align",
    "recover",
    "simplex_bound",
    "validate_packing",
]
