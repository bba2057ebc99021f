"""Minimal immersions in M x R from generalized Weierstrass data."""
from .base import EUCLIDEAN, HYPERBOLIC_DISK, SPHERE, BaseManifold
from .wdata import GridDomain

__version__ = "0.1.0"

__all__ = ["BaseManifold", "EUCLIDEAN", "HYPERBOLIC_DISK", "SPHERE", "GridDomain", "__version__"]
