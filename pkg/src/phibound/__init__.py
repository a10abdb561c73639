"""Classical modular polynomials, their heights, and explicit bounds on those heights."""

from .modpoly import BivariateIntPoly, HeightReport, compute_phi, height
from .qseries import IntSeries, eval_j, j_expansion

__all__ = [
    "BivariateIntPoly",
    "HeightReport",
    "IntSeries",
    "compute_phi",
    "eval_j",
    "height",
    "j_expansion",
]

__version__ = "0.1.0"
