"""Exact dyadic-cube machinery: lattices, shifted lattices, stopping times,
Carleson families, oscillation and sparse domination, weighted bounds."""

from .cube import Cube, RationalCube
from .dyadic import DyadicRational
from .lattice import CANONICAL, TruncatedLattice

__version__ = "0.1.0"
__all__ = ["Cube", "RationalCube", "DyadicRational", "CANONICAL", "TruncatedLattice", "__version__"]
