"""Linear instability of unidirectional steady states of the 2D alpha-Euler equations."""

from .lattice import FlowParams, Orbit, OrbitClass, classify, find_typeI, make_orbit, minimize_orbit
from .dispersion import Eigenpair, build_eigenvector, dispersion_value, find_root, verify_sign_pattern

__all__ = [
    "FlowParams", "Orbit", "OrbitClass", "classify", "find_typeI", "make_orbit",
    "minimize_orbit", "Eigenpair", "build_eigenvector", "dispersion_value", "find_root",
    "verify_sign_pattern",
]
__version__ = "0.1.0"
