"""Nonlocal wave equation on unbounded domains with nonlocal perfectly matched layers."""
from ._accel import HAVE_NUMBA, backend
from .discretize import assemble_system, build_grid
from .integrate import run
from .kernels import exponential_kernel, gaussian_kernel, inhomogeneous_kernel
from .stretch import AbsorberProfile, PmlParams
from .talbot import build_contour, validate_contour

__version__ = "0.1.0"

__all__ = [
    "HAVE_NUMBA",
    "backend",
    "AbsorberProfile",
    "PmlParams",
    "assemble_system",
    "build_contour",
    "build_grid",
    "exponential_kernel",
    "gaussian_kernel",
    "inhomogeneous_kernel",
    "run",
    "validate_contour",
]
