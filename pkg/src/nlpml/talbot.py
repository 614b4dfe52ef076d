"""Talbot contour quadrature for the inverse Laplace transform.

The contour is s(theta) = omega + mu*(theta*cot(theta) + i*nu*theta) on
(-pi, pi), sampled at the midpoint grid theta_j = -pi + (pi/m)(2j - 1).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kernels import KernelKind
from .stretch import PmlParams

__all__ = [
    "TalbotContour",
    "ContourDiagnostics",
    "build_contour",
    "inverse_laplace",
    "validate_contour",
    "contour_point",
]


@dataclass(frozen=True)
class TalbotContour:
    omega: float
    mu: float
    nu: float
    m: int
    thetas: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray

    def conjugate_pairs(self) -> bool:
        """True when node j and node m+1-j are complex conjugates."""
        return self.m % 2 == 0 and np.allclose(self.nodes[::-1], np.conj(self.nodes), rtol=1e-15, atol=0)


def _theta_cot(theta):
    theta = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(theta == 0.0, 1.0, theta / np.tan(theta))
    return out


def contour_point(omega, mu, nu, theta):
    return omega + mu * (_theta_cot(theta) + 1j * nu * np.asarray(theta))


def build_contour(omega: float, mu: float, nu: float, m: int) -> TalbotContour:
    if int(m) != m or m < 2:
        raise ValueError(f"m must be an integer >= 2, got {m!r}")
    if not (mu > 0 and nu > 0):
        raise ValueError("mu and nu must be positive")
    m = int(m)
    j = np.arange(1, m + 1)
    theta = -np.pi + (np.pi / m) * (2 * j - 1)
    # mirror exactly so nodes m+1-j and j are bitwise conjugates
    theta[m - m // 2:] = -theta[: m // 2][::-1]
    nodes = omega + mu * (_theta_cot(theta) + 1j * nu * theta)
    # s'(theta)/mu = cot - theta/sin^2 + i nu, which tends to i nu at theta = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        dreal = np.where(theta == 0.0, 0.0, 1.0 / np.tan(theta) - theta / np.sin(theta) ** 2)
    ds = mu * (dreal + 1j * nu)
    weights = ds / (m * 1j)
    return TalbotContour(float(omega), float(mu), float(nu), m, theta, nodes, weights)


def inverse_laplace(contour: TalbotContour, F: Callable, t: float) -> complex:
    """Trapezoidal Talbot sum  sum_j w_j F(xi_j) exp(xi_j t)."""
    if not t > 0:
        raise ValueError("t must be positive")
    vals = np.asarray(F(contour.nodes), dtype=complex)
    return complex(np.sum(contour.weights * vals * np.exp(contour.nodes * t)))


@dataclass(frozen=True)
class ContourDiagnostics:
    enclosure_ok: bool
    stability_ok: bool
    sufficient_ok: bool
    worst_margin: float
    kind: KernelKind

    @property
    def passed(self) -> bool:
        if self.kind is KernelKind.EXPONENTIAL:
            return self.enclosure_ok
        if self.kind is KernelKind.CUSTOM:
            return self.enclosure_ok and self.stability_ok
        return self.stability_ok

    def lines(self) -> list[str]:
        return [
            f"kernel kind        : {self.kind.name.lower()}",
            f"enclosure_ok       : {self.enclosure_ok}",
            f"stability_ok       : {self.stability_ok}",
            f"sufficient_ok      : {self.sufficient_ok} (informational)",
            f"worst_margin       : {self.worst_margin:.6g}",
            f"passed             : {self.passed}",
        ]


def _enclosure_margin(contour: TalbotContour, z: complex, samples: int = 2048) -> float:
    """Signed margin of the branch-point disk |s + z/2| <= |z|/2 against the contour.

    Nodes must lie strictly outside the disk, and the disk must sit inside the
    contour: for a boundary point (x0, y0) the contour branch at the same
    height, theta0 = y0/(mu*nu), has to pass to the right of x0.
    """
    c = -z / 2.0
    r = abs(z) / 2.0
    node_margin = np.min(np.abs(contour.nodes - c)) - r
    phi = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    pts = c + r * np.exp(1j * phi)
    height = contour.mu * contour.nu * np.pi
    if np.any(np.abs(pts.imag) >= height):
        return min(node_margin, height - np.max(np.abs(pts.imag)))
    theta0 = pts.imag / (contour.mu * contour.nu)
    re_gamma = contour.omega + contour.mu * _theta_cot(theta0)
    return float(min(node_margin, np.min(re_gamma - pts.real)))


def validate_contour(contour: TalbotContour, pml: PmlParams, kernel_kind: KernelKind) -> ContourDiagnostics:
    """Check the contour against the kernel's analyticity/stability region."""
    z = pml.z
    if z == 0:
        return ContourDiagnostics(True, True, True, np.inf, kernel_kind)
    enc = _enclosure_margin(contour, z)
    zeta = z / contour.nodes
    stab = float(np.min(np.minimum(zeta.real - zeta.imag, zeta.real + zeta.imag)) + 1.0)
    sufficient = bool(np.all(np.sqrt(2.0) * abs(z) <= np.abs(contour.nodes)))
    if kernel_kind is KernelKind.EXPONENTIAL:
        worst = enc
    elif kernel_kind is KernelKind.CUSTOM:
        worst = min(enc, stab)
    else:
        worst = stab
    return ContourDiagnostics(enc > 0, stab >= 0, sufficient, float(worst), kernel_kind)
