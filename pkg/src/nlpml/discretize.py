"""Uniform grid, AC assembly of the contour-node matrices, absorber and correction."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _hot
from .kernels import KernelSpec, eval_kernel, support_radius
from .stretch import AbsorberProfile, PmlParams
from .talbot import TalbotContour, validate_contour

__all__ = [
    "Grid1D",
    "SemiDiscreteSystem",
    "GridError",
    "ContourValidationError",
    "SupportWarning",
    "build_grid",
    "uniform_grid",
    "assemble_matrix",
    "assemble_real",
    "assemble_system",
    "correction_vector",
    "gauss_legendre01",
    "subpanels",
]

DEFAULT_QUAD_ORDER = 4


class GridError(ValueError):
    pass


class ContourValidationError(ValueError):
    """The Talbot contour fails the check required for the kernel kind."""


class SupportWarning(UserWarning):
    """Initial data reaches closer than one horizon to the layer."""


def gauss_legendre01(order: int, nsub: int = 1):
    """Composite Gauss-Legendre rule on [0, 1] with ``nsub`` equal panels."""
    x, w = np.polynomial.legendre.leggauss(order)
    x, w = 0.5 * (x + 1.0), 0.5 * w
    if nsub == 1:
        return x, w
    start = np.arange(nsub)[:, None] / nsub
    return (start + x / nsub).ravel(), np.tile(w / nsub, nsub)


def subpanels(h: float, scale: float) -> int:
    """Panels per cell so that each is no longer than ``scale``."""
    return max(1, math.ceil(h / scale - 1e-12))


def stretch_factor(pml: PmlParams, nodes) -> float:
    """max_j |1 + z/xi_j|: how much faster the stretched kernel varies."""
    if pml.z == 0:
        return 1.0
    return float(max(1.0, np.max(np.abs(1.0 + pml.z / np.asarray(nodes)))))


@dataclass(frozen=True)
class Grid1D:
    """Nodes x_0..x_{N+1}; unknowns are x_1..x_N (array index n-1)."""

    h: float
    N: int
    x_start: float
    bandwidth: int
    l: float = math.inf
    d_p: float = 0.0

    @property
    def nodes(self) -> np.ndarray:
        return self.x_start + self.h * np.arange(self.N + 2)

    @property
    def x(self) -> np.ndarray:
        """Coordinates of the unknowns."""
        return self.x_start + self.h * np.arange(1, self.N + 1)

    @property
    def x_first(self) -> float:
        return self.x_start + self.h

    @property
    def interior(self) -> np.ndarray:
        """Mask of I: |x_n| < l."""
        return np.abs(self.x) < self.l - 1e-12 * self.h

    @property
    def layer(self) -> np.ndarray:
        """Mask of I_p (nodes with |x_n| >= l; ties go to the layer)."""
        return ~self.interior


def uniform_grid(x_left: float, x_right: float, h: float, support: float, l: float = math.inf, d_p: float = 0.0) -> Grid1D:
    if not h > 0:
        raise GridError("h must be positive")
    cells = (x_right - x_left) / h
    ncell = int(round(cells))
    if ncell < 2 or abs(cells - ncell) > 1e-9 * max(1.0, cells):
        raise GridError(f"h={h} does not divide the span {x_right - x_left}")
    b = math.ceil(support / h - 1e-12) + 1
    return Grid1D(h=h, N=ncell - 1, x_start=x_left, bandwidth=b, l=l, d_p=d_p)


def build_grid(profile: AbsorberProfile, delta: float, h: float) -> Grid1D:
    """Grid on [x_l - d_p, x_r + d_p]; ``delta`` is the stencil support radius."""
    if not delta > 0:
        raise GridError("delta must be positive")
    return uniform_grid(profile.x_left - profile.d_p, profile.x_right + profile.d_p, h, delta, profile.l, profile.d_p)


def pml_rows(grid: Grid1D, support: float) -> np.ndarray:
    """Rows whose stencil reaches a point with sigma > 0."""
    reach = support + 2.0 * grid.h
    return np.flatnonzero(np.abs(grid.x) + reach > grid.l)


def assemble_real(grid: Grid1D, kernel: KernelSpec, quad_order: int = DEFAULT_QUAD_ORDER, backend: str | None = None) -> np.ndarray:
    """Band (N, 2b+1) of the real AC matrix A for the unstretched kernel."""
    gx, gw = gauss_legendre01(quad_order, subpanels(grid.h, kernel.length_scale))
    b = grid.bandwidth
    if _hot.use_numba(backend, kernel):
        out = np.zeros((grid.N, 2 * b + 1))
        _hot.assemble_real_nb(grid.x_first, grid.h, grid.N, b, kernel.code, kernel.delta, kernel.param_array, gx, gw, out)
        return out
    return _hot.assemble_real_np(grid.x_first, grid.h, grid.N, b, kernel, gx, gw)


def _assemble_pml(grid, kernel, profile, pml, rows, s, wts, quad_order, backend):
    b = grid.bandwidth
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    gx, gw = gauss_legendre01(quad_order, subpanels(grid.h, kernel.length_scale / stretch_factor(pml, s)))
    wts = np.atleast_1d(np.asarray(wts, dtype=complex))
    if np.any(s == 0):
        raise ValueError("contour node at s = 0")
    rows = np.asarray(rows, dtype=np.int64)
    if _hot.use_numba(backend, kernel, profile):
        out = np.zeros((len(s), len(rows), 2 * b + 1), dtype=complex)
        _hot.assemble_pml_nb(grid.x_first, grid.h, grid.N, b, rows, kernel.code, kernel.delta, kernel.param_array,
                             profile.l, profile.d_p, complex(pml.z), s, wts, gx, gw, out)
        return out
    return _hot.assemble_pml_np(grid.x_first, grid.h, grid.N, b, rows, kernel, profile, complex(pml.z), s, wts, gx, gw)


def assemble_matrix(grid: Grid1D, kernel: KernelSpec, profile: AbsorberProfile, pml: PmlParams, xi_j: complex, w_j: complex,
                    quad_order: int = DEFAULT_QUAD_ORDER, backend: str | None = None) -> np.ndarray:
    """Full band (N, 2b+1) of the matrix for one contour node."""
    rows = np.arange(grid.N)
    return _assemble_pml(grid, kernel, profile, pml, rows, [xi_j], [w_j], quad_order, backend)[0]


def band_to_dense(band: np.ndarray, b: int) -> np.ndarray:
    N = band.shape[0]
    out = np.zeros((N, N), dtype=band.dtype)
    for c in range(2 * b + 1):
        off = c - b
        n = np.arange(max(0, -off), min(N, N - off))
        out[n, n + off] = band[n, c]
    return out


def correction_vector(grid: Grid1D, kernel: KernelSpec, psi0: Callable, order: int = 8, support_check: bool = True) -> np.ndarray:
    """Right-hand-side term  -int_D [psi0(x_n) - psi0(y)] gamma(y - x_n, (x_n + y)/2) dy.

    Composite Gauss-Legendre on grid-aligned panels around x_n (subdivided
    below the kernel length scale), clipped to D and, for homogeneous
    kernels, to the horizon.
    """
    if support_check:
        _check_support(grid, kernel, psi0)
    gx, gw = gauss_legendre01(order, subpanels(grid.h, kernel.length_scale))
    h = grid.h
    R = kernel.max_support
    npan = math.ceil(R / h - 1e-12)
    xn = grid.x
    offs = np.arange(-npan, npan)
    lo = xn[:, None] + offs[None, :] * h
    hi = lo + h
    lo = np.maximum(lo, -grid.l)
    hi = np.minimum(hi, grid.l)
    if kernel.homogeneous:
        lo = np.maximum(lo, xn[:, None] - R)
        hi = np.minimum(hi, xn[:, None] + R)
    ln = np.clip(hi - lo, 0.0, None)
    y = lo[..., None] + ln[..., None] * gx
    wq = ln[..., None] * gw
    x3 = xn[:, None, None]
    integrand = (psi0(x3) - psi0(y)) * eval_kernel(kernel, y - x3, 0.5 * (x3 + y))
    return -np.sum(wq * integrand, axis=(1, 2))


def _check_support(grid, kernel, psi0):
    x = grid.nodes
    vals = np.abs(psi0(x))
    peak = vals.max() if vals.size else 0.0
    if peak == 0:
        return
    outside = np.abs(x) >= grid.l - kernel.delta
    if np.any(vals[outside] > 1e-6 * peak):
        warnings.warn(
            f"psi0 reaches {vals[outside].max() / peak:.2e} of its peak within one horizon of the layer",
            SupportWarning,
            stacklevel=3,
        )


@dataclass
class SemiDiscreteSystem:
    """Assembled semi-discrete PML system.

    Storage is split: ``A`` is the real band of the unstretched kernel for all
    rows, and for rows listed in ``rows`` (stencil touching the layer) the
    full per-node complex bands live in ``pml_bands[j, r]``. Any other row of
    matrix j equals ``coef[j] * A[n]`` with ``coef = w_j / xi_j``.
    """

    grid: Grid1D
    kernel: KernelSpec
    profile: AbsorberProfile
    pml: PmlParams
    contour: TalbotContour
    A: np.ndarray
    rows: np.ndarray
    pml_bands: np.ndarray
    absorber_diag: np.ndarray
    correction: np.ndarray
    psi0: np.ndarray
    psi1: np.ndarray
    forcing: Callable | None = None
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.contour.m

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def coef(self) -> np.ndarray:
        return self.contour.weights / self.contour.nodes

    def band(self, j: int) -> np.ndarray:
        """Band of matrix j (0-based)."""
        out = self.coef[j] * self.A.astype(complex)
        if len(self.rows):
            out[self.rows] = self.pml_bands[j]
        return out

    def matrix(self, j: int) -> np.ndarray:
        return band_to_dense(self.band(j), self.grid.bandwidth)

    def rhs(self, t: float) -> np.ndarray:
        if self.forcing is None:
            return self.correction.astype(complex)
        return self.correction + np.asarray(self.forcing(self.grid.x, t), dtype=complex)

    def apply(self, p: np.ndarray) -> np.ndarray:
        """sum_j A_j p_j for p of shape (m, N)."""
        b = self.grid.bandwidth
        y = _hot.band_matvec(self.A.astype(complex), self.coef @ p, b)
        for r, n in enumerate(self.rows):
            cols = np.arange(2 * b + 1) + n - b
            ok = (cols >= 0) & (cols < self.N)
            y[n] = np.sum(self.pml_bands[:, r, ok] * p[:, cols[ok]])
        return y


def assemble_system(grid: Grid1D, kernel: KernelSpec, profile: AbsorberProfile, pml: PmlParams, contour: TalbotContour,
                    psi0: Callable, psi1: Callable, f: Callable | None = None, quad_order: int = DEFAULT_QUAD_ORDER,
                    backend: str | None = None, check_contour: bool = True) -> SemiDiscreteSystem:
    """Assemble every piece of the semi-discrete system."""
    if check_contour:
        diag = validate_contour(contour, pml, kernel.kind)
        if not diag.passed:
            raise ContourValidationError("contour validation failed:\n" + "\n".join(diag.lines()))
    A = assemble_real(grid, kernel, quad_order, backend)
    if pml.z == 0:
        rows = np.zeros(0, dtype=np.int64)
    else:
        rows = pml_rows(grid, kernel.max_support)
    bands = _assemble_pml(grid, kernel, profile, pml, rows, contour.nodes, contour.weights, quad_order, backend)
    x = grid.x
    return SemiDiscreteSystem(
        grid=grid,
        kernel=kernel,
        profile=profile,
        pml=pml,
        contour=contour,
        A=A,
        rows=rows,
        pml_bands=bands,
        absorber_diag=np.asarray(profile.sigma(x), dtype=float),
        correction=correction_vector(grid, kernel, psi0),
        psi0=np.asarray(psi0(x), dtype=float),
        psi1=np.asarray(psi1(x), dtype=float),
        forcing=f,
        meta={"quad_order": quad_order},
    )
