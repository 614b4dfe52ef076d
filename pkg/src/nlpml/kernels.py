"""Nonlocal kernels gamma(alpha, beta), their complex continuation and local limit.

``alpha`` is the displacement ``y - x`` and ``beta`` the midpoint ``(x + y)/2``.
Built-in kernels are hard-truncated outside their support radius for real
arguments; the complex continuation is never truncated (assembly clips the
integration interval on the real coordinate instead).
"""
from __future__ import annotations

import cmath
import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from ._accel import njit

__all__ = [
    "KernelKind",
    "KernelSpec",
    "KernelDomainError",
    "QuadratureError",
    "exponential_kernel",
    "gaussian_kernel",
    "inhomogeneous_kernel",
    "custom_kernel",
    "eval_kernel",
    "eval_kernel_complex",
    "support_radius",
    "local_coefficient",
]

GAUSS_AMP = 4.0 * math.sqrt(1000.0 / math.pi)


class KernelDomainError(ValueError):
    """Raised for non-finite kernel arguments."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual estimate {residual:.3e})")
        self.residual = residual


class KernelKind(enum.Enum):
    EXPONENTIAL = 0
    GAUSSIAN = 1
    INHOMOGENEOUS = 2
    CUSTOM = 3


@dataclass(frozen=True)
class KernelSpec:
    """A kernel with horizon ``delta``.

    ``params`` holds the kind-specific constants:

    * EXPONENTIAL: ``(c0, cutoff)``, truncated at ``cutoff*delta``
    * GAUSSIAN: ``()``
    * INHOMOGENEOUS: ``(w_amp, w_rate, z_shift, z_rate, h_rate)`` for
      ``w(b) = 1 + w_amp*exp(-w_rate*b^2)``,
      ``zeta(b) = delta*(z_shift + tanh(-z_rate*b))`` and
      ``H(s) = 4*sqrt(1000/pi)*exp(-h_rate*s^2)``.

    CUSTOM kernels carry vectorised callables in ``func`` / ``func_complex``
    and a fixed support radius (defaults to ``delta``).
    """

    kind: KernelKind
    delta: float
    params: tuple[float, ...] = ()
    func: Callable | None = field(default=None, compare=False)
    func_complex: Callable | None = field(default=None, compare=False)
    custom_support: float | None = None

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be positive and finite, got {self.delta!r}")
        if self.kind is KernelKind.EXPONENTIAL:
            if len(self.params) != 2 or self.params[0] <= 0 or self.params[1] <= 0:
                raise ValueError("exponential kernel needs params=(c0, cutoff), both positive")
        if self.kind is KernelKind.INHOMOGENEOUS:
            if len(self.params) != 5:
                raise ValueError("inhomogeneous kernel needs 5 params")
            if self.params[2] <= 1.0:
                raise ValueError("zeta shift must exceed 1 so that zeta > 0")
        if self.kind is KernelKind.CUSTOM and self.func is None:
            raise ValueError("custom kernel needs func")

    @property
    def code(self) -> int:
        return self.kind.value

    @property
    def param_array(self) -> np.ndarray:
        out = np.zeros(5)
        out[: len(self.params)] = self.params
        return out

    @property
    def max_support(self) -> float:
        """Largest truncation radius over all midpoints."""
        if self.kind is KernelKind.INHOMOGENEOUS:
            return self.delta * (self.params[2] + 1.0)
        if self.kind is KernelKind.CUSTOM and self.custom_support is not None:
            return self.custom_support
        if self.kind is KernelKind.EXPONENTIAL:
            return self.delta * self.params[1]
        return self.delta

    @property
    def length_scale(self) -> float:
        """Decay length of the kernel profile; quadrature panels are kept below it."""
        if self.kind is KernelKind.EXPONENTIAL:
            return self.params[0] * self.delta
        if self.kind is KernelKind.GAUSSIAN:
            return self.delta / math.sqrt(20.0)
        if self.kind is KernelKind.INHOMOGENEOUS:
            return self.delta * (self.params[2] - 1.0) / math.sqrt(2.0 * self.params[4])
        return self.max_support / 4.0

    @property
    def homogeneous(self) -> bool:
        return self.kind in (KernelKind.EXPONENTIAL, KernelKind.GAUSSIAN)

    def with_delta(self, delta: float) -> "KernelSpec":
        return KernelSpec(self.kind, delta, self.params, self.func, self.func_complex, self.custom_support)


def exponential_kernel(delta: float, c0: float = 0.07, cutoff: float = 1.0) -> KernelSpec:
    return KernelSpec(KernelKind.EXPONENTIAL, delta, (c0, cutoff))


def gaussian_kernel(delta: float) -> KernelSpec:
    return KernelSpec(KernelKind.GAUSSIAN, delta)


def inhomogeneous_kernel(delta: float) -> KernelSpec:
    return KernelSpec(KernelKind.INHOMOGENEOUS, delta, (1.0, 3.0, 2.0, 1.5, 10.0))


def custom_kernel(delta, func, func_complex=None, support=None) -> KernelSpec:
    return KernelSpec(KernelKind.CUSTOM, delta, (), func, func_complex, support)


# -- scalar kernels for compiled loops ---------------------------------------


@njit(cache=True)
def kernel_value_scalar(code, delta, p, a, b):
    """Complex continuation of a built-in kernel at scalar (a, b)."""
    if code == 0:
        c0 = p[0]
        if a.real > 0.0:
            rho = a
        elif a.real < 0.0:
            rho = -a
        else:
            rho = 1j * abs(a.imag)
        return cmath.exp(-rho / (c0 * delta)) / (2.0 * c0**3 * delta**3)
    if code == 1:
        return GAUSS_AMP / delta**3 * cmath.exp(-10.0 * a * a / (delta * delta))
    w = 1.0 + p[0] * cmath.exp(-p[1] * b * b)
    zeta = delta * (p[2] + cmath.tanh(-p[3] * b))
    u = a / zeta
    return w / zeta**3 * GAUSS_AMP * cmath.exp(-p[4] * u * u)


@njit(cache=True)
def support_scalar(code, delta, p, b):
    if code == 2:
        return delta * (p[2] + math.tanh(-p[3] * b))
    if code == 0:
        return delta * p[1]
    return delta


# -- vectorised evaluation ---------------------------------------------------


def _continued(k: KernelSpec, a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if k.kind is KernelKind.EXPONENTIAL:
        c0 = k.params[0]
        re = a.real
        rho = np.where(re > 0, a, np.where(re < 0, -a, 1j * np.abs(a.imag)))
        return np.exp(-rho / (c0 * k.delta)) / (2.0 * c0**3 * k.delta**3)
    if k.kind is KernelKind.GAUSSIAN:
        return GAUSS_AMP / k.delta**3 * np.exp(-10.0 * a * a / k.delta**2)
    if k.kind is KernelKind.INHOMOGENEOUS:
        wa, wr, zs, zr, hr = k.params
        w = 1.0 + wa * np.exp(-wr * b * b)
        zeta = k.delta * (zs + np.tanh(-zr * b))
        u = a / zeta
        return w / zeta**3 * GAUSS_AMP * np.exp(-hr * u * u)
    if k.func_complex is None:
        raise NotImplementedError("custom kernel has no complex continuation")
    return np.asarray(k.func_complex(a, b), dtype=complex)


def support_radius(k: KernelSpec, beta):
    """Truncation radius at midpoint ``beta``."""
    if k.kind is KernelKind.INHOMOGENEOUS:
        _, _, zs, zr, _ = k.params
        return k.delta * (zs + np.tanh(-zr * np.asarray(beta, dtype=float)))
    return np.full(np.shape(beta), k.max_support) if np.ndim(beta) else k.max_support


def _check_finite(*xs):
    for x in xs:
        if not np.all(np.isfinite(x)):
            raise KernelDomainError("kernel arguments must be finite")


def eval_kernel(k: KernelSpec, alpha, beta):
    """Real kernel value, zero outside the support radius."""
    _check_finite(alpha, beta)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if k.kind is KernelKind.CUSTOM:
        val = np.asarray(k.func(alpha, beta), dtype=float)
    else:
        val = _continued(k, alpha, beta).real
    out = np.where(np.abs(alpha) > support_radius(k, beta), 0.0, val)
    return out[()] if out.ndim == 0 else out


def eval_kernel_complex(k: KernelSpec, alpha, beta):
    """Analytic continuation of the kernel; not truncated."""
    _check_finite(alpha, beta)
    out = _continued(k, alpha, beta)
    return out[()] if out.ndim == 0 else out


def local_coefficient(k: KernelSpec, x: float, truncated: bool = False, tol: float = 1e-12) -> float:
    """Half the second moment ``(1/2) int s^2 gamma(s, x) ds``.

    With ``truncated=False`` the integral runs over the whole line using the
    untruncated kernel formula; with ``truncated=True`` only over the support
    radius, i.e. the local coefficient of the kernel actually discretised.
    """
    if truncated or k.kind is KernelKind.CUSTOM:
        r = float(support_radius(k, x))
    else:
        r = np.inf

    def f(s):
        if k.kind is KernelKind.CUSTOM:
            return s * s * float(k.func(np.asarray(s), np.asarray(x)))
        return s * s * float(_continued(k, s, x).real)

    total = 0.0
    for lo, hi in ((-r, 0.0), (0.0, r)):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            res = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=tol, limit=400, full_output=1)
        val, err = res[0], res[1]
        if len(res) > 3 and err > 1e3 * tol * max(abs(val), 1e-300):
            raise QuadratureError("second-moment quadrature did not converge", err)
        total += val
    return 0.5 * total
