"""PML geometry: absorber profile, complex coordinate stretch and stretched kernel."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from ._accel import njit
from .kernels import KernelSpec, eval_kernel_complex

__all__ = [
    "AbsorberProfile",
    "CustomProfile",
    "PmlParams",
    "StretchDomainError",
    "sigma",
    "sigma_antiderivative",
    "stretch",
    "alpha",
    "transformed_kernel",
]


class StretchDomainError(ValueError):
    """The Laplace variable s = 0 has no stretch."""


@dataclass(frozen=True)
class AbsorberProfile:
    """Piecewise-linear absorber: 0 on (-l, l), ramps to 1 over ``d_p``, then 1."""

    l: float
    d_p: float

    def __post_init__(self):
        if not (self.l > 0 and self.d_p > 0):
            raise ValueError("l and d_p must be positive")

    @property
    def x_left(self) -> float:
        return -self.l

    @property
    def x_right(self) -> float:
        return self.l

    @property
    def outer(self) -> float:
        return self.l + self.d_p

    def sigma(self, eta):
        a = np.abs(np.asarray(eta, dtype=float))
        out = np.clip((a - self.l) / self.d_p, 0.0, 1.0)
        return out[()] if out.ndim == 0 else out

    def antiderivative(self, x):
        x = np.asarray(x, dtype=float)
        a = np.abs(x)
        ramp = (a - self.l) ** 2 / (2.0 * self.d_p)
        beyond = 0.5 * self.d_p + (a - self.l - self.d_p)
        val = np.where(a <= self.l, 0.0, np.where(a <= self.outer, ramp, beyond))
        out = np.sign(x) * val
        return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class CustomProfile(AbsorberProfile):
    """Even, monotone absorber given by a callable on |eta|; antiderivative by quadrature."""

    func: Callable[[float], float] | None = None

    def sigma(self, eta):
        a = np.abs(np.asarray(eta, dtype=float))
        out = np.where(a < self.l, 0.0, np.vectorize(self.func, otypes=[float])(a))
        return out[()] if out.ndim == 0 else out

    def antiderivative(self, x):
        def one(v):
            if abs(v) <= self.l:
                return 0.0
            val = integrate.quad(lambda t: float(self.sigma(t)), self.l, abs(v), limit=200)[0]
            return math.copysign(val, v)

        out = np.vectorize(one, otypes=[float])(np.asarray(x, dtype=float))
        return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class PmlParams:
    """PML coefficient z; z = 0 switches the stretch off."""

    z: complex

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        if self.z.real < 0:
            raise ValueError("Re z must be non-negative for decay in the layer")


def sigma(profile: AbsorberProfile, eta):
    return profile.sigma(eta)


def sigma_antiderivative(profile: AbsorberProfile, x):
    return profile.antiderivative(x)


def _check_s(s):
    if np.any(np.asarray(s) == 0):
        raise StretchDomainError("stretch is undefined at s = 0")


def stretch(profile: AbsorberProfile, pml: PmlParams, x, s):
    """Stretched coordinate x + (z/s) * int_0^x sigma."""
    _check_s(s)
    return np.asarray(x) + pml.z / np.asarray(s, dtype=complex) * profile.antiderivative(x)


def alpha(profile: AbsorberProfile, pml: PmlParams, x, s):
    _check_s(s)
    return 1.0 + pml.z / np.asarray(s, dtype=complex) * profile.sigma(x)


def transformed_kernel(kernel: KernelSpec, profile: AbsorberProfile, pml: PmlParams, x, y, s):
    """(1/s) gamma(y~ - x~, (x~ + y~)/2) alpha(x, s) alpha(y, s)."""
    _check_s(s)
    s = np.asarray(s, dtype=complex)
    xt = stretch(profile, pml, x, s)
    yt = stretch(profile, pml, y, s)
    g = eval_kernel_complex(kernel, yt - xt, 0.5 * (xt + yt))
    return g * alpha(profile, pml, x, s) * alpha(profile, pml, y, s) / s


# -- scalar versions for compiled assembly ------------------------------------


@njit(cache=True)
def sigma_scalar(l, dp, x):
    a = abs(x)
    if a <= l:
        return 0.0
    if a >= l + dp:
        return 1.0
    return (a - l) / dp


@njit(cache=True)
def antiderivative_scalar(l, dp, x):
    a = abs(x)
    if a <= l:
        v = 0.0
    elif a <= l + dp:
        v = (a - l) ** 2 / (2.0 * dp)
    else:
        v = 0.5 * dp + (a - l - dp)
    return v if x >= 0 else -v
