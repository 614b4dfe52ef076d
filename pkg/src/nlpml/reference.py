"""Independent reference solvers.

* ``solve_nonlocal_reference``: the plain nonlocal wave equation on a large
  interval [-L, L] with zero clamp outside, real AC matrix of the unstretched
  kernel and the two-term central-difference recursion. No stretch, no
  contour, no auxiliary variables.
* ``solve_local_pml``: staggered finite differences for the local PML system
  u_tt + z sigma u_t - v_x = 0,  v_t - mu(x) u_tx + z sigma v = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _hot
from .discretize import assemble_real, uniform_grid
from .kernels import KernelSpec, local_coefficient
from .stretch import AbsorberProfile

__all__ = [
    "ReferenceSolution",
    "LocalPmlSystem",
    "ConvergenceResult",
    "default_halfwidth",
    "solve_nonlocal_reference",
    "doubling_check",
    "coefficient_from_kernel",
    "solve_local_pml",
    "manufactured_convergence",
    "dalembert",
]


@dataclass
class ReferenceSolution:
    x: np.ndarray
    times: np.ndarray
    snapshots: np.ndarray
    ok: bool
    h: float

    def at(self, t: float) -> np.ndarray:
        return self.snapshots[int(np.argmin(np.abs(self.times - t)))]

    def sample(self, x, t: float) -> np.ndarray:
        """Values at ``x`` (grid nodes are picked exactly, others interpolated)."""
        x = np.asarray(x, dtype=float)
        u = self.at(t)
        pos = (x - self.x[0]) / self.h
        idx = np.rint(pos).astype(int)
        if np.all(np.abs(pos - idx) < 1e-8) and idx.min() >= 0 and idx.max() < len(self.x):
            return u[idx]
        return np.interp(x, self.x, u)


def _record_steps(T, tau, record_times):
    nsteps = math.ceil(T / tau - 1e-9) if T > 0 else 0
    if record_times is None:
        record_times = [T]
    return nsteps, sorted({min(int(round(t / tau)), nsteps) for t in record_times})


def max_local_coefficient(kernel: KernelSpec, extent: float) -> float:
    if kernel.homogeneous:
        return local_coefficient(kernel, 0.0)
    return max(local_coefficient(kernel, x) for x in np.linspace(-extent, extent, 41))


def default_halfwidth(kernel: KernelSpec, profile: AbsorberProfile, T: float) -> float:
    """l + d_p + 2 T sqrt(max sigma_loc) + 2, rounded up to a multiple of 1/2."""
    c = math.sqrt(max_local_coefficient(kernel, profile.outer))
    L = profile.outer + 2.0 * T * c + 2.0
    return math.ceil(2.0 * L) / 2.0


def solve_nonlocal_reference(kernel: KernelSpec, psi0: Callable, psi1: Callable, f: Callable | None, T: float,
                             tau: float, h: float, L: float, record_times=None, backend: str | None = None,
                             quad_order: int = 4) -> ReferenceSolution:
    """Large-domain solve of q_tt + L q = f without any layer."""
    grid = uniform_grid(-L, L, h, kernel.max_support)
    A = assemble_real(grid, kernel, quad_order, backend)
    b = grid.bandwidth
    x = grid.x
    nsteps, targets = _record_steps(T, tau, record_times)
    q = np.asarray(psi0(x), dtype=float).copy()
    force = (lambda t: np.zeros_like(x)) if f is None else (lambda t: np.asarray(f(x, t), dtype=float))
    w = np.asarray(psi1(x), dtype=float) + 0.5 * tau * (force(0.0) - _hot.band_matvec(A, q, b))
    guard = 1e6 * (1.0 + np.max(np.abs(q), initial=0.0))
    fn = _hot.leapfrog_nb if _hot.use_numba(backend, kernel) else _hot.leapfrog_np
    k = 0
    snaps, times = [], []
    ok = True

    def advance(n):
        nonlocal k
        if f is None:
            done = fn(n, tau, q, w, A, b, np.zeros_like(x), guard)
            k += done
            return done == n
        for _ in range(n):
            if fn(1, tau, q, w, A, b, force((k + 1) * tau), guard) != 1:
                return False
            k += 1
        return True

    for target in targets:
        if not advance(target - k):
            ok = False
            break
        snaps.append(q.copy())
        times.append(k * tau)
    if ok and k < nsteps:
        ok = advance(nsteps - k)
    snaps = np.array(snaps) if snaps else np.zeros((0, len(x)))
    return ReferenceSolution(x, np.array(times), snaps, ok, h)


def doubling_check(kernel, psi0, psi1, f, T, tau, h, L, D: float, backend=None) -> float:
    """max over |x| < D of |q_L - q_2L| at time T."""
    a = solve_nonlocal_reference(kernel, psi0, psi1, f, T, tau, h, L, backend=backend)
    b = solve_nonlocal_reference(kernel, psi0, psi1, f, T, tau, h, 2 * L, backend=backend)
    x = a.x[np.abs(a.x) < D]
    return float(np.max(np.abs(a.sample(x, T) - b.sample(x, T))))


# -- local PML reference -------------------------------------------------------


@dataclass
class LocalPmlSystem:
    coefficient: Callable  # vectorised x -> mu(x) > 0
    profile: AbsorberProfile
    z: complex = 0.0


def coefficient_from_kernel(kernel: KernelSpec, truncated: bool = True) -> Callable:
    """mu(x) from the kernel's second moment (constant for homogeneous kernels)."""
    if kernel.homogeneous:
        c = local_coefficient(kernel, 0.0, truncated=truncated)
        return lambda x: np.full(np.shape(x), c)

    def mu(x):
        x = np.asarray(x, dtype=float)
        return np.vectorize(lambda v: local_coefficient(kernel, v, truncated=truncated), otypes=[float])(x)

    return mu


def solve_local_pml(system: LocalPmlSystem, psi0: Callable, psi1: Callable, T: float, tau: float, h: float,
                    record_times=None) -> ReferenceSolution:
    """Staggered scheme: u at nodes/integer steps, u_t at half steps, v at midpoints.

    v is advanced with the same trapezoid treatment of the z*sigma term as
    the nonlocal integrator; v(0) = mu psi0' so the interior reduces to the
    standard leapfrog for u_tt = (mu u_x)_x.
    """
    prof = system.profile
    grid = uniform_grid(-prof.outer, prof.outer, h, h)
    nodes = grid.nodes
    x = grid.x
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    mu = np.asarray(system.coefficient(mid), dtype=float)
    if np.any(mu <= 0):
        raise ValueError("local coefficient must be positive")
    z = complex(system.z)
    zs_n = z * prof.sigma(x)
    zs_m = z * prof.sigma(mid)
    a_n, b_n = 1.0 - 0.5 * tau * zs_n, 1.0 + 0.5 * tau * zs_n
    a_m, b_m = 1.0 - 0.5 * tau * zs_m, 1.0 + 0.5 * tau * zs_m
    upad = np.zeros(len(nodes), dtype=complex)
    upad[1:-1] = psi0(x)
    u = upad[1:-1]
    v = mu * np.diff(upad) / h
    wpad = np.zeros(len(nodes), dtype=complex)
    wpad[1:-1] = psi1(x) + 0.5 * tau * (np.diff(v) / h - zs_n * psi1(x))
    w = wpad[1:-1]
    nsteps, targets = _record_steps(T, tau, record_times)
    guard = 1e6 * (1.0 + np.max(np.abs(u), initial=0.0))
    k = 0
    snaps, times = [], []
    ok = True
    for target in targets + ([nsteps] if not targets or targets[-1] < nsteps else []):
        while k < target:
            u += tau * w
            if not np.max(np.abs(u)) <= guard:
                ok = False
                break
            v[:] = (a_m * v + tau * mu * np.diff(wpad) / h) / b_m
            w[:] = (a_n * w + tau * np.diff(v) / h) / b_n
            k += 1
        if not ok:
            break
        if target in targets:
            snaps.append(u.real.copy() if z.imag == 0 else u.copy())
            times.append(k * tau)
    snaps = np.array(snaps) if snaps else np.zeros((0, len(x)))
    return ReferenceSolution(x, np.array(times), snaps, ok, h)


# -- self-verification -----------------------------------------------------------


def dalembert(psi0: Callable, psi1_antiderivative: Callable | None, x, t, c: float = 1.0):
    """Free-space solution of u_tt = c^2 u_xx."""
    x = np.asarray(x, dtype=float)
    u = 0.5 * (psi0(x - c * t) + psi0(x + c * t))
    if psi1_antiderivative is not None:
        u = u + (psi1_antiderivative(x + c * t) - psi1_antiderivative(x - c * t)) / (2.0 * c)
    return u


@dataclass
class ConvergenceResult:
    hs: np.ndarray
    errors: np.ndarray
    orders: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        return self.errors[:-1] / self.errors[1:]


def manufactured_convergence(system: LocalPmlSystem, psi0: Callable, psi1: Callable, T: float, hs, cfl: float = 0.5,
                             fine_factor: int = 8) -> ConvergenceResult:
    """Errors of the local solver on a halving sequence against a finer self-reference.

    tau = cfl * h on every level, so time and space are refined together.
    """
    hs = np.asarray(sorted(hs, reverse=True), dtype=float)
    if len(hs) < 2 or len(np.unique(hs)) != len(hs):
        raise ValueError("need at least two distinct mesh sizes")
    ratios = hs[:-1] / hs[1:]
    if not np.allclose(ratios, 2.0):
        raise ValueError("mesh sizes must form a halving sequence")
    h_ref = hs[-1] / fine_factor
    ref = solve_local_pml(system, psi0, psi1, T, cfl * h_ref, h_ref)
    errs = []
    for h in hs:
        sol = solve_local_pml(system, psi0, psi1, T, cfl * h, h)
        diff = sol.at(T) - ref.sample(sol.x, T)
        errs.append(np.sqrt(np.mean(np.abs(diff) ** 2)))
    errs = np.array(errs)
    return ConvergenceResult(hs, errs, np.log2(errs[:-1] / errs[1:]))
