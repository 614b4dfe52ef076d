"""Verlet-type time stepping for the (w, q, p_j) system.

    q^{k+1}   = q^k + tau w^{k+1/2}
    p_j^{k+1} = [(1 + tau xi_j/2) p_j^k + tau w^{k+1/2}] / (1 - tau xi_j/2)
    w^{k+3/2} = [(1 - tau z sigma/2) w^{k+1/2} + tau (f^{k+1} + g - sum_j A_j p_j^{k+1})]
                / (1 + tau z sigma/2)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _hot
from .discretize import SemiDiscreteSystem

__all__ = ["WaveState", "Trajectory", "BlowUpError", "init_state", "step", "run"]

GUARD_FACTOR = 1e6


class BlowUpError(ArithmeticError):
    def __init__(self, k: int):
        super().__init__(f"solution blew up at step {k}")
        self.k = k


@dataclass
class WaveState:
    k: int
    tau: float
    q: np.ndarray
    w: np.ndarray
    p: np.ndarray  # (m, N + 2b), zero-padded by the bandwidth on both sides
    b: int
    stats: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @property
    def t(self) -> float:
        return self.k * self.tau

    @property
    def p_core(self) -> np.ndarray:
        return self.p[:, self.b:self.b + self.q.shape[0]]


@dataclass
class Trajectory:
    times: np.ndarray
    steps: np.ndarray
    snapshots: np.ndarray  # complex, (len(times), N)
    x: np.ndarray
    ok: bool
    failed_step: int | None
    max_re: float
    max_im: float
    final: WaveState | None = None

    @property
    def real(self) -> np.ndarray:
        return self.snapshots.real

    @property
    def imag_ratio(self) -> float:
        """max |Im q| / max |Re q| over every step taken."""
        return self.max_im / self.max_re if self.max_re > 0 else 0.0

    def at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.times - t)))
        return self.snapshots[i]


def _coefficients(system: SemiDiscreteSystem, tau: float):
    xi = system.contour.nodes
    den = 1.0 - 0.5 * tau * xi
    if np.any(np.abs(den) < 1e-12):
        raise ValueError("tau * xi_j = 2 for some contour node; change tau")
    r1 = (1.0 + 0.5 * tau * xi) / den
    r2 = tau / den
    zs = system.pml.z * system.absorber_diag
    c1 = (1.0 - 0.5 * tau * zs).astype(complex)
    c2 = (1.0 + 0.5 * tau * zs).astype(complex)
    return r1, r2, c1, c2


def init_state(system: SemiDiscreteSystem, tau: float, include_correction: bool = True) -> WaveState:
    """Initial q, p and the half-step velocity w^{1/2}.

    ``include_correction=False`` drops g from the w^{1/2} formula (the
    literal printed form) for comparison runs.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    N, b, m = system.N, system.grid.bandwidth, system.m
    _coefficients(system, tau)
    q = system.psi0.astype(complex)
    p = np.zeros((m, N + 2 * b), dtype=complex)
    drive = system.rhs(0.0)
    if not include_correction:
        drive = drive - system.correction
    z = system.pml.z
    w = system.psi1 + 0.5 * tau * (drive - z * system.absorber_diag * system.psi1)
    return WaveState(0, tau, q, w.astype(complex), p, b)


def _guard(system: SemiDiscreteSystem) -> float:
    return GUARD_FACTOR * (1.0 + float(np.max(np.abs(system.psi0), initial=0.0)))


def _advance(system, state, nsteps, half_sum=False, backend=None):
    """Advance in place; returns number of completed steps."""
    if nsteps <= 0:
        return 0
    r1, r2, c1, c2 = _coefficients(system, state.tau)
    fn = _hot.advance_nb if _hot.use_numba(backend) else _hot.advance_np
    if half_sum and not system.contour.conjugate_pairs():
        raise ValueError("half-sum needs an even, conjugate-symmetric contour")
    if half_sum and complex(system.pml.z).imag != 0:
        raise ValueError("half-sum needs a real PML coefficient z")
    args = (state.tau, state.q, state.w, state.p, r1, r2, system.coef, system.A.astype(complex),
            system.rows.astype(np.int64), system.pml_bands, state.b, c1, c2)
    guard = _guard(system)
    if system.forcing is None:
        done = fn(nsteps, *args, system.rhs(0.0), bool(half_sum), guard, state.stats)
        state.k += done
        return done
    done = 0
    for _ in range(nsteps):
        rhs = system.rhs((state.k + 1) * state.tau)
        ok = fn(1, *args, rhs, bool(half_sum), guard, state.stats)
        state.k += ok
        done += ok
        if not ok:
            break
    return done


def step(system: SemiDiscreteSystem, state: WaveState, half_sum: bool = False, backend: str | None = None) -> WaveState:
    """One Verlet step (in place); raises BlowUpError when the guard trips."""
    if _advance(system, state, 1, half_sum, backend) != 1:
        raise BlowUpError(state.k + 1)
    return state


def run(system: SemiDiscreteSystem, T: float, tau: float, record_times=None, half_sum: bool = False,
        include_correction: bool = True, backend: str | None = None) -> Trajectory:
    """Step to ceil(T/tau) and record q at the steps nearest ``record_times``."""
    if T < 0:
        raise ValueError("T must be non-negative")
    state = init_state(system, tau, include_correction)
    nsteps = math.ceil(T / tau - 1e-9) if T > 0 else 0
    if record_times is None:
        record_times = [T]
    targets = sorted({min(int(round(t / tau)), nsteps) for t in record_times})
    snaps, steps = [], []
    failed = None
    for target in targets:
        want = target - state.k
        done = _advance(system, state, want, half_sum, backend)
        if done < want:
            failed = state.k + 1
            break
        snaps.append(state.q.copy())
        steps.append(state.k)
    if failed is None and state.k < nsteps:
        want = nsteps - state.k
        if _advance(system, state, want, half_sum, backend) < want:
            failed = state.k + 1
    steps = np.array(steps, dtype=int)
    snaps = np.array(snaps) if snaps else np.zeros((0, system.N), dtype=complex)
    max_re, max_im = state.stats
    max_re = max(max_re, float(np.max(np.abs(system.psi0), initial=0.0)))
    return Trajectory(steps * tau, steps, snaps, system.grid.x, failed is None, failed, float(max_re), float(max_im), state)
