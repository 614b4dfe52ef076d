"""Config-driven experiments: single runs, e_h / e_delta sweeps and validation."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig, initial_data
from .discretize import SemiDiscreteSystem, SupportWarning, assemble_system, build_grid
from .integrate import BlowUpError, Trajectory, run
from .kernels import KernelKind, KernelSpec, local_coefficient
from .metrics import ErrorReport, error_edelta, error_eh
from .reference import (
    LocalPmlSystem,
    coefficient_from_kernel,
    default_halfwidth,
    max_local_coefficient,
    solve_local_pml,
    solve_nonlocal_reference,
)
from .talbot import ContourDiagnostics, build_contour, validate_contour

__all__ = [
    "RunResult",
    "Validation",
    "build_run_system",
    "simulate",
    "run_config",
    "NonlocalOracle",
    "nonlocal_oracle",
    "local_oracle",
    "table_eh",
    "table_edelta",
    "validate_config",
]


def build_run_system(cfg: RunConfig, delta: float | None = None, h: float | None = None) -> SemiDiscreteSystem:
    kernel = cfg.kernel_spec(delta)
    grid = build_grid(cfg.profile, kernel.max_support, cfg.h if h is None else h)
    contour = build_contour(cfg.omega, cfg.mu, cfg.nu, cfg.m)
    psi0, psi1 = initial_data(cfg.data)
    return assemble_system(grid, kernel, cfg.profile, cfg.pml, contour, psi0, psi1, quad_order=cfg.quad_order)


def _half_sum_ok(cfg: RunConfig) -> bool:
    return cfg.half_sum and cfg.m % 2 == 0 and cfg.z_im == 0


def simulate(cfg: RunConfig, delta: float | None = None, h: float | None = None, times=None) -> tuple[SemiDiscreteSystem, Trajectory]:
    system = build_run_system(cfg, delta, h)
    times = cfg.snapshot_times if times is None else times
    traj = run(system, cfg.T, cfg.tau, record_times=times, half_sum=_half_sum_ok(cfg),
               include_correction=cfg.include_correction)
    return system, traj


def _sweep_entry(args):
    cfg, delta, h = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SupportWarning)
        system, traj = simulate(cfg, delta, h, times=[cfg.T])
    if not traj.ok:
        raise BlowUpError(traj.failed_step)
    return system.grid, traj.at(cfg.T)


def _map(cfg: RunConfig, jobs):
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_sweep_entry, jobs))
    return [_sweep_entry(j) for j in jobs]


# -- reference oracles -------------------------------------------------------------


@dataclass
class NonlocalOracle:
    """Large-domain solution(s); Richardson-combined when two levels are present."""

    solutions: list
    richardson: bool

    def sample(self, x, t: float) -> np.ndarray:
        if self.richardson:
            coarse, fine = self.solutions
            return (4.0 * fine.sample(x, t) - coarse.sample(x, t)) / 3.0
        return self.solutions[0].sample(x, t)

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.solutions)


def _ref_h(cfg: RunConfig, h_min: float) -> float:
    return cfg.ref_h if cfg.ref_h is not None else h_min / 4.0


def nonlocal_oracle(cfg: RunConfig, kernel: KernelSpec, h_min: float, times) -> NonlocalOracle:
    psi0, psi1 = initial_data(cfg.data)
    L = cfg.ref_halfwidth if cfg.ref_halfwidth is not None else default_halfwidth(kernel, cfg.profile, cfg.T)
    rh = _ref_h(cfg, h_min)
    levels = [rh, rh / 2.0] if cfg.ref_richardson else [rh]
    sols = [solve_nonlocal_reference(kernel, psi0, psi1, None, cfg.T, cfg.tau, hh, L, record_times=times,
                                     quad_order=cfg.quad_order) for hh in levels]
    oracle = NonlocalOracle(sols, cfg.ref_richardson)
    if not oracle.ok:
        raise BlowUpError(-1)
    return oracle


def local_oracle(cfg: RunConfig, kernel: KernelSpec, h_min: float, times):
    """Local PML solution on a grid ``local_refine`` times finer than ``h_min``."""
    psi0, psi1 = initial_data(cfg.data)
    h_loc = h_min / cfg.local_refine
    c = math.sqrt(max_local_coefficient(kernel, cfg.profile.outer))
    sub = max(1, math.ceil(cfg.tau * c / (0.9 * h_loc)))
    system = LocalPmlSystem(coefficient_from_kernel(kernel, truncated=True), cfg.profile, cfg.z)
    sol = solve_local_pml(system, psi0, psi1, cfg.T, cfg.tau / sub, h_loc, record_times=times)
    if not sol.ok:
        raise BlowUpError(-1)
    return sol


# -- single run ----------------------------------------------------------------------


@dataclass
class RunResult:
    cfg: RunConfig
    system: SemiDiscreteSystem
    trajectory: Trajectory
    diagnostics: ContourDiagnostics
    reference: dict = field(default_factory=dict)  # t -> values at grid.x

    def manifest(self) -> dict:
        g = self.system.grid
        tr = self.trajectory
        return {
            "config": self.cfg.to_dict(),
            "derived": {
                "N": g.N,
                "bandwidth": g.bandwidth,
                "x_first": g.x_first,
                "pml_rows": int(len(self.system.rows)),
                "support": self.system.kernel.max_support,
                "half_sum": _half_sum_ok(self.cfg),
                "local_coefficient": local_coefficient(self.system.kernel, 0.0, truncated=True),
            },
            "contour": {
                "enclosure_ok": self.diagnostics.enclosure_ok,
                "stability_ok": self.diagnostics.stability_ok,
                "sufficient_ok": self.diagnostics.sufficient_ok,
                "worst_margin": self.diagnostics.worst_margin,
            },
            "health": {
                "ok": tr.ok,
                "failed_step": tr.failed_step,
                "steps": int(math.ceil(self.cfg.T / self.cfg.tau - 1e-9)),
                "max_re": tr.max_re,
                "max_im": tr.max_im,
                "imag_ratio": tr.imag_ratio,
            },
            "snapshots": [float(t) for t in tr.times],
        }


def run_config(cfg: RunConfig) -> RunResult:
    system, traj = simulate(cfg)
    diag = validate_contour(system.contour, cfg.pml, system.kernel.kind)
    result = RunResult(cfg, system, traj, diag)
    if cfg.reference != "none" and traj.ok:
        times = list(traj.times)
        if cfg.reference == "nonlocal":
            oracle = nonlocal_oracle(cfg, system.kernel, system.grid.h, times)
            result.reference = {t: oracle.sample(system.grid.x, t) for t in times}
        else:
            sol = local_oracle(cfg, system.kernel, system.grid.h, times)
            result.reference = {t: np.real(sol.sample(system.grid.x, t)) for t in times}
    return result


# -- sweeps ----------------------------------------------------------------------------


def _check_h_list(h_list):
    if not h_list:
        raise ValueError("h list is empty")
    return sorted(h_list, reverse=True)


def table_eh(cfg: RunConfig, h_list=None, delta_list=None) -> ErrorReport:
    """e_h at time T for every (h, delta); one large-domain reference per delta."""
    hs = _check_h_list(cfg.h_list if h_list is None else h_list)
    deltas = cfg.delta_list if delta_list is None else delta_list
    if not deltas:
        raise ValueError("delta list is empty")
    report = ErrorReport("eh", cfg.T)
    jobs = [(cfg, d, h) for d in deltas for h in hs]
    results = _map(cfg, jobs)
    for d in deltas:
        oracle = nonlocal_oracle(cfg, cfg.kernel_spec(d), hs[-1], [cfg.T])
        for (_, dd, h), (grid, q) in zip(jobs, results):
            if dd != d:
                continue
            ref = oracle.sample(grid.x[grid.interior], cfg.T)
            report.add(h, d, error_eh(q.real, ref, grid))
    return report.fill_orders()


def table_edelta(cfg: RunConfig, h_list=None, ratios=None) -> ErrorReport:
    """e_delta at time T with delta = M h; one local reference for the whole table."""
    hs = _check_h_list(cfg.h_list if h_list is None else h_list)
    ratios = cfg.ratios if ratios is None else ratios
    if not ratios:
        raise ValueError("ratio list is empty")
    if any(int(M) != M or M < 1 for M in ratios):
        raise ValueError("ratios must be positive integers")
    report = ErrorReport("edelta", cfg.T)
    sol = local_oracle(cfg, cfg.kernel_spec(hs[-1]), hs[-1], [cfg.T])
    jobs = [(cfg, M * h, h) for M in ratios for h in hs]
    for (_, d, h), (grid, q) in zip(jobs, _map(cfg, jobs)):
        report.add(h, d, error_edelta(q.real, np.real(sol.sample(grid.x, cfg.T)), grid))
    return report.fill_orders(key=lambda r: round(r.delta / r.h))


# -- validation ----------------------------------------------------------------------------


@dataclass
class Validation:
    diagnostics: ContourDiagnostics
    checks: dict  # name -> (ok, detail)

    @property
    def passed(self) -> bool:
        return self.diagnostics.passed

    def lines(self) -> list[str]:
        out = list(self.diagnostics.lines())
        for name, (ok, detail) in self.checks.items():
            out.append(f"{name:<19}: {'ok' if ok else 'VIOLATED'} ({detail})")
        return out


def validate_config(cfg: RunConfig) -> Validation:
    """Contour diagnostics plus the support/homogeneity assumptions; report only."""
    kernel = cfg.kernel_spec()
    contour = build_contour(cfg.omega, cfg.mu, cfg.nu, cfg.m)
    diag = validate_contour(contour, cfg.pml, kernel.kind)
    prof = cfg.profile
    psi0, psi1 = initial_data(cfg.data)
    checks = {}

    x = np.linspace(-prof.outer, prof.outer, 8001)
    v0 = np.abs(psi0(x))
    peak = v0.max()
    outside = np.abs(x) >= prof.l - kernel.delta
    ratio = float(v0[outside].max() / peak) if peak > 0 else 0.0
    checks["A1 psi0 support"] = (ratio <= 1e-6, f"max |psi0| within delta of the layer = {ratio:.2e} of peak")
    v1 = np.abs(psi1(x))
    r1 = float(v1[np.abs(x) >= prof.l].max() / v1.max()) if v1.max() > 0 else 0.0
    checks["A1 psi1 support"] = (r1 <= 1e-6, f"max |psi1| in the layer = {r1:.2e} of peak")
    width = 2.0 * prof.l
    checks["A2 horizon"] = (kernel.max_support <= width, f"support {kernel.max_support:g} vs x_r - x_l = {width:g}")
    if kernel.kind is KernelKind.INHOMOGENEOUS:
        b = np.linspace(prof.l, prof.outer + kernel.max_support, 201)
        mu = np.array([local_coefficient(kernel, v) for v in b])
        var = float((mu.max() - mu.min()) / mu.max())
        checks["A3 homogeneity"] = (var <= 1e-3, f"relative variation of sigma_loc outside D = {var:.2e}")
    else:
        checks["A3 homogeneity"] = (True, "homogeneous kernel")
    return Validation(diag, checks)
