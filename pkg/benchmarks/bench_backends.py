"""Compare the numba and pure-numpy backends on assembly and time stepping.

    python benchmarks/bench_backends.py --h-exp 6 --m 100 --steps 300

Each backend runs the same problem; the script reports wall times and the
largest difference between the two results.
"""
from __future__ import annotations

import argparse
import time
import warnings

import numpy as np

from nlpml import _accel
from nlpml.config import initial_data, preset
from nlpml.discretize import SupportWarning, assemble_system, build_grid
from nlpml.integrate import init_state
from nlpml.integrate import _advance
from nlpml.talbot import build_contour


def _timed(fn, repeat: int = 1):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(example: str, h: float, m: int, steps: int, tau: float, repeat: int) -> list[tuple]:
    cfg = preset(example, m=m, h=h, tau=tau)
    kernel = cfg.kernel_spec()
    grid = build_grid(cfg.profile, kernel.max_support, h)
    contour = build_contour(cfg.omega, cfg.mu, cfg.nu, m)
    psi0, psi1 = initial_data(cfg.data)
    backends = ["numba", "numpy"] if _accel.HAVE_NUMBA else ["numpy"]
    rows = []
    results = {}
    for be in backends:
        def assemble():
            return assemble_system(grid, kernel, cfg.profile, cfg.pml, contour, psi0, psi1, backend=be)

        if be == "numba":
            assemble()  # compile outside the timing
        t_asm, system = _timed(assemble, repeat)

        def stepping():
            state = init_state(system, tau)
            _advance(system, state, steps, half_sum=False, backend=be)
            return state.q

        if be == "numba":
            stepping()
        t_step, q = _timed(stepping, repeat)
        results[be] = (system, q)
        rows.append((be, t_asm, t_step))
    if len(results) == 2:
        (sa, qa), (sb, qb) = results["numba"], results["numpy"]
        d_asm = float(np.max(np.abs(sa.pml_bands - sb.pml_bands), initial=0.0))
        d_q = float(np.max(np.abs(qa - qb)))
        rows.append(("max|diff|", d_asm, d_q))
    return rows


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--example", default="ex1", choices=("ex1", "ex2", "ex3"))
    p.add_argument("--h-exp", type=int, default=6, help="h = 2^-h_exp")
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--tau", type=float, default=1.0 / 3000)
    p.add_argument("--repeat", type=int, default=1)
    args = p.parse_args(argv)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SupportWarning)
        rows = bench(args.example, 2.0**-args.h_exp, args.m, args.steps, args.tau, args.repeat)
    print(f"{args.example}: h=2^-{args.h_exp}, m={args.m}, {args.steps} steps")
    print(f"{'backend':<10} {'assembly':>12} {'stepping':>12}")
    for name, a, s in rows:
        if name == "max|diff|":
            print(f"{name:<10} {a:>12.3e} {s:>12.3e}")
        else:
            print(f"{name:<10} {a:>11.3f}s {s:>11.3f}s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
