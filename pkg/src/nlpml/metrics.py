"""Discrete L2 errors over the physical interior (e_h) or the whole grid (e_delta),
and observed convergence orders for halving sequences."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .discretize import Grid1D

__all__ = ["ErrorRow", "ErrorReport", "rms", "error_eh", "error_edelta", "orders"]


def rms(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty node set")
    return float(np.sqrt(np.mean(np.abs(a - b) ** 2)))


def error_eh(num, ref, grid: Grid1D) -> float:
    """RMS over I = {n : |x_n| < l} of |num - ref|.

    ``num`` is the full N-vector; ``ref`` is either an N-vector or the values
    at the interior nodes only.
    """
    num = np.asarray(num)
    ref = np.asarray(ref)
    mask = grid.interior
    if not mask.any():
        raise ValueError("empty interior node set")
    if ref.shape[0] == grid.N:
        ref = ref[mask]
    return rms(num[mask], ref)


def error_edelta(num, local_ref, grid: Grid1D) -> float:
    """RMS over I and I_p (every unknown) of |num - local_ref|."""
    num = np.asarray(num)
    if num.shape[0] != grid.N:
        raise ValueError("num must hold all N unknowns")
    return rms(num, local_ref)


def orders(errors) -> list[tuple[float, float | None]]:
    """Observed orders log2(e(h)/e(h/2)) for pairs (h, e) on a halving sequence.

    The first (coarsest) entry gets ``None``.
    """
    pts = sorted(((float(h), float(e)) for h, e in errors), key=lambda t: -t[0])
    out: list[tuple[float, float | None]] = []
    for i, (h, e) in enumerate(pts):
        if e < 0 or not math.isfinite(e):
            raise ValueError(f"invalid error value {e!r}")
        if i == 0:
            out.append((h, None))
            continue
        hp, ep = pts[i - 1]
        if not math.isclose(hp / h, 2.0, rel_tol=1e-9):
            raise ValueError(f"not a halving sequence: {hp} -> {h}")
        out.append((h, math.log2(ep / e) if e > 0 and ep > 0 else math.nan))
    return out


@dataclass
class ErrorRow:
    h: float
    delta: float
    error: float
    order: float | None = None


@dataclass
class ErrorReport:
    """Rows of (h, delta, error, order); order is filled per column of equal
    ``group`` (delta for e_h sweeps, the ratio M for e_delta sweeps)."""

    metric: str  # "eh" or "edelta"
    time: float
    rows: list[ErrorRow] = field(default_factory=list)

    def add(self, h: float, delta: float, error: float) -> None:
        if error < 0:
            raise ValueError("errors are nonnegative")
        self.rows.append(ErrorRow(h, delta, error))

    def fill_orders(self, key=None) -> "ErrorReport":
        key = key or (lambda r: r.delta)
        groups: dict = {}
        for r in self.rows:
            groups.setdefault(key(r), []).append(r)
        for rows in groups.values():
            rows.sort(key=lambda r: -r.h)
            for r, (_, o) in zip(rows, orders([(r.h, r.error) for r in rows])):
                r.order = o
        return self

    def column(self, delta) -> list[ErrorRow]:
        return sorted((r for r in self.rows if r.delta == delta), key=lambda r: -r.h)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "delta", "error", "order"])
        for r in self.rows:
            w.writerow([repr(r.h), repr(r.delta), f"{r.error:.10e}", "" if r.order is None else f"{r.order:.6f}"])
        return buf.getvalue()
