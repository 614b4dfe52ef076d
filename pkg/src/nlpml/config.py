"""Run configuration: example presets and the key=value config file format.

A config file holds one ``key = value`` pair per line; ``#`` starts a comment.
Numbers may be written as simple arithmetic (``1/12000``, ``2^-6``); lists are
comma separated. Unknown keys are rejected.
"""
from __future__ import annotations

import ast
import dataclasses
import json
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .kernels import KernelSpec, exponential_kernel, gaussian_kernel, inhomogeneous_kernel
from .stretch import AbsorberProfile, PmlParams

__all__ = ["RunConfig", "ConfigError", "EXAMPLES", "preset", "load_config", "parse_config", "config_from_dict", "initial_data"]

EXAMPLES = ("ex1", "ex2", "ex3", "custom")
KERNELS = ("exponential", "gaussian", "inhomogeneous")
DATA = ("zero", "ex1", "ex2")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    example: str = "custom"
    kernel: str = "exponential"
    data: str = "zero"
    l: float = 1.5
    d_p: float = 1.0
    delta: float = 0.5
    h: float = 2.0**-6
    tau: float = 1.0 / 12000
    T: float = 2.0
    z_re: float = 20.0
    z_im: float = 0.0
    m: int = 400
    omega: float = 0.0
    mu: float = 10.0
    nu: float = 1.0
    c0: float = 0.07
    cutoff: float = 1.0
    snapshot_times: list[float] = field(default_factory=lambda: [2.0])
    ref_halfwidth: float | None = None
    ref_h: float | None = None
    ref_richardson: bool = True
    reference: str = "none"
    local_refine: int = 8
    h_list: list[float] = field(default_factory=lambda: [2.0**-4, 2.0**-5, 2.0**-6])
    delta_list: list[float] = field(default_factory=lambda: [0.5, 0.2])
    ratios: list[int] = field(default_factory=lambda: [1, 2])
    quad_order: int = 4
    half_sum: bool = True
    include_correction: bool = True
    workers: int = 1
    output_dir: str = "out"
    m_reduced: bool = False

    @property
    def z(self) -> complex:
        return complex(self.z_re, self.z_im)

    @property
    def profile(self) -> AbsorberProfile:
        return AbsorberProfile(self.l, self.d_p)

    @property
    def pml(self) -> PmlParams:
        return PmlParams(self.z)

    def kernel_spec(self, delta: float | None = None) -> KernelSpec:
        d = self.delta if delta is None else delta
        if self.kernel == "exponential":
            return exponential_kernel(d, self.c0, self.cutoff)
        if self.kernel == "gaussian":
            return gaussian_kernel(d)
        return inhomogeneous_kernel(d)

    def validate(self) -> "RunConfig":
        if self.example not in EXAMPLES:
            raise ConfigError(f"example must be one of {EXAMPLES}")
        if self.kernel not in KERNELS:
            raise ConfigError(f"kernel must be one of {KERNELS}")
        if self.data not in DATA:
            raise ConfigError(f"data must be one of {DATA}")
        if self.reference not in ("none", "nonlocal", "local"):
            raise ConfigError("reference must be none, nonlocal or local")
        for name in ("l", "d_p", "delta", "h", "tau", "mu", "nu", "c0", "cutoff"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.T < 0:
            raise ConfigError("T must be non-negative")
        if self.z_re < 0:
            raise ConfigError("Re z must be non-negative")
        if self.m < 2:
            raise ConfigError("m must be at least 2")
        if self.local_refine < 1 or self.workers < 1 or self.quad_order < 1:
            raise ConfigError("local_refine, workers and quad_order must be positive")
        if any(t < 0 or t > self.T + 1e-12 for t in self.snapshot_times):
            raise ConfigError("snapshot times must lie in [0, T]")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _presets() -> dict[str, dict]:
    common = dict(tau=1.0 / 12000, nu=1.0, h=2.0**-8)
    return {
        "ex1": dict(common, kernel="exponential", data="ex1", l=1.5, d_p=1.0, z_re=20.0, z_im=0.0, T=3.0,
                    mu=10.0, m=400, omega=-5.0, delta=0.5, snapshot_times=[1.0, 2.0, 3.0]),
        "ex2": dict(common, kernel="gaussian", data="ex2", l=2.0, d_p=2.0, z_re=10.0, z_im=0.0, T=4.0,
                    mu=10.0, m=800, omega=-6.0, delta=0.5, snapshot_times=[1.0, 2.0, 3.0, 4.0]),
        "ex3": dict(common, kernel="inhomogeneous", data="ex2", l=2.0, d_p=2.0, z_re=10.0, z_im=0.0, T=4.0,
                    mu=10.0, m=400, omega=-6.0, delta=0.5, snapshot_times=[1.0, 2.0, 3.0, 4.0]),
        "custom": {},
    }


PRESETS = _presets()


def preset(example: str, **overrides) -> RunConfig:
    if example not in PRESETS:
        raise ConfigError(f"unknown example {example!r}")
    cfg = RunConfig(example=example, **PRESETS[example])
    for k, v in overrides.items():
        if not hasattr(cfg, k):
            raise ConfigError(f"unknown key {k!r}")
        setattr(cfg, k, v)
    if "T" in overrides and "snapshot_times" not in overrides:
        # preset snapshot times follow a shortened horizon
        cfg.snapshot_times = [t for t in cfg.snapshot_times if t <= cfg.T] or [cfg.T]
    base_m = PRESETS[example].get("m")
    cfg.m_reduced = bool(base_m is not None and cfg.m < base_m)
    return cfg.validate()


def initial_data(name: str) -> tuple[Callable, Callable]:
    if name == "ex1":
        return (lambda x: np.exp(-20 * (x - 0.2) ** 2) + np.exp(-20 * (x + 0.2) ** 2),
                lambda x: 100 * x**2 * np.exp(-20 * x**2))
    if name == "ex2":
        return (lambda x: np.exp(-25 * (x - 0.2) ** 2) + np.exp(-25 * (x + 0.2) ** 2),
                lambda x: 50 * x * np.exp(-25 * x**2))
    return (lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            lambda x: np.zeros_like(np.asarray(x, dtype=float)))


# -- parsing --------------------------------------------------------------------

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.operand))
    raise ValueError("not an arithmetic expression")


def _number(text: str) -> float:
    try:
        val = _eval(ast.parse(text.strip().replace("^", "**"), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, TypeError) as exc:
        raise ConfigError(f"cannot parse number {text!r}") from exc
    if not math.isfinite(val):
        raise ConfigError(f"non-finite number {text!r}")
    return float(val)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse boolean {text!r}")


def _convert(name: str, text: str):
    ftype = {f.name: f.type for f in dataclasses.fields(RunConfig)}[name]
    if ftype in ("float", "float | None"):
        if ftype.endswith("None") and text.strip().lower() in ("", "auto", "none"):
            return None
        return _number(text)
    if ftype == "int":
        v = _number(text)
        if v != int(v):
            raise ConfigError(f"{name} must be an integer")
        return int(v)
    if ftype == "bool":
        return _bool(text)
    if ftype == "list[float]":
        return [_number(t) for t in text.split(",") if t.strip()]
    if ftype == "list[int]":
        return [int(_number(t)) for t in text.split(",") if t.strip()]
    return text.strip()


def parse_config(text: str) -> RunConfig:
    """Parse key=value text; ``example`` selects the preset the other keys override."""
    pairs: dict[str, str] = {}
    known = {f.name for f in dataclasses.fields(RunConfig)} - {"m_reduced"}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = val
    example = pairs.pop("example", "custom")
    overrides = {k: _convert(k, v) for k, v in pairs.items()}
    return preset(example, **overrides)


def config_from_dict(data: dict) -> RunConfig:
    """Rebuild a config from ``RunConfig.to_dict`` output (e.g. a run manifest)."""
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    cfg = RunConfig(**data)
    return cfg.validate()


def load_config(path: str | Path) -> RunConfig:
    """Read a key=value config, or a run manifest (JSON with a ``config`` entry)."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return config_from_dict(data.get("config", data))
    return parse_config(text)
