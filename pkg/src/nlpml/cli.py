"""Command line entry point.

    nlpml run          --config ex1.cfg --output-dir out/
    nlpml table-eh     --config eh.cfg
    nlpml table-edelta --config edelta.cfg
    nlpml validate     --config ex2.cfg

Exit codes: 0 success, 2 configuration/validation failure, 3 numerical blow-up.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config, preset
from .discretize import ContourValidationError, GridError
from .integrate import BlowUpError

log = logging.getLogger("nlpml")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BLOWUP = 3


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_snapshot(path: Path, x, q, ref=None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("x,re_q,im_q,ref\n" if ref is not None else "x,re_q,im_q\n")
        for i in range(len(x)):
            row = [_fmt(x[i]), _fmt(q[i].real), _fmt(q[i].imag)]
            if ref is not None:
                row.append(_fmt(ref[i]))
            fh.write(",".join(row) + "\n")


def write_manifest(path: Path, manifest: dict) -> None:
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o))


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else preset(args.example)
    if args.output_dir:
        cfg.output_dir = str(args.output_dir)
    return cfg


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(cfg: RunConfig) -> int:
    from .experiments import run_config

    res = run_config(cfg)
    out = _outdir(cfg)
    tr = res.trajectory
    x = res.system.grid.x
    for t, q in zip(tr.times, tr.snapshots):
        write_snapshot(out / f"snapshot_t{t:.6g}.csv", x, q, res.reference.get(t))
    write_manifest(out / "manifest.json", res.manifest())
    log.info("wrote %d snapshots to %s (imag ratio %.2e)", len(tr.times), out, tr.imag_ratio)
    if not tr.ok:
        log.error("blow-up at step %s", tr.failed_step)
        return EXIT_BLOWUP
    return EXIT_OK


def _table(cfg: RunConfig, which: str) -> int:
    from .experiments import table_edelta, table_eh

    report = table_eh(cfg) if which == "eh" else table_edelta(cfg)
    out = _outdir(cfg)
    name = f"table_{which}.csv"
    (out / name).write_text(report.to_csv())
    write_manifest(out / f"table_{which}_manifest.json", {"config": cfg.to_dict(), "metric": which, "time": cfg.T})
    sys.stdout.write(report.to_csv())
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    from .experiments import validate_config

    v = validate_config(cfg)
    for line in v.lines():
        print(line)
    return EXIT_OK if v.passed else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlpml", description="Nonlocal wave equation with nonlocal PMLs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "simulate and write snapshot CSVs plus a manifest"),
        ("table-eh", "e_h refinement table against the large-domain reference"),
        ("table-edelta", "e_delta table (delta = M h) against the local PML reference"),
        ("validate", "contour and assumption checks"),
    ):
        p = sub.add_parser(name, help=help_)
        src = p.add_mutually_exclusive_group()
        src.add_argument("--config", type=Path, help="key=value config file")
        src.add_argument("--example", choices=("ex1", "ex2", "ex3", "custom"), default="ex1",
                         help="preset used when no config file is given")
        p.add_argument("--output-dir", type=Path)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        if args.command == "validate":
            return cmd_validate(cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if args.command == "run":
                return cmd_run(cfg)
            return _table(cfg, "eh" if args.command == "table-eh" else "edelta")
    except (ConfigError, ContourValidationError, GridError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BlowUpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
