"""Command-line front end: run, converge, audit and reference."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, fields, replace
from pathlib import Path

from .analysis import RunConfig, convergence_study, run_problem
from .csvio import format_solution, write_solution_csv
from .errors import ConfigurationError, PampaError
from .problems import PROBLEMS, get_problem, reference_path, reference_solution

log = logging.getLogger("pampa")

EXIT_OK, EXIT_ABORT, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _on_off(text):
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def _limiter(text):
    text = text.replace("-", "_")
    if text not in ("bp", "off", "first_order"):
        raise argparse.ArgumentTypeError("expected bp, off or first-order")
    return text


def _cells_list(text):
    try:
        return [int(c) for c in text.split(",") if c]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad cell list {text!r}") from None


def _common(p: argparse.ArgumentParser, cells_type=int):
    p.add_argument("--config", help="JSON file of flat key-value settings; flags override it")
    p.add_argument("--problem", choices=sorted(PROBLEMS))
    p.add_argument("--cells", type=cells_type)
    p.add_argument("--cfl", type=float)
    p.add_argument("--bounds", choices=["strict", "relaxed"])
    p.add_argument("--lmp", type=_on_off, metavar="{on,off}")
    p.add_argument("--limiter", type=_limiter, metavar="{bp,off,first-order}")
    p.add_argument("--tfinal", type=float)
    p.add_argument("--out")
    p.add_argument("--unsafe", action="store_true", default=None,
                   help="allow the unlimited scheme (--limiter off)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pampa", description="Bound-preserving point-average solver for 1D conservation laws")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _common(sub.add_parser("run", help="run one problem and write the solution CSV"))
    p = sub.add_parser("converge", help="mesh-refinement study with error and rate table")
    _common(p, _cells_list)
    p.add_argument("--reference", type=int, help="fine-mesh reference cell count (default: exact solution)")
    p.add_argument("--component", type=int, default=0)
    _common(sub.add_parser("audit", help="run one problem and report stage-wise bound/positivity checks"))
    p = sub.add_parser("reference", help="compute (or load) the cached fine-mesh reference")
    p.add_argument("--problem", choices=sorted(PROBLEMS), required=True)
    p.add_argument("--cells", type=int, default=40000)
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


_KEYS = {"problem": "problem", "cells": "n_cells", "cfl": "cfl", "bounds": "bounds", "lmp": "lmp",
         "limiter": "limiter", "tfinal": "t_final", "out": "out", "unsafe": "unsafe"}


def load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a flat JSON object")
    names = {f.name for f in fields(RunConfig)}
    out = {}
    for key, value in data.items():
        name = _KEYS.get(key, key)
        if name not in names:
            raise ConfigurationError(f"unknown config key {key!r}")
        if name == "lmp" and isinstance(value, str):
            value = _on_off(value)
        if name == "limiter" and isinstance(value, str):
            value = _limiter(value)
        out[name] = value
    return out


def _settings(args) -> dict:
    merged = load_config(args.config) if args.config else {}
    for flag, name in _KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            merged[name] = value
    if "problem" not in merged:
        raise ConfigurationError("no problem given (use --problem or a config file)")
    return merged


def _progress(step, t, dt, field):
    if step % 1000 == 0:
        log.info("step %d  t=%.6g  dt=%.3e", step, t, dt)


def _cmd_run(args) -> int:
    cfg = RunConfig(**_settings(args)).validate()
    out = run_problem(cfg, progress=_progress)
    res = out.result
    print(f"{cfg.problem}: {out.grid.n_cells} cells, t={res.t:.6g}, {res.n_steps} steps, "
          f"{res.retries} retries", file=sys.stderr)
    if cfg.out:
        write_solution_csv(cfg.out, res.field, out.grid, out.spec.bc)
    else:
        sys.stdout.write(format_solution(res.field, out.grid, out.spec.bc))
    return EXIT_OK


def _cmd_converge(args) -> int:
    settings = _settings(args)
    meshes = settings.pop("n_cells", None) or [50, 100, 200, 400, 800]
    out_path = settings.pop("out", None)
    cfg = RunConfig(**settings).validate()
    table = convergence_study(cfg, meshes, n_fine=args.reference, component=args.component,
                              progress=lambda n, r: log.info("mesh %d done", n))
    print(table.to_text(), end="")
    if out_path:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(table.to_csv())
    return EXIT_OK


def _cmd_audit(args) -> int:
    cfg = RunConfig(**_settings(args)).validate()
    out = run_problem(cfg, progress=_progress)
    rep = out.audit
    print(json.dumps({"problem": cfg.problem, "n_cells": out.grid.n_cells, "clean": rep.clean, **asdict(rep)}, indent=2,
                     default=str))
    return EXIT_OK if rep.clean else EXIT_ABORT


def _cmd_reference(args) -> int:
    spec = get_problem(args.problem)
    grid, field = reference_solution(spec, args.cells)
    print(f"reference {spec.id} n={args.cells}: {reference_path(spec, args.cells)}", file=sys.stderr)
    if args.out:
        write_solution_csv(args.out, field, grid, spec.bc)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "converge": _cmd_converge, "audit": _cmd_audit,
               "reference": _cmd_reference}[args.command]
    try:
        return handler(args)
    except (ConfigurationError, TypeError) as exc:
        print(f"pampa: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PampaError as exc:
        print(f"pampa: solver aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
