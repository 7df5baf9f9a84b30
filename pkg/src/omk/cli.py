"""Command line entry point: ``omk run`` and ``omk validate``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import ConfigError
from .lindblad import predicted_dimension
from .runner import execute, header, render_json, summary
from .scenario import lindblad_dims, lindblad_points, load_scenario

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_validate(args) -> int:
    try:
        scen = load_scenario(args.scenario)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"scenario   {scen.name}")
    print(f"kind       {scen.kind}")
    print(f"solver     {scen.solver}")
    if scen.sweep_key:
        print(f"sweep      {scen.sweep_key}: {scen.n_points} points "
              f"[{scen.sweep_values[0]:.6g} .. {scen.sweep_values[-1]:.6g}]")
    else:
        print("sweep      none")
    bad = 0
    for i in range(scen.n_points):
        try:
            scen.system_params(i)
        except ValueError:
            bad += 1
    if bad:
        print(f"warning    {bad} point(s) outside the stable domain will be reported as failures")
    for i in lindblad_points(scen):
        dims = lindblad_dims(scen, scen.system_params(i))
        print(f"lindblad   point {i}: truncation {dims[0]}x{dims[1]}, "
              f"Liouvillian dimension {predicted_dimension(dims)}")
    print("columns    " + ", ".join(header(scen)))
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        scen = load_scenario(args.scenario)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.workers < 1:
        print("config error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = execute(scen, workers=args.workers)
    extra = {}
    if result.exit_code == EXIT_OK and args.seed_check:
        again = execute(scen, workers=args.workers)
        same = again.exit_code == EXIT_OK and again.csv_text == result.csv_text
        extra["seed_check"] = "identical" if same else "mismatch"
        if not same:
            result.status, result.exit_code = "nondeterministic", EXIT_SOLVER
            result.error = "repeated run produced different CSV output"
    json_path = out / f"{scen.name}.json"
    _write(json_path, render_json(summary(result, extra)))
    if result.exit_code != EXIT_OK:
        print(f"solver failure: {result.error}", file=sys.stderr)
        print(f"summary written to {json_path}", file=sys.stderr)
        return result.exit_code
    csv_path = out / f"{scen.name}.csv"
    _write(csv_path, result.csv_text)
    failed = sum(p.failure is not None for p in result.points)
    print(f"{scen.name}: {scen.n_points} point(s), {failed} soft failure(s)")
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="omk", description="Driven optomechanical polariton solver.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario and write CSV + JSON")
    r.add_argument("scenario")
    r.add_argument("--out", default=".", help="output directory (default: current directory)")
    r.add_argument("--workers", type=int, default=1, help="worker processes for sweep points")
    r.add_argument("--seed-check", action="store_true",
                   help="run twice and fail unless the CSV output is byte-identical")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("validate", help="parse and check a scenario without running it")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
