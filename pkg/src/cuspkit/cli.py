"""Command-line interface: ``cuspkit verify | profile | spectrum | density``.

Reports are JSON, tables are CSV.  A ``--config`` JSON file supplies the
same keys as the flags (``"grid-min"`` or ``"grid_min"``); flags given on
the command line take precedence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import fields

import numpy as np

from .errors import CuspkitError
from .pipeline import (PROFILE_HEADER, SPECTRUM_HEADER, RunConfig, density_rows, exit_code, profile_rows,
                       spectrum_rows, verify)


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("run configuration")
    g.add_argument("--config", help="JSON file with default values for the flags below")
    g.add_argument("--model", help="state such as '2p:Z=1', 'product:1s:Z=1:N=2', or a model JSON path")
    g.add_argument("--nucleus", type=int, help="anchor nucleus index (default 0)")
    g.add_argument("--scheme", choices=("closed-form", "tensor-quadrature", "monte-carlo"))
    g.add_argument("--samples", type=int, help="Monte Carlo samples per point")
    g.add_argument("--seed", type=int)
    g.add_argument("--grid-min", type=float)
    g.add_argument("--grid-max", type=float)
    g.add_argument("--grid-points", type=int)
    g.add_argument("--rule-degree", type=int, choices=(5, 11, 17, 23, 29))
    g.add_argument("--lmax", type=int)
    g.add_argument("--tol", type=float, help="override every check tolerance")
    g.add_argument("--out", help="output file (default stdout)")
    g.add_argument("--deterministic", action="store_true", default=None,
                   help="omit timestamps so identical runs give identical bytes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cuspkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the cusp identity checks and regularity probe (JSON)")
    _common(p)

    p = sub.add_parser("profile", help="rho, eta and mu along rays (CSV)")
    _common(p)
    p.add_argument("--directions", default="1,0,0", help="';'-separated vectors, e.g. '1,0,0;0,0,1'")
    p.add_argument("--radii", help="comma-separated radii (default: the run grid)")

    p = sub.add_parser("spectrum", help="harmonic coefficients of phi1 and phi2 (CSV)")
    _common(p)

    p = sub.add_parser("density", help="batch densities for points read as x,y,z CSV (CSV)")
    _common(p)
    p.add_argument("--points", help="CSV file of x,y,z rows (default stdin)")
    p.add_argument("--with-h", action="store_true", help="also evaluate h and its error")
    return parser


def config_from_args(args) -> RunConfig:
    base = RunConfig.load(args.config).to_dict() if args.config else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            base[f.name.replace("_", "-")] = v
    return RunConfig.from_dict(base)


def _vectors(text: str) -> list:
    return [np.array([float(t) for t in part.split(",")]) for part in text.split(";") if part.strip()]


def _csv(header, rows, comments=()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except CuspkitError as exc:
        print(f"cuspkit: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "verify":
            report = verify(cfg)
            _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", cfg.out)
            code = exit_code(report)
            s = report["summary"]
            print(f"cuspkit: {s['executed']} checks executed, {s['skipped']} skipped, "
                  f"{len(report['errors'])} errors; exit {code}", file=sys.stderr)
            return code
        if args.command == "profile":
            radii = ([float(t) for t in args.radii.split(",")] if args.radii
                     else np.geomspace(cfg.grid_min, cfg.grid_max, cfg.grid_points))
            rows = profile_rows(cfg, _vectors(args.directions), radii)
            _emit(_csv(PROFILE_HEADER, rows), cfg.out)
            return 0
        if args.command == "spectrum":
            rows, verdicts = spectrum_rows(cfg)
            notes = [f"{q} truncation l<={v['max_degree']}: {'ok' if v['truncated'] else 'FAILED'} "
                     f"(relative tail {v['relative_tail']:.3e})" for q, v in verdicts.items()]
            _emit(_csv(SPECTRUM_HEADER, rows, notes), cfg.out)
            return 0 if all(v["truncated"] for v in verdicts.values()) else 1
        if args.command == "density":
            src = open(args.points) if args.points else sys.stdin
            with src:
                pts = [[float(t) for t in row[:3]] for row in csv.reader(src)
                       if row and not row[0].lstrip().startswith(("#", "x"))]
            header, rows = density_rows(cfg, pts, args.with_h)
            _emit(_csv(header, rows), cfg.out)
            return 0
    except CuspkitError as exc:
        print(f"cuspkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
