"""Command line entry point.

    kinklab run <scenario.json> [--out DIR]
    kinklab sweep <template.json> --axis v0=0,0.2,0.4 [--axis h=0.1,0.05] [--out DIR]
    kinklab report <dir>

KINKLAB_THREADS caps sweep concurrency.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import EXIT_CONFIG, run_scenario_file, run_sweep


def _parse_axis(spec: str):
    if "=" not in spec:
        raise argparse.ArgumentTypeError(f"axis must look like name=v1,v2,... got {spec!r}")
    name, _, vals = spec.partition("=")
    try:
        values = [float(v) for v in vals.split(",") if v != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad axis values in {spec!r}: {exc}")
    if not values:
        raise argparse.ArgumentTypeError(f"axis {name!r} has no values")
    return name, values


def cmd_report(directory: str) -> int:
    root = Path(directory)
    manifests = sorted(root.rglob("manifest.json"))
    if not manifests:
        print(f"no manifests under {root}")
        return EXIT_CONFIG
    worst = 0
    for mf in manifests:
        data = json.loads(mf.read_text())
        if "cells" in data:
            print(f"{mf.parent}: sweep with {len(data['cells'])} cells")
            continue
        status = "PASS" if data.get("passed") else "FAIL"
        if not data.get("passed"):
            worst = 1
        print(f"{mf.parent}: {data.get('experiment')} [{status}] artifacts: {', '.join(data.get('artifacts', []))}")
        verdict_file = mf.parent / "verdict.json"
        if verdict_file.exists():
            verdict = json.loads(verdict_file.read_text())
            for fit in verdict.get("fits", []):
                print(f"    {fit['series']}: exponent {fit['exponent']:+.3f}")
    return worst


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kinklab", description="kink-stability numerical laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default=None)

    p_sweep = sub.add_parser("sweep", help="run a scenario template over parameter axes")
    p_sweep.add_argument("template")
    p_sweep.add_argument("--axis", action="append", type=_parse_axis, default=[],
                         help="axis spec like v0=0,0.2,0.4 (repeatable)")
    p_sweep.add_argument("--out", default=None)

    p_rep = sub.add_parser("report", help="summarize artifacts under a directory")
    p_rep.add_argument("directory")

    args = parser.parse_args(argv)
    if args.command == "run":
        return run_scenario_file(args.scenario, args.out)
    if args.command == "sweep":
        axes = {name: values for name, values in args.axis}
        return run_sweep(args.template, axes, args.out)
    return cmd_report(args.directory)


if __name__ == "__main__":
    sys.exit(main())
