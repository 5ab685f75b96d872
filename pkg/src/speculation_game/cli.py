"""Command line interface: ``simulate``, ``analyze`` and ``reproduce``."""
from __future__ import annotations

import argparse
import sys

from . import harness
from .config import ExperimentSpec, load_spec


def _spec(path):
    return load_spec(path) if path else ExperimentSpec()


def cmd_simulate(args):
    spec = _spec(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    if changes:
        spec = spec.replace(**changes)
    out = args.out or spec.output_dir
    result = harness.run_experiment(spec)
    harness.write_outputs(result, out)
    _summary(result.report, out)


def cmd_analyze(args):
    report = harness.analyze_directory(args.input, args.report)
    _summary(report, args.report)


def cmd_reproduce(args):
    result = harness.reproduce(args.figure, _spec(args.config), args.out)
    print(f"figure {args.figure}: wrote {', '.join(harness.FIGURES[args.figure][2])} to {args.out}")
    return result


def _summary(report, where):
    for fact in report.facts:
        print(f"{fact.verdict:>14}  {fact.name}")
    print(f"results in {where}")


def build_parser():
    parser = argparse.ArgumentParser(prog="speculation-game",
                                     description="Speculation Game market simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run seeded trials and write series, curves and report")
    sim.add_argument("--config", required=True, help="key = value configuration file")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--trials", type=int)
    sim.add_argument("--out", help="output directory (default: output_dir from the config)")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="recompute diagnostics from a simulate directory")
    ana.add_argument("--in", dest="input", required=True)
    ana.add_argument("--report", required=True, help="path of the JSON report to write")
    ana.set_defaults(func=cmd_analyze)

    rep = sub.add_parser("reproduce", help="write the data behind one figure (2-15)")
    rep.add_argument("--figure", type=int, required=True, choices=sorted(harness.FIGURES))
    rep.add_argument("--config")
    rep.add_argument("--out", required=True)
    rep.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (OSError, ValueError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0
