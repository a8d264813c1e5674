"""Command-line entry point.

    isac-ed <experiment> --scenario FILE --out FILE [--trials N] [--seed S]
            [--model exact|gamma|gaussian|auto]
    isac-ed conformance --out FILE
    isac-ed print-scene --scenario FILE

Exit status: 0 success, 2 unknown experiment or bad usage, 3 malformed
scenario, 4 unwritable output, 5 scenario unsuitable for the experiment.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import experiments as ex
from .scenario import MODEL_CHOICES, ScenarioError, load_scenario
from .tradeoff import InfeasibleQueryError
from .zp import PreconditionError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SCENARIO = 3
EXIT_OUTPUT = 4
EXIT_UNSUITABLE = 5

log = logging.getLogger("isac_ed")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    names = sorted(ex.EXPERIMENTS) + ["conformance", "print-scene"]
    p = _Parser(prog="isac-ed", description="ZP/CP-OFDM energy-detection experiments.")
    p.add_argument("experiment", help="one of: " + ", ".join(names))
    p.add_argument("--scenario", help="scenario file (key = value)")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--trials", type=int, help="Monte Carlo trials (overrides sim.trials)")
    p.add_argument("--seed", type=int, help="master seed (overrides sim.seed)")
    p.add_argument("--model", choices=MODEL_CHOICES, help="PD model (overrides detect.model)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    name = args.experiment

    if name == "conformance":
        if not args.out:
            parser.error("conformance needs --out")
        header, rows = ex.conformance_rows()
        try:
            ex.write_atomic(args.out, ex.render_csv(header, rows))
        except ex.OutputError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_OUTPUT
        for q, (bad, total) in ex.conformance_summary(rows).items():
            print(f"{q}: {bad} mismatches / {total}")
        return EXIT_OK

    if name != "print-scene" and name not in ex.EXPERIMENTS:
        print(f"error: unknown experiment {name!r}; choose from "
              f"{', '.join(sorted(ex.EXPERIMENTS))}, conformance, print-scene", file=sys.stderr)
        return EXIT_USAGE
    if not args.scenario:
        parser.error(f"{name} needs --scenario")
    try:
        sc = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_SCENARIO

    if name == "print-scene":
        print(ex.describe_scene(sc), end="")
        return EXIT_OK
    if not args.out:
        parser.error(f"{name} needs --out")
    if args.trials is not None and args.trials < 1:
        parser.error("--trials must be >= 1")

    opts = ex.RunOptions(args.trials, args.seed, args.model)
    log.info("running %s on %s", name, args.scenario)
    try:
        header, rows = ex.run_experiment(name, sc, opts)
    except (ex.ExperimentError, PreconditionError, InfeasibleQueryError) as exc:
        print(f"error: {name}: {exc}", file=sys.stderr)
        return EXIT_UNSUITABLE
    try:
        ex.write_atomic(args.out, ex.render_csv(header, rows))
    except ex.OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    log.info("wrote %d rows to %s", len(rows), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
