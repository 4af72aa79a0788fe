"""Command-line front end: ``run``, ``analyze`` and ``compare``.

Exit codes: 0 success, 1 usage error, 2 I/O error.  Config files are JSON
objects with :class:`~opcgame.experiments.ExperimentSpec` fields; command-line
flags override file fields.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .analysis import analyze
from .experiments import PRESETS, ExperimentSpec, StepTotals, compare_schemes, read_run_csv, run_experiment
from .network import Scenario

EXIT_USAGE = 1
EXIT_IO = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="opcgame", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    run = sub.add_parser("run", help="run a preset or a JSON experiment config")
    run.add_argument("target", help=f"preset name ({', '.join(PRESETS)}) or config.json")
    run.add_argument("--seed", type=int, help="first seed")
    run.add_argument("--seeds", type=int, help="number of consecutive seeds")
    run.add_argument("--steps", type=int)
    run.add_argument("--step-factor", type=float)
    run.add_argument("--workers", type=int)
    run.add_argument("--out", help="output directory (default results/<preset>)")

    an = sub.add_parser("analyze", help="uniqueness/convergence report for a scenario")
    an.add_argument("scenario", help="scenario JSON file")
    an.add_argument("--varsigma", type=float, default=1e-4)
    an.add_argument("--budget", type=float, default=3.0)
    an.add_argument("--price", type=float, default=100.0)
    an.add_argument("--out", help="write the report here instead of stdout")

    cmp_ = sub.add_parser("compare", help="percentage gaps between two run CSV files")
    cmp_.add_argument("run_a")
    cmp_.add_argument("run_b")
    cmp_.add_argument("--out", help="write the comparison CSV here instead of stdout")
    return parser


def _spec_from_args(args) -> ExperimentSpec:
    fields: dict = {}
    target = args.target
    if target.endswith(".json") or Path(target).is_file():
        try:
            fields = json.loads(Path(target).read_text())
        except OSError:
            raise
        except json.JSONDecodeError as exc:
            raise UsageError(f"{target}: invalid JSON ({exc})") from None
        if not isinstance(fields, dict) or "preset" not in fields:
            raise UsageError(f"{target}: config must be an object with a 'preset' field")
    else:
        fields["preset"] = target
    if args.seed is not None or args.seeds is not None:
        first = args.seed if args.seed is not None else 0
        count = args.seeds if args.seeds is not None else 1
        fields["seeds"] = list(range(first, first + count))
    for name in ("steps", "step_factor", "workers"):
        value = getattr(args, name)
        if value is not None:
            fields[name] = value
    fields["out_dir"] = args.out or fields.get("out_dir") or str(Path("results") / fields["preset"])
    try:
        return ExperimentSpec.from_dict(fields)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_run(args) -> int:
    spec = _spec_from_args(args)
    result = run_experiment(spec)
    print(json.dumps({"out_dir": spec.out_dir, "ensemble": result.manifest["ensemble"]}, indent=2))
    return 0


def _cmd_analyze(args) -> int:
    try:
        scenario = Scenario.load(args.scenario)
    except (ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"{args.scenario}: {exc}") from None
    report = analyze(scenario, varsigma=args.varsigma, power_budgets=args.budget,
                     prices=args.price)
    _emit(report.to_json(), args.out)
    return 0


def _cmd_compare(args) -> int:
    try:
        a = StepTotals.from_rows(read_run_csv(args.run_a))
        b = StepTotals.from_rows(read_run_csv(args.run_b))
        comparison = compare_schemes(a, b)
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from None
    _emit(comparison.to_csv(), args.out)
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
        handler = {"run": _cmd_run, "analyze": _cmd_analyze, "compare": _cmd_compare}
        return handler[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
