"""Command-line entry point: ``drcbl run`` and ``drcbl compare``."""

from __future__ import annotations

import argparse
import json
import sys

from drcbl.config import load_overrides
from drcbl.harness import ExperimentSpec, compare, read_results, run_benchmark


def _dims(text: str) -> tuple[int, int]:
    try:
        m, n = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("dims must look like M,N") from None
    return m, n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drcbl", description="Competitive bilevel CMA-ES benchmark runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded benchmark")
    run.add_argument("--problem", required=True, help="smd1..smd12 or synthq-D")
    run.add_argument("--dims", required=True, type=_dims, help="M,N")
    run.add_argument("--algo", choices=("drc", "nested"), default="drc")
    run.add_argument("--runs", type=int, default=21)
    run.add_argument("--seed", type=int, default=0, help="first seed; runs use seed..seed+runs-1")
    run.add_argument("--out", help="results CSV")
    run.add_argument("--summary", help="summary JSON")
    run.add_argument("--trace", help="trace CSV of the first run")
    run.add_argument("--config", help="flat JSON of config overrides")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")
    run.add_argument("--wall-time", action="store_true", help="record wall time (breaks byte-identical reruns)")

    cmp = sub.add_parser("compare", help="rank-sum test between two results CSVs")
    cmp.add_argument("a")
    cmp.add_argument("b")
    cmp.add_argument("--metric", default="fes_total")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            spec = ExperimentSpec(
                problem=args.problem,
                dims=args.dims,
                algo=args.algo,
                runs=args.runs,
                seed0=args.seed,
                overrides=load_overrides(args.config) if args.config else {},
                results_path=args.out,
                summary_path=args.summary,
                trace_path=args.trace,
                jobs=args.jobs,
                record_wall_time=args.wall_time,
            )
            outcome = run_benchmark(spec)
            print(json.dumps(outcome.summary["metrics"], indent=2, sort_keys=True))
        else:
            result = compare(read_results(args.a), read_results(args.b), args.metric)
            print(json.dumps(result, indent=2))
    except (KeyError, ValueError, OSError) as exc:
        print(f"drcbl: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
