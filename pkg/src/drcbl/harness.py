"""Benchmark runner: repeated seeded runs, result files and summaries."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from drcbl.baseline import nested_baseline_solve
from drcbl.config import RunConfig
from drcbl.metrics import aggregate, rank_sum_test
from drcbl.problems import get_problem
from drcbl.scheduler import TRACE_HEADER, RunResult, solve

RESULTS_HEADER = ("seed", "acc_u", "acc_l", "fes_u", "fes_l", "fes_total", "wall_s", "upper_gens")
METRICS = ("acc_u", "acc_l", "fes_u", "fes_l", "fes_total", "upper_gens")
ALGORITHMS = {"drc": solve, "nested": nested_baseline_solve}
RANK_SUM_LABEL = "Wilcoxon rank-sum, unpaired, two-sided"


@dataclass(frozen=True)
class ExperimentSpec:
    problem: str
    dims: tuple[int, int]
    algo: str = "drc"
    runs: int = 21
    seed0: int = 0
    overrides: dict = field(default_factory=dict)
    results_path: str | None = None
    summary_path: str | None = None
    trace_path: str | None = None
    jobs: int = 1
    # wall time is the one non-deterministic column; off keeps reruns byte-identical
    record_wall_time: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if len(self.dims) != 2 or min(self.dims) < 1:
            raise ValueError("dims must be two positive integers")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")

    def config(self) -> RunConfig:
        m, n = self.dims
        return RunConfig.for_dims(m, n, **self.overrides)


@dataclass(frozen=True)
class RunRecord:
    seed: int
    acc_u: float
    acc_l: float
    fes_u: int
    fes_l: int
    fes_total: int
    wall_s: float
    upper_gens: int
    executions: int = 0

    def csv_fields(self) -> list[str]:
        return [str(self.seed), repr(self.acc_u), repr(self.acc_l), str(self.fes_u), str(self.fes_l),
                str(self.fes_total), repr(self.wall_s), str(self.upper_gens)]


@dataclass
class BenchmarkOutcome:
    records: list[RunRecord]
    summary: dict
    first_result: RunResult


def _run_one(spec: ExperimentSpec, seed: int) -> tuple[RunRecord, RunResult]:
    m, n = spec.dims
    problem = get_problem(spec.problem, m, n)
    start = time.perf_counter()
    result = ALGORITHMS[spec.algo](problem, spec.config(), seed=seed)
    wall = time.perf_counter() - start if spec.record_wall_time else 0.0
    record = RunRecord(
        seed=seed,
        acc_u=result.acc_u,
        acc_l=result.acc_l,
        fes_u=result.fes_u,
        fes_l=result.fes_l,
        fes_total=result.fes_total,
        wall_s=wall,
        upper_gens=result.generations,
        executions=result.executions,
    )
    return record, result


def _run_seed(args):
    spec, seed = args
    record, result = _run_one(spec, seed)
    # only the first run's trace is ever written; drop the rest before pickling
    return record, result if seed == spec.seed0 else None


def run_benchmark(spec: ExperimentSpec) -> BenchmarkOutcome:
    """Run ``spec.runs`` seeds, then write the requested files in seed order."""
    m, n = spec.dims
    get_problem(spec.problem, m, n)  # fail fast on an unknown id
    spec.config()
    for path in (spec.results_path, spec.summary_path, spec.trace_path):
        if path:
            _check_parent(path)
    seeds = [spec.seed0 + i for i in range(spec.runs)]
    jobs = [(spec, s) for s in seeds]
    if spec.jobs > 1 and spec.runs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            outputs = list(pool.map(_run_seed, jobs))
    else:
        outputs = [_run_seed(j) for j in jobs]
    records = [rec for rec, _ in outputs]
    first = outputs[0][1]
    summary = summarize(spec, records)

    if spec.results_path:
        _write(spec.results_path, results_csv(records))
    if spec.summary_path:
        _write(spec.summary_path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if spec.trace_path:
        _write(spec.trace_path, trace_csv(first))
    return BenchmarkOutcome(records, summary, first)


def _check_parent(path) -> None:
    parent = Path(path).parent
    if not parent.is_dir():
        raise FileNotFoundError(f"output directory {parent} does not exist")


def _write(path, text: str) -> None:
    Path(path).write_text(text, newline="")


def results_csv(records: list[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULTS_HEADER)
    for rec in records:
        writer.writerow(rec.csv_fields())
    return buf.getvalue()


def trace_csv(result: RunResult) -> str:
    lines = [TRACE_HEADER] + [e.csv_row() for e in result.trace]
    return "\n".join(lines) + "\n"


def summarize(spec: ExperimentSpec, records: list[RunRecord]) -> dict:
    metrics = {}
    for name in METRICS + (("wall_s",) if spec.record_wall_time else ()):
        med, iqr = aggregate([getattr(r, name) for r in records])
        metrics[name] = {"median": med, "iqr": iqr}
    return {
        "problem": spec.problem,
        "dims": list(spec.dims),
        "algo": spec.algo,
        "runs": spec.runs,
        "seeds": [r.seed for r in records],
        "metrics": metrics,
        "executions": [r.executions for r in records],
        "trace_run": {"seed": records[0].seed, "executions": records[0].executions},
        "significance_test": RANK_SUM_LABEL,
        "quantiles": "linear interpolation",
    }


def read_results(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or tuple(rows[0].keys()) != RESULTS_HEADER:
        raise ValueError(f"{path} is not a results file")
    out = []
    for row in rows:
        out.append({k: (float(v) if k in ("acc_u", "acc_l", "wall_s") else int(v)) for k, v in row.items()})
    return out


def compare(rows_a: list[dict], rows_b: list[dict], metric: str = "fes_total") -> dict:
    """Medians of ``metric`` for two result sets and an unpaired rank-sum p-value."""
    a = [r[metric] for r in rows_a]
    b = [r[metric] for r in rows_b]
    return {
        "metric": metric,
        "median_a": aggregate(a)[0],
        "median_b": aggregate(b)[0],
        "p_value": rank_sum_test(a, b),
        "test": RANK_SUM_LABEL,
    }
