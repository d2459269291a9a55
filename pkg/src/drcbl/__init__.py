"""Competitive bilevel CMA-ES with a benchmark harness."""

from drcbl.baseline import nested_baseline_solve
from drcbl.config import RunConfig
from drcbl.problems import get_problem
from drcbl.scheduler import RunResult, solve

__all__ = ["RunConfig", "RunResult", "get_problem", "nested_baseline_solve", "solve"]
__version__ = "0.1.0"
