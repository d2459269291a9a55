"""Bilevel problem container, FE-counting evaluation and constrained ranking.

Objective callables are vectorized: they receive ``xu`` of shape (N, m) and
``xl`` of shape (N, n) and return ``(values[N], slacks[N, k])`` where a
slack ``> 0`` is a violated ``<= 0`` inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

LevelFn = Callable[[np.ndarray, np.ndarray], tuple]


@dataclass(frozen=True)
class BilevelProblem:
    name: str
    dim_u: int
    dim_l: int
    bounds_u: np.ndarray
    bounds_l: np.ndarray
    upper_fn: LevelFn
    lower_fn: LevelFn
    f_star: float | None = None
    little_f_star: float | None = None
    x_u_opt: np.ndarray | None = None
    x_l_opt: np.ndarray | None = None
    n_equality: int = 0

    def __post_init__(self):
        if self.n_equality:
            raise ValueError("equality constraints are not supported")
        for bounds, dim in ((self.bounds_u, self.dim_u), (self.bounds_l, self.dim_l)):
            b = np.asarray(bounds, dtype=float)
            if dim < 1 or b.shape != (dim, 2):
                raise ValueError(f"bounds shape {b.shape} does not match dimension {dim}")
            if not np.all(np.isfinite(b)) or np.any(b[:, 0] >= b[:, 1]):
                raise ValueError("bounds must be finite with lower < upper")

    @property
    def joint_bounds(self) -> np.ndarray:
        return np.vstack([self.bounds_u, self.bounds_l])


class UpperEval(NamedTuple):
    value: float
    cv: float


class LowerEval(NamedTuple):
    value: float
    cv: float


@dataclass
class EvalCounter:
    fes_u: int = 0
    fes_l: int = 0

    @property
    def total(self) -> int:
        return self.fes_u + self.fes_l


def violation(slacks: np.ndarray) -> np.ndarray:
    """Row-wise sum of positive parts of inequality slacks."""
    slacks = np.asarray(slacks, dtype=float)
    if slacks.ndim == 1:
        slacks = slacks[:, None]
    if slacks.shape[-1] == 0:
        return np.zeros(slacks.shape[0])
    return np.maximum(slacks, 0.0).sum(axis=-1)


def _rows(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, dim)


def evaluate_upper(problem: BilevelProblem, x_u, x_l, counter: EvalCounter) -> UpperEval:
    """Upper objective; cv aggregates violations of both levels. One upper FE."""
    xu = _rows(x_u, problem.dim_u)
    xl = _rows(x_l, problem.dim_l)
    value, g_upper = problem.upper_fn(xu, xl)
    _, g_lower = problem.lower_fn(xu, xl)
    counter.fes_u += 1
    cv = violation(g_upper)[0] + violation(g_lower)[0]
    return UpperEval(float(value[0]), float(cv))


def evaluate_lower(problem: BilevelProblem, x_u, x_l, counter: EvalCounter) -> LowerEval:
    return evaluate_lower_batch(problem, x_u, [x_l], counter)[0]


def evaluate_lower_batch(problem: BilevelProblem, x_u, xls, counter: EvalCounter) -> list[LowerEval]:
    """Lower objective for several ``x_l`` under one ``x_u``; one FE per row."""
    xl = np.asarray(xls, dtype=float).reshape(-1, problem.dim_l)
    if xl.shape[0] == 0:
        return []
    xu = np.broadcast_to(np.asarray(x_u, dtype=float).reshape(1, problem.dim_u), (xl.shape[0], problem.dim_u))
    values, g = problem.lower_fn(xu, xl)
    counter.fes_l += xl.shape[0]
    cvs = violation(g)
    return [LowerEval(float(v), float(c)) for v, c in zip(values, cvs)]


def deb_key(value: float, cv: float) -> tuple:
    """Sort key realizing the feasibility rules (smaller is better)."""
    return (0, value) if cv <= 0 else (1, cv)


def deb_compare(a, b) -> int:
    """Compare ``(value, cv)`` pairs: -1 if ``a`` is better, 1 if ``b`` is, 0 on tie."""
    (va, ca), (vb, cb) = a, b
    if any(math.isnan(float(x)) for x in (va, ca, vb, cb)):
        raise ValueError("NaN in comparison")
    ka, kb = deb_key(va, ca), deb_key(vb, cb)
    return -1 if ka < kb else (1 if kb < ka else 0)


def make_synthetic_quadratic(d: int, a=None) -> BilevelProblem:
    """F = |x_u - a|^2 + |x_l - x_u|^2, f = |x_l - x_u|^2 on [-5, 10]^d."""
    a = np.ones(d) if a is None else np.asarray(a, dtype=float).reshape(-1)
    if a.shape != (d,):
        raise ValueError("target vector length must equal d")
    if np.any(a < -5) or np.any(a > 10):
        raise ValueError("target vector lies outside [-5, 10]")
    bounds = np.tile([-5.0, 10.0], (d, 1))

    def upper(xu, xl):
        value = np.sum((xu - a) ** 2, axis=1) + np.sum((xl - xu) ** 2, axis=1)
        return value, np.zeros((len(xu), 0))

    def lower(xu, xl):
        return np.sum((xl - xu) ** 2, axis=1), np.zeros((len(xu), 0))

    return BilevelProblem(
        name=f"synthq-{d}",
        dim_u=d,
        dim_l=d,
        bounds_u=bounds,
        bounds_l=bounds.copy(),
        upper_fn=upper,
        lower_fn=lower,
        f_star=0.0,
        little_f_star=0.0,
        x_u_opt=a.copy(),
        x_l_opt=a.copy(),
    )


def get_problem(problem_id: str, m: int, n: int) -> BilevelProblem:
    """Resolve a registry id such as ``smd3`` or ``synthq-2``."""
    from drcbl.smd import make_smd

    pid = problem_id.strip().lower()
    if pid.startswith("smd") and pid[3:].isdigit():
        return make_smd(int(pid[3:]), m, n)
    if pid.startswith("synthq"):
        tail = pid[len("synthq"):].lstrip("-")
        d = int(tail) if tail else m
        if m != d or n != d:
            raise ValueError(f"{problem_id} needs dims {d},{d}")
        return make_synthetic_quadratic(d)
    raise KeyError(f"unknown problem id {problem_id!r}")
