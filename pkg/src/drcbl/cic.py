"""Cooperation between competing lower-level tasks.

A selected task (the target) may borrow the sampling distribution of
similar tasks that look closer to convergence. Similarity is the distance
between upper-level vectors under a fractional norm; convergence is judged
by how much a task's search mean moved over its last three executions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from drcbl.es import EsState, set_distribution


@dataclass(frozen=True)
class CicConfig:
    alpha: float = 0.5
    min_execs: int = 3
    normalize_weights: bool = True
    history_window: int = 3

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if self.min_execs < 1:
            raise ValueError("min_execs must be at least 1")
        if self.history_window != 3:
            raise ValueError("history_window is fixed at 3")


@dataclass
class TaskSnapshot:
    task_id: int
    x_u: np.ndarray
    exec_count: int
    mean_history: list
    best_x_l: np.ndarray
    terminated: bool = False


@dataclass
class CooperationPlan:
    target_id: int
    sources: list[tuple[int, float]]
    target_weight: float
    navi: np.ndarray
    stds: dict = field(default_factory=dict)
    distances: dict = field(default_factory=dict)


def fractional_distance(a, b) -> float:
    """(sum |a_i - b_i|^(1/m))^m for vectors of length m."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    m = a.size
    if m == 0:
        return 0.0
    return float(np.sum(np.abs(a - b) ** (1.0 / m)) ** m)


def mean_fluctuation(mean_history) -> float | None:
    """Average per-coordinate sample std of the last three means, or None."""
    means = list(mean_history)
    if len(means) < 3:
        return None
    stacked = np.array(means[-3:], dtype=float)
    return float(np.std(stacked, axis=0, ddof=1).mean())


def plan_cooperation(target: TaskSnapshot, candidates: list[TaskSnapshot], cfg: CicConfig = CicConfig()):
    """Pick source tasks and their intensities, or return None.

    Candidates must be active, executed at least ``min_execs`` times, sit in
    the closest ``ceil(C/2)`` by upper-level distance among the C eligible
    candidates and have a smaller mean fluctuation than the target.
    """
    if target.terminated or target.exec_count < cfg.min_execs:
        return None
    std_t = mean_fluctuation(target.mean_history)
    if std_t is None:
        return None

    eligible = [
        c for c in candidates
        if c.task_id != target.task_id and not c.terminated and c.exec_count >= cfg.min_execs
    ]
    if not eligible:
        return None
    dist = {c.task_id: fractional_distance(c.x_u, target.x_u) for c in eligible}
    ranked = sorted(eligible, key=lambda c: (dist[c.task_id], c.task_id))
    closest = ranked[: math.ceil(len(ranked) / 2)]

    sources = []
    stds = {}
    for c in closest:
        std_s = mean_fluctuation(c.mean_history)
        if std_s is not None and std_s < std_t:
            sources.append(c)
            stds[c.task_id] = std_s
    if not sources:
        return None

    std_total = std_t + sum(stds.values())
    d_total = sum(dist[c.task_id] for c in sources)
    intensities = []
    for c in sources:
        d_share = dist[c.task_id] / d_total if d_total > 0 else 1.0 / len(sources)
        ci = 1 - cfg.alpha * stds[c.task_id] / std_total - (1 - cfg.alpha) * d_share
        intensities.append(ci)
    w_target = 1 - cfg.alpha * std_t / std_total

    if cfg.normalize_weights:
        total = w_target + sum(intensities)
        w_target /= total
        intensities = [ci / total for ci in intensities]

    strongest = max(range(len(sources)), key=lambda i: (intensities[i], -sources[i].task_id))
    return CooperationPlan(
        target_id=target.task_id,
        sources=[(c.task_id, ci) for c, ci in zip(sources, intensities)],
        target_weight=w_target,
        navi=np.array(sources[strongest].best_x_l, dtype=float),
        stds={target.task_id: std_t, **stds},
        distances={c.task_id: dist[c.task_id] for c in sources},
    )


def apply_cooperation(target_state: EsState, source_states: list[EsState], plan: CooperationPlan):
    """Mix source means and covariances into the target; sigma is kept.

    ``source_states`` follow the order of ``plan.sources``.
    """
    if len(source_states) != len(plan.sources):
        raise ValueError("one state per planned source is required")
    for st in source_states:
        if st.dim != target_state.dim:
            raise ValueError("dimension mismatch")
    mean = plan.target_weight * target_state.mean
    cov = plan.target_weight * target_state.cov
    for st, (_, ci) in zip(source_states, plan.sources):
        mean = mean + ci * st.mean
        cov = cov + ci * st.cov
    set_distribution(target_state, mean=mean, cov=cov)
    return target_state, plan.navi.copy()
