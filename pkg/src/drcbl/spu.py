"""Task-selection probabilities from execution histories.

All fitness values here live on a maximization scale (``fitness = -F`` for
feasible pairs), so "larger is better" throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SpuConfig:
    gamma: float = 0.5
    epsilon: float = 1.1
    w_bs: float = 0.1
    w_pf: float = 0.7
    w_pt: float = 0.2
    denom_guard: float = 1e-12

    def __post_init__(self):
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must lie in [0, 1]")
        if not self.epsilon > 1:
            raise ValueError("epsilon must exceed 1")
        ws = (self.w_bs, self.w_pf, self.w_pt)
        if min(ws) < 0 or abs(sum(ws) - 1) > 1e-12:
            raise ValueError("w_bs, w_pf, w_pt must be non-negative and sum to 1")
        if not self.denom_guard > 0:
            raise ValueError("denom_guard must be positive")


@dataclass
class TaskHistory:
    task_id: int
    fit_series: list[float] = field(default_factory=list)
    pt_series: list[float] = field(default_factory=list)

    @property
    def exec_count(self) -> int:
        return len(self.fit_series)


@dataclass(frozen=True)
class GlobalEnvelope:
    fit_gb: float
    fit_gw: float


def _discounted_mean(series, gamma: float) -> float:
    t = len(series)
    # gamma ** 0 is 1 even for gamma == 0, so the latest term always counts
    weights = np.array([gamma ** (t - 1 - i) for i in range(t)])
    return float(np.dot(weights, np.asarray(series, dtype=float)) / weights.sum())


def competing_fitness(history: TaskHistory | list, gamma: float) -> float:
    series = history.fit_series if isinstance(history, TaskHistory) else history
    if len(series) == 0:
        raise ValueError("competing fitness of an empty history")
    return _discounted_mean(series, gamma)


def competing_potential(pt_series, gamma: float) -> float:
    """Discounted mean of evolving potentials; 0 when there are none yet."""
    if len(pt_series) == 0:
        return 0.0
    return _discounted_mean(pt_series, gamma)


def evolving_potential(fit_new: float, fit_prev: float, env: GlobalEnvelope, guard: float = 1e-12) -> float:
    """Relative change plus reward above the best and penalty below the worst."""
    change = (fit_new - fit_prev) / max(abs(fit_prev), guard)
    reward = max((fit_new - env.fit_gb) / max(abs(env.fit_gb), guard), 0.0)
    penalty = min((fit_new - env.fit_gw) / max(abs(env.fit_gw), guard), 0.0)
    return change + reward + penalty


def envelope(latest_fitness) -> GlobalEnvelope:
    values = list(latest_fitness)
    return GlobalEnvelope(fit_gb=max(values), fit_gw=min(values))


def selection_probabilities(active: list[TaskHistory], cfg: SpuConfig = SpuConfig()) -> dict[int, float]:
    if not active:
        raise ValueError("no active tasks")
    k = len(active)
    ids = [h.task_id for h in active]
    cf = np.array([competing_fitness(h, cfg.gamma) for h in active])
    cp = np.array([competing_potential(h.pt_series, cfg.gamma) for h in active])

    p_bs = np.full(k, 1.0 / k)

    advantage = cf - cf.min()
    total = advantage.sum()
    p_pf = advantage / total if total > 0 else np.full(k, 1.0 / k)

    log_eps = math.log(cfg.epsilon)
    limit = 700.0 / log_eps
    cp = np.clip(cp, -limit, limit)
    # epsilon**cp normalized; shifting by the max leaves the ratios unchanged
    expo = np.exp((cp - cp.max()) * log_eps)
    p_pt = expo / expo.sum()

    probs = cfg.w_bs * p_bs + cfg.w_pf * p_pf + cfg.w_pt * p_pt
    probs = probs / probs.sum()
    return dict(zip(ids, probs.tolist()))
