"""Competitive quasi-parallel bilevel loop.

Each upper generation samples ``p`` joint (x_u, x_l) vectors. Every vector
spawns a lower-level task whose CMA-ES starts from the lower block of the
upper search distribution. After one activation pass the tasks compete for
further lower-level generations by roulette selection; the first ``p // 2``
tasks to meet their lower termination rule win, and their pairs update the
upper distribution.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from drcbl.cic import TaskSnapshot, apply_cooperation, plan_cooperation
from drcbl.config import RunConfig
from drcbl.es import Candidate, EsState, init_es, marginal, sample, update
from drcbl.metrics import accuracy
from drcbl.problems import (
    BilevelProblem,
    EvalCounter,
    LowerEval,
    UpperEval,
    deb_key,
    evaluate_lower_batch,
    evaluate_upper,
)
from drcbl.spu import (
    TaskHistory,
    envelope,
    evolving_potential,
    selection_probabilities,
)

TRACE_HEADER = "upper_gen,round,slot,task_id,execs,fes_l,improved,cooperated,terminated"


def child_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent stream derived from the run seed and a structural key."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


@dataclass
class TraceEvent:
    upper_gen: int
    round: int
    slot: int
    task_id: int
    execs: int
    fes_l: int
    improved: bool
    cooperated: bool
    terminated: bool

    def csv_row(self) -> str:
        return ",".join(
            str(int(v)) for v in (
                self.upper_gen, self.round, self.slot, self.task_id, self.execs,
                self.fes_l, self.improved, self.cooperated, self.terminated,
            )
        )


@dataclass
class Pair:
    x_u: np.ndarray
    x_l: np.ndarray
    lower: LowerEval
    upper: UpperEval | None = None

    @property
    def upper_key(self) -> tuple:
        return deb_key(self.upper.value, self.upper.cv)


@dataclass
class LowerTask:
    task_id: int
    x_u: np.ndarray
    es: EsState
    exec_count: int = 0
    fes_l_used: int = 0
    best: Pair | None = None
    elite_window: list = field(default_factory=list)
    pt_series: list = field(default_factory=list)
    terminated: bool = False

    def snapshot(self) -> TaskSnapshot:
        return TaskSnapshot(
            task_id=self.task_id,
            x_u=self.x_u,
            exec_count=self.exec_count,
            mean_history=list(self.es.mean_history),
            best_x_l=self.best.x_l,
            terminated=self.terminated,
        )


@dataclass
class ArchiveEntry:
    exec_index: int
    pair: Pair


class Archive:
    """Per-task history of incumbent pairs and their upper evaluations."""

    def __init__(self):
        self.entries: dict[int, list[ArchiveEntry]] = {}
        self.feasible_ceiling: float | None = None

    def add(self, task_id: int, exec_index: int, pair: Pair) -> None:
        self.entries.setdefault(task_id, []).append(ArchiveEntry(exec_index, pair))
        if pair.upper.cv <= 0:
            v = pair.upper.value
            if self.feasible_ceiling is None or v > self.feasible_ceiling:
                self.feasible_ceiling = v

    def fitness(self, upper: UpperEval) -> float:
        """Maximization-scale fitness; infeasible pairs rank below all feasible ones."""
        if upper.cv <= 0:
            return -upper.value
        ceiling = self.feasible_ceiling if self.feasible_ceiling is not None else 0.0
        return -(ceiling + upper.cv)

    def latest_fitness(self, task_id: int) -> float:
        return self.fitness(self.entries[task_id][-1].pair.upper)

    def envelope(self):
        return envelope(self.latest_fitness(t) for t in self.entries)

    def history(self, task: LowerTask) -> TaskHistory:
        fits = [self.fitness(e.pair.upper) for e in self.entries[task.task_id]]
        return TaskHistory(task.task_id, fits, list(task.pt_series))


@dataclass
class RunResult:
    best: Pair
    acc_u: float
    acc_l: float
    fes_u: int
    fes_l: int
    trace: list[TraceEvent]
    generations: int
    executions: int
    stop_reason: str = ""

    @property
    def fes_total(self) -> int:
        return self.fes_u + self.fes_l


def new_task(task_id: int, joint: np.ndarray, upper_es: EsState, problem: BilevelProblem, config: RunConfig) -> LowerTask:
    """Lower task seeded with the marginal of the upper distribution."""
    m, n = problem.dim_u, problem.dim_l
    _, cov, sigma = marginal(upper_es, range(m, m + n))
    es = init_es(n, joint[m:], sigma, cov, popsize=config.pop_l)
    return LowerTask(task_id=task_id, x_u=np.array(joint[:m]), es=es)


def lower_generation(task: LowerTask, problem: BilevelProblem, counter: EvalCounter, config: RunConfig,
                     rng: np.random.Generator, navi: np.ndarray | None = None) -> bool:
    """Sample, evaluate and update one lower generation; True if the incumbent improved.

    ``navi`` takes one of the ``q`` slots and joins the ranking, but can
    never become the incumbent.
    """
    q = config.pop_l
    xs = sample(task.es, q - (navi is not None), rng, problem.bounds_l)
    if navi is not None:
        xs.append(np.asarray(navi, dtype=float))
    evals = evaluate_lower_batch(problem, task.x_u, xs, counter)
    cands = [Candidate(x, e.value, e.cv) for x, e in zip(xs, evals)]
    if navi is not None:
        cands[-1].injected = True
    order = sorted(range(len(cands)), key=lambda i: deb_key(cands[i].objective, cands[i].cv))
    update(task.es, [cands[i] for i in order])

    task.exec_count += 1
    task.fes_l_used += q
    improved = False
    for i in order:
        if cands[i].injected:
            continue
        if task.best is None or deb_key(*evals[i]) < deb_key(*task.best.lower):
            task.best = Pair(task.x_u, cands[i].vector.copy(), evals[i])
            improved = True
        break
    task.elite_window.append(task.best.lower)
    return improved


def lower_terminated(task: LowerTask, config: RunConfig) -> bool:
    if task.fes_l_used >= config.fes_l_max:
        return True
    gens = math.ceil(config.fes_l_var / config.pop_l)
    window = task.elite_window[-(gens + 1):]
    if len(window) < gens + 1:
        return False
    values = [w.value for w in window]
    cvs = [w.cv for w in window]
    return max(values) - min(values) < config.tol_l and max(cvs) - min(cvs) < config.tol_l


class Competition:
    """State of one competitive pass (one upper generation)."""

    def __init__(self, problem: BilevelProblem, counter: EvalCounter, config: RunConfig, upper_gen: int,
                 trace: list | None = None):
        self.problem = problem
        self.counter = counter
        self.config = config
        self.upper_gen = upper_gen
        self.trace = trace if trace is not None else []
        self.tasks: dict[int, LowerTask] = {}
        self.archive = Archive()
        self.executions = 0
        self._streams: dict[int, np.random.Generator] = {}

    def _rng(self, task: LowerTask) -> np.random.Generator:
        if task.task_id not in self._streams:
            self._streams[task.task_id] = child_rng(self.config.seed, self.upper_gen, task.task_id + 1, 0)
        return self._streams[task.task_id]

    def active(self) -> list[LowerTask]:
        return [t for t in self.tasks.values() if not t.terminated]

    def probabilities(self) -> dict[int, float]:
        histories = [self.archive.history(t) for t in self.active()]
        return selection_probabilities(histories, self.config.spu)


def activate(pop_u, upper_es: EsState, problem: BilevelProblem, counter: EvalCounter, config: RunConfig,
             upper_gen: int = 1, trace: list | None = None) -> Competition:
    """Create one task per upper individual and run each once in turn."""
    if len(pop_u) < 2:
        raise ValueError("at least two upper individuals are required")
    comp = Competition(problem, counter, config, upper_gen, trace)
    for i, joint in enumerate(pop_u):
        task = new_task(i, np.asarray(joint, dtype=float), upper_es, problem, config)
        comp.tasks[i] = task
        lower_generation(task, problem, counter, config, comp._rng(task))
        task.best.upper = evaluate_upper(problem, task.x_u, task.best.x_l, counter)
        comp.archive.add(i, task.exec_count, task.best)
        comp.executions += 1
        comp.trace.append(TraceEvent(upper_gen, 0, i + 1, i, task.exec_count, task.fes_l_used, True, False, False))
    return comp


def roulette_select(probs: dict[int, float], rng: np.random.Generator) -> int:
    if not probs:
        raise ValueError("empty distribution")
    ids = sorted(probs)
    weights = np.array([probs[i] for i in ids], dtype=float)
    cum = np.cumsum(weights)
    r = rng.random() * cum[-1]
    idx = int(np.searchsorted(cum, r, side="right"))
    return ids[min(idx, len(ids) - 1)]


def execute_task(comp: Competition, task: LowerTask, plan=None, round_no: int = 1, slot: int = 1) -> TraceEvent:
    """One competitive execution of ``task``, optionally with cooperation."""
    if task.terminated:
        raise RuntimeError(f"task {task.task_id} has already terminated")
    problem, counter, config, archive = comp.problem, comp.counter, comp.config, comp.archive
    env = archive.envelope()
    prev_upper = task.best.upper

    navi = None
    if plan is not None:
        sources = [comp.tasks[sid].es for sid, _ in plan.sources]
        _, navi = apply_cooperation(task.es, sources, plan)

    improved = lower_generation(task, problem, counter, config, comp._rng(task), navi)
    if improved:
        task.best.upper = evaluate_upper(problem, task.x_u, task.best.x_l, counter)
    archive.add(task.task_id, task.exec_count, task.best)
    fit_new = archive.fitness(task.best.upper)
    fit_prev = archive.fitness(prev_upper)
    task.pt_series.append(evolving_potential(fit_new, fit_prev, env, config.spu.denom_guard))

    task.terminated = lower_terminated(task, config)
    comp.executions += 1
    event = TraceEvent(comp.upper_gen, round_no, slot, task.task_id, task.exec_count, task.fes_l_used,
                       improved, plan is not None, task.terminated)
    comp.trace.append(event)
    return event


def _plan_for(comp: Competition, task: LowerTask):
    cfg = comp.config
    if not cfg.cooperation or task.exec_count < cfg.cic.min_execs:
        return None
    others = [t.snapshot() for t in comp.active() if t.task_id != task.task_id]
    return plan_cooperation(task.snapshot(), others, cfg.cic)


def _upper_exhausted(comp: Competition) -> bool:
    return comp.counter.fes_u >= comp.config.fes_u_max


def compete(comp: Competition, rng: np.random.Generator) -> list[Pair]:
    """Roulette-driven executions until ``p // 2`` tasks have terminated."""
    p = len(comp.tasks)
    quota = p // 2
    winners: list[Pair] = []
    probs = comp.probabilities()
    round_no = 0
    while len(winners) < quota and comp.active() and not _upper_exhausted(comp):
        round_no += 1
        for slot in range(1, p + 1):
            if not comp.active() or _upper_exhausted(comp):
                break
            task = comp.tasks[roulette_select(probs, rng)]
            event = execute_task(comp, task, _plan_for(comp, task), round_no, slot)
            if event.terminated:
                winners.append(task.best)
                if len(winners) >= quota and not comp.config.strict_rounds:
                    break
                if comp.active():
                    probs = comp.probabilities()
        if len(winners) >= quota:
            break
        if comp.active():
            probs = comp.probabilities()
    if len(winners) < quota:
        # budget ran out first: top up with the best incumbents still competing
        rest = sorted(comp.active(), key=lambda t: (t.best.upper_key, t.task_id))
        winners.extend(t.best for t in rest[: quota - len(winners)])
    return winners[:quota]


def drc(pop_u, upper_es: EsState, problem: BilevelProblem, counter: EvalCounter, config: RunConfig,
        rng: np.random.Generator, upper_gen: int = 1, trace: list | None = None) -> list[Pair]:
    comp = activate(pop_u, upper_es, problem, counter, config, upper_gen, trace)
    return compete(comp, rng)


def init_upper(problem: BilevelProblem, config: RunConfig) -> EsState:
    bounds = problem.joint_bounds
    rng = child_rng(config.seed, 0, 0, 0)
    mean0 = rng.uniform(bounds[:, 0], bounds[:, 1])
    cov0 = np.diag((bounds[:, 1] - bounds[:, 0]) ** 2)
    return init_es(len(bounds), mean0, config.sigma0, cov0, popsize=config.pop_u)


class UpperTracker:
    """Elitist bookkeeping and the three upper termination rules.

    The elite is the Deb-best pair of the latest generation. A best-ever
    record is a poor elite here: when the lower level is not fully solved,
    some problems report an upper value below the true optimum, and such a
    pair would block every later improvement.
    """

    def __init__(self, problem: BilevelProblem, config: RunConfig):
        self.problem = problem
        self.config = config
        self.best: Pair | None = None
        self.history: list[tuple[int, UpperEval]] = []

    def offer(self, pairs) -> None:
        self.best = min(pairs, key=lambda pr: pr.upper_key)

    def record(self, fes_u: int) -> None:
        self.history.append((fes_u, self.best.upper))

    def stop_reason(self, fes_u: int) -> str | None:
        cfg = self.config
        if fes_u >= cfg.fes_u_max:
            return "fes_u_max"
        best = self.best.upper
        f_star = self.problem.f_star
        if f_star is not None and best.cv <= 0 and abs(best.value - f_star) < cfg.acc_stop:
            return "accuracy"
        horizon = fes_u - cfg.fes_u_var
        start = [i for i, (f, _) in enumerate(self.history) if f <= horizon]
        if start:
            window = [u for _, u in self.history[start[-1]:]]
            values = [u.value for u in window]
            cvs = [u.cv for u in window]
            if max(values) - min(values) < cfg.tol_u and max(cvs) - min(cvs) < cfg.tol_u:
                return "stagnation"
        return None


def finish(problem: BilevelProblem, tracker: UpperTracker, counter: EvalCounter, trace, gens: int,
           executions: int, reason: str) -> RunResult:
    best = tracker.best
    f_star = problem.f_star if problem.f_star is not None else float("nan")
    little = problem.little_f_star if problem.little_f_star is not None else float("nan")
    return RunResult(
        best=best,
        acc_u=accuracy(best.upper.value, f_star),
        acc_l=accuracy(best.lower.value, little),
        fes_u=counter.fes_u,
        fes_l=counter.fes_l,
        trace=trace,
        generations=gens,
        executions=executions,
        stop_reason=reason,
    )


def upper_step(upper_es: EsState, pairs: list[Pair]) -> None:
    ranked = sorted(pairs, key=lambda pr: pr.upper_key)
    update(upper_es, [Candidate(np.concatenate([pr.x_u, pr.x_l]), pr.upper.value, pr.upper.cv) for pr in ranked])


def solve(problem: BilevelProblem, config: RunConfig, seed: int | None = None) -> RunResult:
    """Run the competitive bilevel CMA-ES until an upper termination rule fires."""
    if seed is not None:
        config = _with_seed(config, seed)
    counter = EvalCounter()
    upper_es = init_upper(problem, config)
    tracker = UpperTracker(problem, config)
    trace: list[TraceEvent] = []
    gen = 0
    executions = 0
    while True:
        gen += 1
        pop_u = sample(upper_es, config.pop_u, child_rng(config.seed, gen, 0, 0), problem.joint_bounds)
        comp = activate(pop_u, upper_es, problem, counter, config, gen, trace)
        elites = compete(comp, child_rng(config.seed, gen, 0, 1))
        executions += comp.executions
        upper_step(upper_es, elites)
        tracker.offer(elites)
        tracker.record(counter.fes_u)
        reason = tracker.stop_reason(counter.fes_u)
        if reason:
            return finish(problem, tracker, counter, trace, gen, executions, reason)


def _with_seed(config: RunConfig, seed: int) -> RunConfig:
    return dataclasses.replace(config, seed=int(seed))


def replay_fes(trace, pop_l: int, conditional_upper: bool = True) -> tuple[int, int]:
    """Recount (FEs_u, FEs_l) from a trace.

    Every row is one lower generation of ``pop_l`` FEs. Round-0 rows open a
    task and always cost one upper FE; later rows cost one only when they
    improved the incumbent. The nested baseline pays its single upper FE per
    task up front in this count (``conditional_upper=False``).
    """
    fes_l = pop_l * len(trace)
    fes_u = sum(1 for e in trace if e.round == 0)
    if conditional_upper:
        fes_u += sum(1 for e in trace if e.round > 0 and e.improved)
    return fes_u, fes_l
