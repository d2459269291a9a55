"""Sequential nested baseline: every lower task is solved to termination in turn.

Same upper CMA-ES, marginal seeding and termination rules as the
competitive solver, but no competition and no cooperation. Each finished
pair costs exactly one upper FE and all ``p`` pairs feed the upper update.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from drcbl.config import RunConfig
from drcbl.es import sample
from drcbl.problems import BilevelProblem, EvalCounter, evaluate_upper
from drcbl.scheduler import (
    RunResult,
    TraceEvent,
    UpperTracker,
    child_rng,
    finish,
    init_upper,
    lower_generation,
    lower_terminated,
    new_task,
    upper_step,
)


def nested_baseline_solve(problem: BilevelProblem, config: RunConfig, seed: int | None = None) -> RunResult:
    if seed is not None:
        config = dataclasses.replace(config, seed=int(seed))
    counter = EvalCounter()
    upper_es = init_upper(problem, config)
    tracker = UpperTracker(problem, config)
    trace: list[TraceEvent] = []
    gen = 0
    executions = 0
    while True:
        gen += 1
        pop_u = sample(upper_es, config.pop_u, child_rng(config.seed, gen, 0, 0), problem.joint_bounds)
        pairs = []
        for i, joint in enumerate(pop_u):
            task = new_task(i, np.asarray(joint), upper_es, problem, config)
            rng = child_rng(config.seed, gen, i + 1, 0)
            while True:
                improved = lower_generation(task, problem, counter, config, rng)
                executions += 1
                # the first pass is not a competitive execution, so no stop check
                task.terminated = task.exec_count > 1 and lower_terminated(task, config)
                trace.append(TraceEvent(gen, task.exec_count - 1, i + 1, i, task.exec_count,
                                        task.fes_l_used, improved, False, task.terminated))
                if task.terminated:
                    break
            task.best.upper = evaluate_upper(problem, task.x_u, task.best.x_l, counter)
            pairs.append(task.best)
        upper_step(upper_es, pairs)
        tracker.offer(pairs)
        tracker.record(counter.fes_u)
        reason = tracker.stop_reason(counter.fes_u)
        if reason:
            return finish(problem, tracker, counter, trace, gen, executions, reason)
