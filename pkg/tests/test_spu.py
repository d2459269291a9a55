import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drcbl.spu import (
    GlobalEnvelope,
    SpuConfig,
    TaskHistory,
    competing_fitness,
    competing_potential,
    envelope,
    evolving_potential,
    selection_probabilities,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_cf_single_term():
    assert competing_fitness([3.25], 0.5) == 3.25


def test_cf_discounted():
    assert competing_fitness([10, 4], 0.5) == pytest.approx(6.0, abs=1e-12)
    assert competing_fitness([10, 4], 1.0) == pytest.approx(7.0, abs=1e-12)


def test_cf_gamma_zero_is_latest():
    assert competing_fitness([10, -2, 4.5], 0.0) == 4.5


def test_cf_empty():
    with pytest.raises(ValueError):
        competing_fitness(TaskHistory(0), 0.5)


def test_pt_no_change_inside_envelope():
    env = GlobalEnvelope(fit_gb=-1, fit_gw=-10)
    assert evolving_potential(-5, -5, env) == 0.0


def test_pt_hand_examples():
    env = GlobalEnvelope(fit_gb=-5, fit_gw=-20)
    assert evolving_potential(-4, -10, env) == pytest.approx(0.8, abs=1e-12)
    assert evolving_potential(-30, -4, env) == pytest.approx(-7.0, abs=1e-12)


def test_pt_guard_prevents_division_by_zero():
    env = GlobalEnvelope(fit_gb=0.0, fit_gw=0.0)
    assert math.isfinite(evolving_potential(1.0, 0.0, env))


def test_cp_examples():
    assert competing_potential([0.3], 0.5) == 0.3
    assert competing_potential([0.8, -0.2], 0.5) == pytest.approx(0.2 / 1.5, abs=1e-12)
    assert competing_potential([], 0.5) == 0.0


def test_worked_probability_example():
    p = selection_probabilities([TaskHistory(0, [4.0]), TaskHistory(1, [2.0])])
    assert p[0] == pytest.approx(0.85, abs=1e-12)
    assert p[1] == pytest.approx(0.15, abs=1e-12)


def test_single_task():
    assert selection_probabilities([TaskHistory(7, [1.0])]) == {7: 1.0}


def test_symmetric_fallback():
    hs = [TaskHistory(i, [2.0], [0.1]) for i in range(4)]
    p = selection_probabilities(hs)
    assert all(v == pytest.approx(0.25, abs=1e-15) for v in p.values())


def test_empty_rejected():
    with pytest.raises(ValueError):
        selection_probabilities([])


def test_config_validation():
    with pytest.raises(ValueError):
        SpuConfig(w_bs=0.5, w_pf=0.5, w_pt=0.5)
    with pytest.raises(ValueError):
        SpuConfig(epsilon=1.0)
    with pytest.raises(ValueError):
        SpuConfig(gamma=1.5)


def test_potential_dominates_when_large():
    cfg = SpuConfig(w_bs=0.0, w_pf=0.0, w_pt=1.0)
    hs = [TaskHistory(0, [1.0], [100.0])] + [TaskHistory(i, [1.0], [0.0]) for i in range(1, 4)]
    p = selection_probabilities(hs, cfg)
    # 1.1**100 is about 1.4e4, so the three peers share about 3 / 1.4e4
    assert p[0] == pytest.approx(1.1**100 / (1.1**100 + 3), rel=1e-12)
    hs[0].pt_series = [1000.0]
    assert selection_probabilities(hs, cfg)[0] > 1 - 1e-12


def test_huge_potential_does_not_overflow():
    hs = [TaskHistory(0, [1.0], [1e9]), TaskHistory(1, [1.0], [-1e9])]
    p = selection_probabilities(hs)
    assert all(math.isfinite(v) for v in p.values())
    assert sum(p.values()) == pytest.approx(1.0)


def test_envelope():
    env = envelope([-3.0, -1.0, -7.0])
    assert (env.fit_gb, env.fit_gw) == (-1.0, -7.0)


histories = st.lists(
    st.tuples(st.lists(finite, min_size=1, max_size=5), st.lists(st.floats(-50, 50), max_size=4)),
    min_size=1,
    max_size=8,
)


@settings(max_examples=300, deadline=None)
@given(histories, st.floats(0, 1))
def test_output_is_a_simplex(raw, gamma):
    hs = [TaskHistory(i, f, pt) for i, (f, pt) in enumerate(raw)]
    p = selection_probabilities(hs, SpuConfig(gamma=gamma))
    assert set(p) == set(range(len(hs)))
    assert all(v >= 0 for v in p.values())
    assert sum(p.values()) == pytest.approx(1.0, abs=1e-9)


# values on a 1e-3 grid so a shift cannot merge two distinct fitnesses by rounding
grid = st.integers(-10**6, 10**6).map(lambda v: v / 1000)


@settings(max_examples=200, deadline=None)
@given(st.lists(grid, min_size=2, max_size=8), st.floats(-1e3, 1e3), st.integers(0, 7), st.floats(0, 1e3))
def test_pf_shift_invariance_and_monotonicity(cfs, shift, idx, bump):
    idx %= len(cfs)
    cfg = SpuConfig(w_bs=0.0, w_pf=1.0, w_pt=0.0)
    base = selection_probabilities([TaskHistory(i, [c]) for i, c in enumerate(cfs)], cfg)
    moved = selection_probabilities([TaskHistory(i, [c + shift]) for i, c in enumerate(cfs)], cfg)
    for k in base:
        assert moved[k] == pytest.approx(base[k], abs=1e-6)
    bumped = list(cfs)
    bumped[idx] += bump
    higher = selection_probabilities([TaskHistory(i, [c]) for i, c in enumerate(bumped)], cfg)
    assert higher[idx] >= base[idx] - 1e-9
