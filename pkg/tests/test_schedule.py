import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from streamal.schedule import BudgetSchedule, budget_at, on_drift, schedule_times


@pytest.mark.parametrize("b", [0.01, 0.05, 0.1, 0.2, 0.25])
def test_paper_preset_switch_times(b):
    t1, t2 = schedule_times(b, 4 * b, b / 2, 1000, 0.0)
    assert t1 == pytest.approx(1000 / 7, rel=1e-12)
    assert t2 - t1 == pytest.approx(6000 / 7, rel=1e-12)
    assert (round(t1), round(t2 - t1)) == (143, 857)


def test_thirds_example():
    t1, t2 = schedule_times(0.1, 0.2, 0.05, 900, 0.0)
    assert t1 == pytest.approx(300)
    assert t2 - t1 == pytest.approx(600)


@pytest.mark.parametrize("b, hi, lo", [(0.1, 0.1, 0.1), (0.1, 0.05, 0.2), (0.3, 0.2, 0.1)])
def test_degenerate_or_misordered(b, hi, lo):
    with pytest.raises(ValueError):
        schedule_times(b, hi, lo, 1000, 0)


def test_budget_at_piecewise():
    s = BudgetSchedule(0.05)
    assert budget_at(s, 10) == 0.05  # no drift yet
    s = on_drift(s, 2000)
    t1, t2 = s.times
    assert (t1, t2) == pytest.approx((2000 + 1000 / 7, 3000))
    assert budget_at(s, 2000) == pytest.approx(0.2)
    assert budget_at(s, 2001) == pytest.approx(0.2)
    assert budget_at(s, 2143) == pytest.approx(0.025)
    assert budget_at(s, 2999) == pytest.approx(0.025)
    assert budget_at(s, 3000) == 0.05
    assert budget_at(s, 1999) == 0.05


def test_restart_on_second_drift():
    s = on_drift(on_drift(BudgetSchedule(0.1), 2000), 2500)
    assert s.t_drift == 2500
    assert budget_at(s, 2501) == pytest.approx(0.4)
    assert s.times[1] == pytest.approx(3500)


def test_two_discontinuities_per_episode():
    s = on_drift(BudgetSchedule(0.1), 100)
    values = [budget_at(s, t) for t in range(0, 1300)]
    jumps = sum(1 for a, b in zip(values, values[1:]) if a != b)
    assert jumps == 3  # b -> high at the drift, high -> low, low -> b


@pytest.mark.parametrize("kwargs", [dict(b=0.0), dict(b=1.5), dict(b=0.1, m_low=1.0), dict(b=0.1, m_high=0.9), dict(b=0.1, delta_t=0)])
def test_invalid_schedule(kwargs):
    with pytest.raises(ValueError):
        BudgetSchedule(**kwargs)


def test_full_budget_is_flat():
    s = on_drift(BudgetSchedule(1.0), 100)
    assert s.flat
    assert budget_at(s, 101) == 1.0


def test_high_level_capped_and_conserving():
    s = on_drift(BudgetSchedule(0.5), 0)
    assert s.b_high == 1.0
    t1, t2 = s.times
    assert t1 * 1.0 + (t2 - t1) * 0.25 == pytest.approx(0.5 * 1000, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(
    b=st.floats(0.01, 0.24),
    m_high=st.floats(1.1, 4.0),
    m_low=st.floats(0.05, 0.95),
    delta_t=st.floats(10, 5000),
    t_drift=st.floats(0, 1e5),
)
def test_conservation_identity(b, m_high, m_low, delta_t, t_drift):
    s = BudgetSchedule(b, m_high, m_low, delta_t, t_drift)
    t1, t2 = s.times
    assert t_drift < t1 < t2
    assert t2 == pytest.approx(t_drift + delta_t, rel=1e-12)
    total = (t1 - t_drift) * s.b_high + (t2 - t1) * s.b_low
    assert abs(total - b * delta_t) <= 1e-12 * max(1.0, b * delta_t) * 10


@settings(max_examples=50, deadline=None)
@given(b=st.floats(0.01, 0.24), t_drift=st.integers(0, 1000))
def test_discrete_sum_within_one_step(b, t_drift):
    s = on_drift(BudgetSchedule(b), t_drift)
    total = sum(budget_at(s, t) for t in range(t_drift, t_drift + 1000))
    assert abs(total - b * 1000) <= s.b_high
