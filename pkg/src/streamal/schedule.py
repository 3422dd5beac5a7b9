"""Drift-driven piecewise-constant budget.

After a detected drift the budget rises to ``b_high`` until ``t1``, drops
to ``b_low`` until ``t2 = t_drift + delta_t`` and returns to ``b``. The
switch time ``t1`` is chosen so the adjustment window spends exactly
``b * delta_t`` labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


def schedule_times(b: float, b_high: float, b_low: float, delta_t: float, t_drift: float) -> tuple[float, float]:
    if b_high == b_low:
        raise ValueError("degenerate schedule: b_high == b_low")
    if not b_low < b < b_high:
        raise ValueError(f"need b_low < b < b_high, got {b_low}, {b}, {b_high}")
    span = b_high - b_low
    t1 = t_drift + delta_t * (b - b_low) / span
    t2 = t1 + delta_t * (b_high - b) / span
    return t1, t2


@dataclass(frozen=True)
class BudgetSchedule:
    b: float
    m_high: float = 4.0
    m_low: float = 0.5
    delta_t: float = 1000.0
    t_drift: float = math.inf

    def __post_init__(self):
        if not 0.0 < self.b <= 1.0:
            raise ValueError("budget b must lie in (0, 1]")
        if self.delta_t <= 0:
            raise ValueError("delta_t must be positive")
        if not 0.0 < self.m_low < 1.0 < self.m_high:
            raise ValueError("need m_low < 1 < m_high with m_low > 0")

    @property
    def b_high(self) -> float:
        # a probability; the switch times use the capped level so the
        # adjustment window still spends b * delta_t
        return min(1.0, self.b * self.m_high)

    @property
    def flat(self) -> bool:
        """True when no boost is possible (b already at 1)."""
        return self.b_high <= self.b

    @property
    def b_low(self) -> float:
        return self.b * self.m_low

    @property
    def times(self) -> tuple[float, float]:
        return schedule_times(self.b, self.b_high, self.b_low, self.delta_t, self.t_drift)

    def budget_at(self, t: float) -> float:
        if math.isinf(self.t_drift) or self.flat:
            return self.b
        t1, t2 = self.times
        if self.t_drift <= t < t1:
            return self.b_high
        if t1 <= t < t2:
            return self.b_low
        return self.b

    def on_drift(self, t: float) -> "BudgetSchedule":
        """Re-anchor at ``t``; a drift inside an active window restarts it."""
        return replace(self, t_drift=t)


def budget_at(schedule: BudgetSchedule, t: float) -> float:
    return schedule.budget_at(t)


def on_drift(schedule: BudgetSchedule, t: float) -> BudgetSchedule:
    return schedule.on_drift(t)
