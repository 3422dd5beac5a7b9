"""Budget accounting and stream query strategies.

Every strategy first asks the budget manager; a strategy never queries
when the running label rate has reached the allowance.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classifier import PWC


@dataclass
class BudgetState:
    """Exponentially weighted label-rate accounting.

    Parameters
    ----------
    b_current : float
        Budget B(t) in force at the current step.
    spent : float
        Running label fraction, ``spent <- spent (1 - s) + s [queried]``.
    memory : float
        Accounting memory ``s`` (default ``1 / 500``).
    allowance : float, optional
        Running average of B(t) with the same memory. Equals ``b_current``
        while the budget is constant; under a time-varying budget the spent
        fraction is compared against it so the label count follows the
        integral of B(t).
    """

    b_current: float
    spent: float = 0.0
    memory: float = 1.0 / 500
    allowance: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.b_current <= 1.0:
            raise ValueError("budget must lie in [0, 1]")
        if self.allowance is None:
            self.allowance = self.b_current

    def set_budget(self, b: float) -> None:
        self.b_current = b
        self.allowance += self.memory * (b - self.allowance)

    def record(self, queried: bool) -> None:
        self.spent += self.memory * (float(queried) - self.spent)


def budget_available(state: BudgetState) -> bool:
    return state.spent < state.allowance


def decide_random(state: BudgetState, rng: np.random.Generator) -> bool:
    u = rng.uniform()
    return budget_available(state) and u < state.b_current


@dataclass
class SplitState:
    """Adaptive-threshold uncertainty sampling with a randomised branch."""

    theta: float = 1.0
    step: float = 0.01
    spread: float = 1.0


def decide_split(state: BudgetState, split: SplitState, utility: float, rng: np.random.Generator) -> bool:
    # draws happen every step so the random stream does not depend on the budget path
    fixed = rng.uniform() < 0.5
    eta = max(0.0, rng.normal(1.0, split.spread))
    if not budget_available(state):
        return False
    certainty = 1.0 - utility
    threshold = split.theta if fixed else split.theta * eta
    query = certainty < threshold
    if query:
        split.theta *= 1.0 - split.step
    else:
        split.theta *= 1.0 + split.step
    return query


def probabilistic_gain(
    freq: np.ndarray, rng: np.random.Generator, n_draws: int = 100
) -> float:
    """Monte-Carlo expected accuracy gain at a point from one more label.

    ``freq`` holds the per-class kernel frequencies around the point. The
    unknown local class distribution ``p`` is drawn from
    Dirichlet(freq + 1); accuracy of the count-based decision is ``p`` at
    the decided class, averaged over classes tied for the maximum.
    """
    freq = np.asarray(freq, dtype=float)
    C = len(freq)
    p = rng.dirichlet(freq + 1.0, size=n_draws)

    def decision_weights(counts):
        top = counts == counts.max()
        return top / top.sum()

    now = p @ decision_weights(freq)
    after = np.zeros(n_draws)
    for y in range(C):
        bumped = freq.copy()
        bumped[y] += 1.0
        after += p[:, y] * (p @ decision_weights(bumped))
    return float(np.mean(after - now))


@dataclass
class PalState:
    capacity: int = 500
    n_draws: int = 100
    gains: deque = field(default_factory=deque)

    def push(self, gain: float) -> None:
        self.gains.append(gain)
        while len(self.gains) > self.capacity:
            self.gains.popleft()


def decide_pal(
    state: BudgetState,
    pal: PalState,
    model: PWC,
    x,
    rng: np.random.Generator,
) -> bool:
    """Query when the probabilistic gain at ``x`` ranks in the top ``b_current``
    fraction of recent gains.

    ``model`` carries the labels the estimator makes visible (true labels,
    plus propagated ones under PR).
    """
    gain = probabilistic_gain(model.kernel_frequencies(x), rng, pal.n_draws)
    reservoir = np.fromiter(pal.gains, dtype=float, count=len(pal.gains))
    pal.push(gain)
    if not budget_available(state) or gain <= 0.0:
        return False
    if len(reservoir) == 0:
        return True
    # position of the gain among the reservoir plus itself (1 = best)
    position = np.count_nonzero(reservoir > gain) + 1
    return position <= state.b_current * (len(reservoir) + 1)


STRATEGIES = ("random", "split", "pal")
