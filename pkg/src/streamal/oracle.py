"""Simulated labeling oracle with verification latency."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

UNIFORM = "uniform"
TRUNCNORM = "truncnorm"


@dataclass(frozen=True)
class LatencyDistribution:
    """Per-query delay distribution.

    ``uniform`` draws an integer delay from U(50, 50 + delta);
    ``truncnorm`` draws max(0, round(N(delta, scale))).
    """

    kind: str = TRUNCNORM
    delta: int = 0
    offset: int = 50
    scale: float = 50.0

    def __post_init__(self):
        if self.kind not in (UNIFORM, TRUNCNORM):
            raise ValueError(f"unknown latency distribution {self.kind!r}")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")


def sample_delay(dist: LatencyDistribution, rng: np.random.Generator) -> int:
    if dist.kind == UNIFORM:
        return int(rng.integers(dist.offset, dist.offset + dist.delta, endpoint=True))
    return max(0, int(round(rng.normal(dist.delta, dist.scale))))


@dataclass(order=True)
class PendingQuery:
    due: int
    t_query: int
    y_true: int = field(compare=False)


class DuplicateQueryError(ValueError):
    pass


class LatencyOracle:
    """Holds queried samples until their labels are due.

    Parameters
    ----------
    dist : LatencyDistribution
    rng : numpy.random.Generator
        Source of the delays; a run owns its own generator.
    """

    def __init__(self, dist: LatencyDistribution, rng: np.random.Generator):
        self.dist = dist
        self.rng = rng
        self._heap: list[PendingQuery] = []
        self._queried: set[int] = set()
        self.n_enqueued = 0
        self.n_delivered = 0

    def __len__(self) -> int:
        return len(self._heap)

    def enqueue(self, t_query: int, y_true: int, t_now: int | None = None) -> int:
        if t_query in self._queried:
            raise DuplicateQueryError(f"sample t={t_query} was already queried")
        t_now = t_query if t_now is None else t_now
        due = t_now + sample_delay(self.dist, self.rng)
        heapq.heappush(self._heap, PendingQuery(due, t_query, int(y_true)))
        self._queried.add(t_query)
        self.n_enqueued += 1
        return due

    def deliver_due(self, t_now: int) -> list[tuple[int, int]]:
        """Pop every query with ``due <= t_now``, ordered by (due, t_query)."""
        out = []
        while self._heap and self._heap[0].due <= t_now:
            q = heapq.heappop(self._heap)
            out.append((q.t_query, q.y_true))
        self.n_delivered += len(out)
        return out


def enqueue_query(oracle: LatencyOracle, t_query: int, y_true: int, t_now: int) -> int:
    return oracle.enqueue(t_query, y_true, t_now)


def deliver_due(oracle: LatencyOracle, t_now: int) -> list[tuple[int, int]]:
    return oracle.deliver_due(t_now)
