import numpy as np
import pytest

from streamal.oracle import (
    DuplicateQueryError,
    LatencyDistribution,
    LatencyOracle,
    deliver_due,
    enqueue_query,
    sample_delay,
)


class FixedDelays:
    """Stand-in generator replaying scripted delays."""

    def __init__(self, delays):
        self.delays = list(delays)

    def normal(self, loc, scale):
        return self.delays.pop(0)


def test_heap_drains_in_due_then_query_order():
    oracle = LatencyOracle(LatencyDistribution("truncnorm", 0), FixedDelays([5, 6, 4]))
    assert enqueue_query(oracle, 2, 1, 2) == 7
    assert enqueue_query(oracle, 1, 0, 1) == 7
    assert oracle.enqueue(3, 1, 1) == 5
    assert deliver_due(oracle, 4) == []
    assert deliver_due(oracle, 5) == [(3, 1)]
    assert deliver_due(oracle, 7) == [(1, 0), (2, 1)]
    assert len(oracle) == 0
    assert (oracle.n_enqueued, oracle.n_delivered) == (3, 3)


def test_duplicate_query_rejected(rng):
    oracle = LatencyOracle(LatencyDistribution("uniform", 0), rng)
    oracle.enqueue(1, 0)
    with pytest.raises(DuplicateQueryError):
        oracle.enqueue(1, 0)


def test_uniform_zero_delta_is_exactly_fifty(rng):
    dist = LatencyDistribution("uniform", 0)
    assert {sample_delay(dist, rng) for _ in range(200)} == {50}


def test_uniform_support(rng):
    dist = LatencyDistribution("uniform", 100)
    d = np.array([sample_delay(dist, rng) for _ in range(20_000)])
    assert d.min() == 50 and d.max() == 150
    assert d.mean() == pytest.approx(100, abs=1.0)


def test_truncnorm_is_clipped_at_zero(rng):
    dist = LatencyDistribution("truncnorm", 0)
    d = np.array([sample_delay(dist, rng) for _ in range(20_000)])
    assert d.min() == 0
    # half the mass of N(0, 50) is clipped to zero
    assert np.mean(d == 0) == pytest.approx(0.5, abs=0.02)


def test_truncnorm_mean_far_from_zero(rng):
    dist = LatencyDistribution("truncnorm", 300)
    d = np.array([sample_delay(dist, rng) for _ in range(20_000)])
    assert d.mean() == pytest.approx(300, abs=1.5)


@pytest.mark.parametrize("kind, delta", [("gamma", 10), ("uniform", -1)])
def test_invalid_distribution(kind, delta):
    with pytest.raises(ValueError):
        LatencyDistribution(kind, delta)


def test_every_query_delivered_exactly_once(rng):
    oracle = LatencyOracle(LatencyDistribution("truncnorm", 30), rng)
    seen = []
    for t in range(1, 500):
        seen += [q for q, _ in oracle.deliver_due(t)]
        if t % 3 == 0:
            oracle.enqueue(t, t % 2, t)
    seen += [q for q, _ in oracle.deliver_due(10**9)]
    assert sorted(seen) == list(range(3, 500, 3))
