"""Concept drift detectors.

DDM and ADWIN watch the 0/1 error stream of actively labeled samples;
HDDDM compares feature histograms batch by batch and needs no labels.
"""

from __future__ import annotations

import enum
import math
from collections import deque

import numpy as np


class DriftLevel(enum.Enum):
    STABLE = "stable"
    WARNING = "warning"
    DRIFT = "drift"


class DDM:
    """Drift Detection Method on a Bernoulli error stream.

    Parameters
    ----------
    min_samples : int, default=30
        Warm-up length; the detector reports STABLE until it is reached.
    warning_level, drift_level : float
        Multiples of ``s_min`` above ``p_min`` for warning and drift.
    """

    def __init__(self, min_samples: int = 30, warning_level: float = 2.0, drift_level: float = 3.0):
        self.min_samples = min_samples
        self.warning_level = warning_level
        self.drift_level = drift_level
        self.reset()

    def reset(self) -> None:
        self.n = 0
        self.p = 1.0
        self.s = 0.0
        self.p_min = math.inf
        self.s_min = math.inf

    def update(self, error) -> DriftLevel:
        self.n += 1
        self.p += (float(error) - self.p) / self.n
        self.s = math.sqrt(self.p * (1.0 - self.p) / self.n)
        if self.n < self.min_samples:
            return DriftLevel.STABLE
        if self.p + self.s <= self.p_min + self.s_min:
            self.p_min = self.p
            self.s_min = self.s
        level = self.p + self.s
        if level >= self.p_min + self.drift_level * self.s_min and level > self.p_min + self.s_min:
            self.reset()
            return DriftLevel.DRIFT
        if level >= self.p_min + self.warning_level * self.s_min and level > self.p_min + self.s_min:
            return DriftLevel.WARNING
        return DriftLevel.STABLE


class ADWIN:
    """Adaptive windowing with exponential-histogram bucket compression.

    Parameters
    ----------
    delta : float, default=0.002
        Confidence of the cut test.
    max_buckets : int, default=5
        Buckets kept per size class before two are merged.
    min_window : int, default=10
        No cut is tested before the window holds this many values.
    min_sub_window : int, default=5
        Smallest admissible sub-window on either side of a cut.
    """

    def __init__(self, delta: float = 0.002, max_buckets: int = 5, min_window: int = 10, min_sub_window: int = 5):
        self.delta = delta
        self.max_buckets = max_buckets
        self.min_window = min_window
        self.min_sub_window = min_sub_window
        # rows[i] holds buckets of size 2**i as [total, count], oldest first
        self.rows: list[deque] = []
        self.width = 0
        self.total = 0.0
        self.n_detections = 0

    @property
    def mean(self) -> float:
        return self.total / self.width if self.width else 0.0

    def _insert(self, value: float) -> None:
        if not self.rows:
            self.rows.append(deque())
        self.rows[0].append((value, 1))
        self.width += 1
        self.total += value
        i = 0
        while i < len(self.rows) and len(self.rows[i]) > self.max_buckets:
            a = self.rows[i].popleft()
            b = self.rows[i].popleft()
            if i + 1 == len(self.rows):
                self.rows.append(deque())
            self.rows[i + 1].append((a[0] + b[0], a[1] + b[1]))
            i += 1

    def _drop_oldest(self) -> None:
        for i in range(len(self.rows) - 1, -1, -1):
            if self.rows[i]:
                total, count = self.rows[i].popleft()
                self.width -= count
                self.total -= total
                if not self.rows[i] and i == len(self.rows) - 1:
                    self.rows.pop()
                return

    def _buckets_oldest_first(self):
        for row in reversed(self.rows):
            yield from row

    def _cut_found(self) -> bool:
        if self.width < self.min_window:
            return False
        delta_prime = self.delta / self.width
        log_term = math.log(4.0 / delta_prime)
        n0, s0 = 0, 0.0
        for total, count in self._buckets_oldest_first():
            n0 += count
            s0 += total
            n1 = self.width - n0
            if n1 < self.min_sub_window:
                break
            if n0 < self.min_sub_window:
                continue
            m = 1.0 / (1.0 / n0 + 1.0 / n1)
            eps = math.sqrt(log_term / (2.0 * m))
            if abs(s0 / n0 - (self.total - s0) / n1) > eps:
                return True
        return False

    def update(self, value) -> bool:
        self._insert(float(value))
        detected = False
        while self._cut_found():
            self._drop_oldest()
            detected = True
        if detected:
            self.n_detections += 1
        return detected


def hellinger(p: np.ndarray, q: np.ndarray) -> float:
    """Hellinger distance between two normalised histograms, in [0, 1]."""
    bc = float(np.sum(np.sqrt(np.asarray(p) * np.asarray(q))))
    return math.sqrt(max(0.0, 1.0 - min(1.0, bc)))


class HDDDM:
    """Hellinger distance drift detection on raw features.

    Bin edges per feature are fixed from the reference batch; the outermost
    bins are open so later values always land in a bin. A detection replaces
    the reference by the current batch but keeps the history of distance
    changes, so a false alarm does not leave the detector uncalibrated.

    Parameters
    ----------
    batch_size : int, default=100
    gamma : float, default=1.0
        Sensitivity: drift when the change in distance exceeds the mean
        plus ``gamma`` standard deviations of past changes.
    n_bins : int, optional
        Defaults to ``floor(sqrt(batch_size))``.
    """

    def __init__(self, batch_size: int = 100, gamma: float = 1.0, n_bins: int | None = None):
        self.batch_size = batch_size
        self.gamma = gamma
        self.n_bins = n_bins or int(math.floor(math.sqrt(batch_size)))
        self._buffer: list[np.ndarray] = []
        self.edges: list[np.ndarray] | None = None
        self.reset()

    def reset(self) -> None:
        self.reference: np.ndarray | None = None
        self.prev_distance: float | None = None
        self.changes: list[float] = []

    def _counts(self, batch: np.ndarray) -> np.ndarray:
        return np.stack([
            np.bincount(np.searchsorted(edges, batch[:, j], side="right"), minlength=self.n_bins)
            for j, edges in enumerate(self.edges)
        ]).astype(float)

    def _set_reference(self, batch: np.ndarray) -> None:
        self.edges = [
            np.linspace(lo, hi, self.n_bins + 1)[1:-1]
            for lo, hi in zip(batch.min(axis=0), batch.max(axis=0))
        ]
        self.reference = self._counts(batch)

    def distance(self, batch: np.ndarray) -> float:
        """Mean per-feature Hellinger distance of ``batch`` to the reference."""
        cur = self._counts(batch)
        ref = self.reference / self.reference.sum(axis=1, keepdims=True)
        cur_n = cur / cur.sum(axis=1, keepdims=True)
        return float(np.mean([hellinger(r, c) for r, c in zip(ref, cur_n)]))

    def _test_batch(self, batch: np.ndarray) -> bool:
        if self.reference is None:
            self._set_reference(batch)
            return False
        dist = self.distance(batch)
        if self.prev_distance is not None:
            change = abs(dist - self.prev_distance)
            if len(self.changes) >= 2:
                hist = np.asarray(self.changes)
                if change > hist.mean() + self.gamma * hist.std(ddof=1):
                    # only the reference restarts; past changes keep calibrating the threshold
                    self.prev_distance = None
                    self._set_reference(batch)
                    return True
            self.changes.append(change)
        self.reference = self.reference + self._counts(batch)
        self.prev_distance = dist
        return False

    def update(self, x) -> bool:
        self._buffer.append(np.asarray(x, dtype=float).reshape(-1))
        if len(self._buffer) < self.batch_size:
            return False
        batch = np.vstack(self._buffer)
        self._buffer = []
        return self._test_batch(batch)


def ddm_update(state: DDM, error) -> DriftLevel:
    return state.update(error)


def adwin_update(state: ADWIN, value) -> bool:
    return state.update(value)


def hdddm_update(state: HDDDM, x) -> bool:
    return state.update(x)


DETECTORS = ("none", "ddm", "adwin", "hdddm")


def make_detector(name: str, **kwargs):
    if name == "none":
        return None
    if name == "ddm":
        return DDM(**kwargs)
    if name == "adwin":
        return ADWIN(**kwargs)
    if name == "hdddm":
        return HDDDM(**kwargs)
    raise ValueError(f"unknown detector {name!r}")
