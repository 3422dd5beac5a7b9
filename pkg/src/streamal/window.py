"""Timestamped stream samples and the sliding training window."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np


class LabelState(enum.IntEnum):
    UNLABELED = 0
    PENDING = 1
    LABELED = 2
    PROPAGATED = 3


@dataclass(frozen=True)
class StreamEvent:
    """A single stream sample.

    ``y_true`` is hidden from the learner; only the oracle and the
    evaluation read it.
    """

    t: int
    x: np.ndarray
    y_true: int


@dataclass(frozen=True)
class WindowEntry:
    event: StreamEvent
    state: LabelState
    label: Optional[int] = None
    due: Optional[int] = None


class DuplicateDeliveryError(ValueError):
    """A true label was delivered to an entry that is already labeled."""


class SlidingWindow:
    """The last ``capacity`` samples together with their label state.

    Storage is a set of parallel numpy arrays kept in chronological order,
    so the learner can slice labeled/pending subsets without a Python loop.

    Parameters
    ----------
    capacity : int
        Number of samples retained (``l``).
    n_features : int
        Feature dimension ``d``.
    """

    def __init__(self, capacity: int, n_features: int):
        if capacity < 1:
            raise ValueError("capacity must be a positive integer")
        if n_features < 1:
            raise ValueError("n_features must be >= 1")
        self.capacity = int(capacity)
        self.n_features = int(n_features)
        self.t = np.zeros(capacity, dtype=np.int64)
        self.X = np.zeros((capacity, n_features), dtype=float)
        self.y_true = np.zeros(capacity, dtype=np.int64)
        self.state = np.zeros(capacity, dtype=np.int8)
        self.label = np.full(capacity, -1, dtype=np.int64)
        self.due = np.full(capacity, -1, dtype=np.int64)
        self.size = 0
        self.dropped_deliveries = 0

    def __len__(self) -> int:
        return self.size

    @property
    def newest_t(self) -> Optional[int]:
        return int(self.t[self.size - 1]) if self.size else None

    def push(self, event: StreamEvent) -> None:
        """Append ``event`` as unlabeled, evicting the oldest entry when full."""
        x = np.asarray(event.x, dtype=float).reshape(-1)
        if x.shape[0] != self.n_features:
            raise ValueError(
                f"sample at t={event.t} has dimension {x.shape[0]}, "
                f"expected {self.n_features}"
            )
        if self.size and event.t <= self.t[self.size - 1]:
            raise ValueError(
                f"non-monotone timestamp: t={event.t} after t={self.t[self.size - 1]}"
            )
        if self.size == self.capacity:
            for arr in (self.t, self.X, self.y_true, self.state, self.label, self.due):
                arr[:-1] = arr[1:]
            i = self.capacity - 1
        else:
            i = self.size
            self.size += 1
        self.t[i] = event.t
        self.X[i] = x
        self.y_true[i] = event.y_true
        self.state[i] = LabelState.UNLABELED
        self.label[i] = -1
        self.due[i] = -1

    def index_of(self, t: int) -> Optional[int]:
        i = int(np.searchsorted(self.t[: self.size], t))
        if i < self.size and self.t[i] == t:
            return i
        return None

    def mark_pending(self, t: int, due: int) -> None:
        i = self.index_of(t)
        if i is None:
            raise KeyError(f"no entry with t={t} in window")
        if self.state[i] == LabelState.LABELED:
            raise ValueError(f"entry t={t} is already labeled")
        self.state[i] = LabelState.PENDING
        self.due[i] = due

    def attach_label(self, t_query: int, y: int) -> bool:
        """Store a delivered true label.

        Returns False (and counts a dropped delivery) when the sample has
        already left the window.
        """
        i = self.index_of(t_query)
        if i is None:
            self.dropped_deliveries += 1
            return False
        if self.state[i] == LabelState.LABELED:
            raise DuplicateDeliveryError(f"duplicate delivery for t={t_query}")
        self.state[i] = LabelState.LABELED
        self.label[i] = int(y)
        self.due[i] = -1
        return True

    def set_labeled(self, t: int, y: int) -> None:
        """Mark an entry labeled without delivery bookkeeping (initialisation)."""
        i = self.index_of(t)
        if i is None:
            raise KeyError(f"no entry with t={t} in window")
        self.state[i] = LabelState.LABELED
        self.label[i] = int(y)

    def set_propagated(self, idx: np.ndarray, labels: np.ndarray) -> None:
        idx = np.asarray(idx, dtype=np.int64)
        if np.any(self.state[idx] == LabelState.LABELED):
            raise ValueError("cannot propagate onto a labeled entry")
        self.state[idx] = LabelState.PROPAGATED
        self.label[idx] = labels

    def clear_propagated(self) -> None:
        """Turn every propagated entry back into a pending one."""
        n = self.size
        mask = self.state[:n] == LabelState.PROPAGATED
        self.state[:n][mask] = LabelState.PENDING
        self.label[:n][mask] = -1

    def indices(self, state: LabelState) -> np.ndarray:
        n = self.size
        if state == LabelState.PENDING:
            # propagated entries are still awaiting their true label
            mask = (self.state[:n] == LabelState.PENDING) | (
                self.state[:n] == LabelState.PROPAGATED
            )
            return np.flatnonzero(mask)
        return np.flatnonzero(self.state[:n] == state)

    def training_set(self, include_propagated: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Feature matrix and labels of labeled (and optionally propagated) entries."""
        n = self.size
        mask = self.state[:n] == LabelState.LABELED
        if include_propagated:
            mask |= self.state[:n] == LabelState.PROPAGATED
        return self.X[:n][mask], self.label[:n][mask]

    def entry(self, i: int) -> WindowEntry:
        if not 0 <= i < self.size:
            raise IndexError(i)
        state = LabelState(int(self.state[i]))
        event = StreamEvent(int(self.t[i]), self.X[i].copy(), int(self.y_true[i]))
        label = int(self.label[i]) if state in (LabelState.LABELED, LabelState.PROPAGATED) else None
        due = int(self.due[i]) if self.due[i] >= 0 else None
        return WindowEntry(event, state, label, due)

    def __iter__(self) -> Iterator[WindowEntry]:
        for i in range(self.size):
            yield self.entry(i)

    def copy(self) -> "SlidingWindow":
        other = SlidingWindow(self.capacity, self.n_features)
        for name in ("t", "X", "y_true", "state", "label", "due"):
            setattr(other, name, getattr(self, name).copy())
        other.size = self.size
        other.dropped_deliveries = self.dropped_deliveries
        return other


def push_sample(window: SlidingWindow, event: StreamEvent) -> SlidingWindow:
    window.push(event)
    return window


def attach_label(window: SlidingWindow, t_query: int, y: int) -> SlidingWindow:
    window.attach_label(t_query, y)
    return window


def partition(window: SlidingWindow) -> tuple[list, list, list, list]:
    """Split the window into (labeled, pending, unlabeled, propagated) entries."""
    groups: dict[LabelState, list] = {s: [] for s in LabelState}
    for entry in window:
        groups[entry.state].append(entry)
    return (
        groups[LabelState.LABELED],
        groups[LabelState.PENDING],
        groups[LabelState.UNLABELED],
        groups[LabelState.PROPAGATED],
    )
