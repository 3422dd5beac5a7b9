"""Utility estimation under pending labels.

``PRopagate`` imputes the labels of pending queries by a time-weighted
k-nearest-neighbour vote over labeled window samples, then scores the
current sample with a classifier fitted on true and imputed labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import PWC
from .window import LabelState, SlidingWindow


@dataclass(frozen=True)
class PrConfig:
    k: int = 3
    lam: float = 0.01

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")


def time_weight(t_i, t_j, lam: float):
    """exp(-lam * (t_i - t_j)**2)."""
    dt = np.asarray(t_i, dtype=float) - np.asarray(t_j, dtype=float)
    return np.exp(-lam * dt * dt)


def _class_log_scores(log_w: np.ndarray, y_nn: np.ndarray, n_classes: int) -> np.ndarray:
    """Row-wise log of the summed weights per class; -inf for absent classes."""
    scores = np.full((log_w.shape[0], n_classes), -np.inf)
    for c in range(n_classes):
        masked = np.where(y_nn == c, log_w, -np.inf)
        top = masked.max(axis=1)
        present = np.isfinite(top)
        if present.any():
            shifted = np.exp(masked[present] - top[present, None])
            scores[present, c] = top[present] + np.log(shifted.sum(axis=1))
    return scores


def _break_tie(best: np.ndarray, neighbor_t: np.ndarray, neighbor_y: np.ndarray) -> int:
    tied = np.isin(neighbor_y, best)
    return int(neighbor_y[tied][np.argmax(neighbor_t[tied])])


def weighted_vote(
    t_query: int,
    neighbor_t: np.ndarray,
    neighbor_y: np.ndarray,
    n_classes: int,
    lam: float,
) -> int:
    """Class with the largest summed time weight among the given neighbours.

    Scores are compared in log space, so neighbours hundreds of steps old
    still rank by recency instead of all underflowing to zero. Ties go to
    the class of the most recent neighbour among the tied classes.
    """
    neighbor_t = np.asarray(neighbor_t)
    neighbor_y = np.asarray(neighbor_y)
    dt = neighbor_t.astype(float) - float(t_query)
    scores = _class_log_scores((-lam * dt * dt)[None, :], neighbor_y[None, :], n_classes)[0]
    best = np.flatnonzero(scores == scores.max())
    if len(best) == 1:
        return int(best[0])
    return _break_tie(best, neighbor_t, neighbor_y)


def propagate_labels(
    X_pending: np.ndarray,
    t_pending: np.ndarray,
    X_labeled: np.ndarray,
    t_labeled: np.ndarray,
    y_labeled: np.ndarray,
    n_classes: int,
    cfg: PrConfig,
) -> np.ndarray:
    """Impute a label for every pending sample (empty result if nothing is labeled)."""
    if len(y_labeled) == 0 or len(t_pending) == 0:
        return np.empty(0, dtype=np.int64)
    diff = X_pending[:, None, :] - X_labeled[None, :, :]
    dist = np.einsum("ijk,ijk->ij", diff, diff)
    k = min(cfg.k, len(y_labeled))
    if k < len(y_labeled):
        nn = np.argpartition(dist, k - 1, axis=1)[:, :k]
    else:
        nn = np.broadcast_to(np.arange(len(y_labeled)), (len(t_pending), k))
    t_nn = t_labeled[nn]
    y_nn = y_labeled[nn]
    dt = t_nn.astype(float) - np.asarray(t_pending, dtype=float)[:, None]
    scores = _class_log_scores(-cfg.lam * dt * dt, y_nn, n_classes)
    out = np.argmax(scores, axis=1)
    n_best = (scores == scores.max(axis=1, keepdims=True)).sum(axis=1)
    for i in np.flatnonzero(n_best > 1):
        best = np.flatnonzero(scores[i] == scores[i].max())
        out[i] = _break_tie(best, t_nn[i], y_nn[i])
    return out.astype(np.int64)


def propagate_pending(window: SlidingWindow, cfg: PrConfig, n_classes: int) -> SlidingWindow:
    """Give every pending entry a propagated label (recomputed from scratch).

    No-op when the window holds no labeled entry.
    """
    window.clear_propagated()
    lab = window.indices(LabelState.LABELED)
    pend = window.indices(LabelState.PENDING)
    if len(lab) == 0 or len(pend) == 0:
        return window
    labels = propagate_labels(
        window.X[pend], window.t[pend], window.X[lab], window.t[lab], window.label[lab],
        n_classes, cfg,
    )
    window.set_propagated(pend, labels)
    return window


def utility_pr(window: SlidingWindow, x, cfg: PrConfig, n_classes: int, bandwidth: float) -> float:
    propagate_pending(window, cfg, n_classes)
    model = PWC(n_classes, bandwidth, *window.training_set(include_propagated=True))
    return 1.0 - model.confidence(x)


def utility_ignore_pending(window: SlidingWindow, x, n_classes: int, bandwidth: float) -> float:
    model = PWC(n_classes, bandwidth, *window.training_set(include_propagated=False))
    return 1.0 - model.confidence(x)
