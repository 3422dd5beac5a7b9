"""Parzen window classifier over the labeled part of the sliding window."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist


def default_bandwidth(X: np.ndarray, scale: float = 0.5) -> float:
    """Half the mean pairwise Euclidean distance of ``X`` (falls back to 1)."""
    X = np.asarray(X, dtype=float)
    if len(X) < 2:
        return 1.0
    mean_dist = float(pdist(X).mean())
    return scale * mean_dist if mean_dist > 0 else 1.0


class PWC:
    """Parzen Window Classifier with a Gaussian kernel.

    The model is nonparametric; "fitting" only stores the training set.

    Parameters
    ----------
    n_classes : int
        Number of classes ``C``.
    bandwidth : float
        Kernel width ``sigma`` in ``exp(-||x - x'||^2 / (2 sigma^2))``.
    X, y : array-like, optional
        Training samples and their class indices.
    """

    def __init__(self, n_classes: int, bandwidth: float, X=None, y=None):
        if n_classes < 1:
            raise ValueError("n_classes must be >= 1")
        if not bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        self.n_classes = int(n_classes)
        self.bandwidth = float(bandwidth)
        self.fit(X, y)

    def fit(self, X=None, y=None) -> "PWC":
        if X is None or len(X) == 0:
            self.X_ = np.empty((0, 0))
            self.y_ = np.empty(0, dtype=np.int64)
            return self
        self.X_ = np.atleast_2d(np.asarray(X, dtype=float))
        self.y_ = np.asarray(y, dtype=np.int64)
        if len(self.y_) != len(self.X_):
            raise ValueError("X and y have different lengths")
        if self.y_.min() < 0 or self.y_.max() >= self.n_classes:
            raise ValueError("class index out of range")
        return self

    def _log_kernels(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.X_.shape[1]:
            raise ValueError(
                f"dimension mismatch: got {x.shape[0]}, model has {self.X_.shape[1]}"
            )
        diff = self.X_ - x
        return -np.einsum("ij,ij->i", diff, diff) / (2.0 * self.bandwidth**2)

    def kernel_frequencies(self, x) -> np.ndarray:
        """Per-class kernel sums ``sum_{i: y_i = c} K(x, x_i)``."""
        freq = np.zeros(self.n_classes)
        if len(self.y_) == 0:
            return freq
        return np.bincount(
            self.y_, weights=np.exp(self._log_kernels(x)), minlength=self.n_classes
        )

    def posterior(self, x) -> np.ndarray:
        if len(self.y_) == 0:
            return np.full(self.n_classes, 1.0 / self.n_classes)
        log_k = self._log_kernels(x)
        # the posterior is a ratio of kernel sums, so a common factor cancels;
        # shifting by the max keeps far-away queries from underflowing to 0/0
        k = np.exp(log_k - log_k.max())
        freq = np.bincount(self.y_, weights=k, minlength=self.n_classes)
        return freq / freq.sum()

    def predict(self, x) -> int:
        # np.argmax returns the first maximum, i.e. the lowest class index on ties
        return int(np.argmax(self.posterior(x)))

    def confidence(self, x) -> float:
        return float(self.posterior(x).max())


def posterior(model: PWC, x) -> np.ndarray:
    return model.posterior(x)


def predict(model: PWC, x) -> int:
    return model.predict(x)


def confidence(model: PWC, x) -> float:
    return model.confidence(x)
