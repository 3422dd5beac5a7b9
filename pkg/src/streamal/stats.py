"""Drift-detection scoring and nonparametric comparison tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as sps


@dataclass(frozen=True)
class DetectionRecord:
    true_drift: int
    detections: tuple
    window: float = 1000.0


def h_score(record: DetectionRecord) -> float:
    """Harmonic mean of detection precision and timeliness.

    A detection matches when it falls in ``[drift, drift + window]``.
    Precision is matched / all detections; timeliness is
    ``max(0, 1 - delay / window)`` of the first matched detection.
    """
    dets = sorted(record.detections)
    if not dets:
        return 0.0
    lo, hi = record.true_drift, record.true_drift + record.window
    matched = [d for d in dets if lo <= d <= hi]
    if not matched:
        return 0.0
    precision = len(matched) / len(dets)
    timeliness = max(0.0, 1.0 - (matched[0] - lo) / record.window)
    if precision + timeliness == 0:
        return 0.0
    return 2 * precision * timeliness / (precision + timeliness)


def midranks(values: np.ndarray) -> np.ndarray:
    return sps.rankdata(values, method="average")


def _exact_u_pvalue(ranks_a2: np.ndarray, ranks_all2: np.ndarray, observed: int) -> float:
    """Two-sided exact p-value of a doubled rank sum by dynamic programming.

    ``ranks_*2`` are twice the midranks (integers); ``count[j][s]`` counts
    subsets of size ``j`` whose doubled rank sum is ``s``.
    """
    n1 = len(ranks_a2)
    total = int(ranks_all2.sum())
    count = [dict() for _ in range(n1 + 1)]
    count[0][0] = 1
    for r in ranks_all2:
        r = int(r)
        for j in range(n1 - 1, -1, -1):
            for s, c in count[j].items():
                count[j + 1][s + r] = count[j + 1].get(s + r, 0) + c
    dist = count[n1]
    n_subsets = sum(dist.values())
    center = n1 * total / len(ranks_all2)
    dev = abs(observed - center)
    extreme = sum(c for s, c in dist.items() if abs(s - center) >= dev - 1e-9)
    return min(1.0, extreme / n_subsets)


def mann_whitney_u(a: Sequence[float], b: Sequence[float], exact_max: int = 8) -> tuple[float, float]:
    """Mann-Whitney U of ``a`` against ``b`` with a two-sided p-value.

    Exact permutation distribution (midranks, ties included) when the
    smaller sample has at most ``exact_max`` values; otherwise the normal
    approximation with tie-corrected variance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be non-empty")
    n1, n2 = len(a), len(b)
    pooled = np.concatenate([a, b])
    ranks = midranks(pooled)
    r1 = ranks[:n1].sum()
    u = r1 - n1 * (n1 + 1) / 2.0
    if min(n1, n2) <= exact_max:
        ranks2 = np.rint(2 * ranks).astype(np.int64)
        # the two-sided p is symmetric, so enumerate over the smaller sample
        small = ranks2[:n1] if n1 <= n2 else ranks2[n1:]
        return float(u), _exact_u_pvalue(small, ranks2, int(small.sum()))
    n = n1 + n2
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (n * (n - 1))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return float(u), 1.0
    z = (u - n1 * n2 / 2.0) / math.sqrt(var)
    return float(u), float(min(1.0, 2.0 * sps.norm.sf(abs(z))))


# two-tailed Nemenyi critical values q_0.05 (studentized range / sqrt(2))
NEMENYI_Q05 = {
    2: 1.960, 3: 2.343, 4: 2.569, 5: 2.728, 6: 2.850,
    7: 2.949, 8: 3.031, 9: 3.102, 10: 3.164,
}


def nemenyi_q(k: int, alpha: float = 0.05) -> float:
    if alpha == 0.05 and k in NEMENYI_Q05:
        return NEMENYI_Q05[k]
    return float(sps.studentized_range.ppf(1 - alpha, k, np.inf) / math.sqrt(2))


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    pvalue: float
    mean_ranks: np.ndarray
    critical_difference: float


def friedman_nemenyi(scores, alpha: float = 0.05) -> FriedmanResult:
    """Friedman test over an (algorithms x datasets) score matrix.

    Higher scores are better; rank 1 is the best algorithm on a dataset.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2:
        raise ValueError("scores must be a 2-d matrix (algorithms x datasets)")
    k, n = scores.shape
    if k < 2 or n < 2:
        raise ValueError("need at least two algorithms and two datasets")
    ranks = np.column_stack([midranks(-scores[:, j]) for j in range(n)])
    mean_ranks = ranks.mean(axis=1)
    chi2 = 12.0 * n / (k * (k + 1)) * (np.sum(mean_ranks**2) - k * (k + 1) ** 2 / 4.0)
    chi2 = max(0.0, float(chi2))
    p = float(sps.chi2.sf(chi2, k - 1))
    cd = nemenyi_q(k, alpha) * math.sqrt(k * (k + 1) / (6.0 * n))
    return FriedmanResult(chi2, p, mean_ranks, cd)
