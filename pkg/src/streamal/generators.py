"""Synthetic streams, gradual drift injection and CSV ingestion.

Streams are materialised as a :class:`Stream` (feature matrix plus labels);
``t`` of row ``i`` is ``i + 1``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .window import StreamEvent


@dataclass(frozen=True)
class DriftSpec:
    """Gradual corruption of the most informative features.

    ``mode="permute"`` replaces a value by a label-independent draw from the
    feature's own pre-drift values (the marginal is kept). ``mode="shift"``
    does the same and then offsets the draw by ``shift`` standard
    deviations, so the marginal moves as well.
    """

    position: float = 0.5
    width: int = 1
    n_features: int = 1
    mode: str = "permute"
    shift: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.position < 1.0:
            raise ValueError("drift position must lie in (0, 1)")
        if self.width < 1:
            raise ValueError("drift width must be >= 1")
        if self.n_features < 1:
            raise ValueError("n_features must be >= 1")
        if self.mode not in ("permute", "shift"):
            raise ValueError(f"unknown drift mode {self.mode!r}")


@dataclass(frozen=True)
class StreamSpec:
    kind: str
    n: int = 4000
    d: int = 2
    n_classes: int = 2
    seed: int = 0
    drift: Optional[DriftSpec] = None
    path: Optional[str] = None
    label_column: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("rbf", "hyperplane", "stagger", "csv"):
            raise ValueError(f"unknown stream kind {self.kind!r}")
        if self.kind != "csv":
            if self.n <= 0:
                raise ValueError("stream length must be positive")
            if self.d < 1:
                raise ValueError("feature dimension must be >= 1")
            if self.n_classes < 2:
                raise ValueError("need at least two classes")
        if self.kind in ("hyperplane", "stagger") and self.n_classes != 2:
            raise ValueError(f"{self.kind} streams are binary")
        if self.kind == "stagger" and self.d != 2:
            raise ValueError("stagger is encoded into exactly 2 features")


@dataclass
class Stream:
    X: np.ndarray
    y: np.ndarray
    n_classes: int
    name: str = ""
    drift_start: Optional[int] = None  # row index of the first corrupted sample
    drifted_features: tuple = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.y)

    @property
    def drift_t(self) -> Optional[int]:
        return None if self.drift_start is None else self.drift_start + 1

    def events(self) -> Iterator[StreamEvent]:
        for i in range(len(self.y)):
            yield StreamEvent(i + 1, self.X[i], int(self.y[i]))


PRESETS = {
    "RBF_2_2": dict(kind="rbf", n=4000, d=2, n_classes=2),
    "RBF_10_4": dict(kind="rbf", n=4000, d=10, n_classes=4),
    "hyperplane": dict(kind="hyperplane", n=4000, d=2, n_classes=2),
    "stagger": dict(kind="stagger", n=4000, d=2, n_classes=2),
}


def preset(name: str, seed: int = 0, drift: Optional[DriftSpec] = None) -> StreamSpec:
    try:
        return StreamSpec(seed=seed, drift=drift, **PRESETS[name])
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def _balanced_labels(n: int, n_classes: int, rng: np.random.Generator) -> np.ndarray:
    y = np.arange(n) % n_classes
    rng.shuffle(y)
    return y


def gen_rbf(spec: StreamSpec, centroids_per_class: int = 3, max_std: float = 0.3) -> Stream:
    """Random radial-basis-function stream (MOA ``RandomRBF`` layout).

    Centroids are drawn once from the seed: centre uniform in the unit
    cube, standard deviation ``U(0, max_std)`` and a random weight. Each
    sample first draws its class uniformly, then one of that class's
    centroids by weight, so the classes stay balanced.

    The defaults keep the concept learnable by a Parzen window classifier
    with the default bandwidth (MOA's 50 centroids with ``max_std=1`` sit
    near chance level).
    """
    if centroids_per_class < 1:
        raise ValueError("need at least one centroid per class")
    n_centroids = centroids_per_class * spec.n_classes
    rng = np.random.default_rng(spec.seed)
    centers = rng.uniform(0.0, 1.0, size=(n_centroids, spec.d))
    stds = rng.uniform(0.0, max_std, size=n_centroids)
    weights = rng.uniform(0.0, 1.0, size=n_centroids)
    owner = np.arange(n_centroids) % spec.n_classes
    y = _balanced_labels(spec.n, spec.n_classes, rng)
    idx = np.empty(spec.n, dtype=np.int64)
    for c in range(spec.n_classes):
        mine = np.flatnonzero(owner == c)
        rows = np.flatnonzero(y == c)
        idx[rows] = rng.choice(mine, size=len(rows), p=weights[mine] / weights[mine].sum())
    # MOA scales a random direction by a Gaussian magnitude
    direction = rng.normal(size=(spec.n, spec.d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    magnitude = rng.normal(size=(spec.n, 1)) * stds[idx, None]
    X = centers[idx] + direction * magnitude
    return Stream(X, y.astype(np.int64), spec.n_classes, name="rbf")


def hyperplane_label(x: np.ndarray, weights: np.ndarray, offset: float) -> np.ndarray:
    return (np.atleast_2d(x) @ weights > offset).astype(np.int64)


def gen_hyperplane(spec: StreamSpec) -> Stream:
    """Uniform points in the unit cube labeled by a random hyperplane through its centre."""
    rng = np.random.default_rng(spec.seed)
    weights = rng.uniform(-1.0, 1.0, size=spec.d)
    offset = float(weights.sum() / 2.0)
    X = rng.uniform(0.0, 1.0, size=(spec.n, spec.d))
    return Stream(X, hyperplane_label(X, weights, offset), 2, name="hyperplane")


# STAGGER attributes: size, colour, shape, each with three values (index 0..2)
STAGGER_CONCEPTS = {
    0: lambda size, color, shape: (size == 0) & (color == 0),  # small and red
    1: lambda size, color, shape: (color == 1) | (shape == 0),  # green or circle
    2: lambda size, color, shape: (size == 1) | (size == 2),  # medium or large
}


def stagger_encode(size, color, shape) -> np.ndarray:
    """Compress the three categorical attributes into two coordinates.

    The first coordinate enumerates (size, colour) pairs, the second the
    shape; both scaled to [0, 1].
    """
    size, color, shape = (np.asarray(a) for a in (size, color, shape))
    return np.column_stack([(3 * color + size) / 8.0, shape / 2.0])


def gen_stagger(spec: StreamSpec, concept: int = 1) -> Stream:
    rng = np.random.default_rng(spec.seed)
    size, color, shape = rng.integers(0, 3, size=(3, spec.n))
    y = STAGGER_CONCEPTS[concept](size, color, shape).astype(np.int64)
    return Stream(stagger_encode(size, color, shape), y, 2, name="stagger")


def mutual_information(x: np.ndarray, y: np.ndarray, n_bins: int = 10) -> float:
    """Plug-in mutual information (nats) with equal-frequency bins on ``x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    edges = np.unique(np.quantile(x, np.linspace(0, 1, n_bins + 1)[1:-1]))
    xb = np.searchsorted(edges, x, side="right")
    _, yb = np.unique(y, return_inverse=True)
    joint = np.zeros((xb.max() + 1, yb.max() + 1))
    np.add.at(joint, (xb, yb), 1.0)
    joint /= joint.sum()
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log(joint[nz] / (px @ py)[nz])))


def rank_features(X: np.ndarray, y: np.ndarray, n_bins: int = 10) -> np.ndarray:
    """Feature indices ordered from most to least informative about ``y``."""
    mi = np.array([mutual_information(X[:, j], y, n_bins) for j in range(X.shape[1])])
    return np.argsort(-mi, kind="stable")


def inject_gradual_drift(stream: Stream, drift: DriftSpec, seed: int) -> Stream:
    """Corrupt the top-``drift.n_features`` features from ``floor(position * n)`` on.

    Inside the transition each sample is corrupted with probability
    rising linearly from ``1/width`` to 1, so ``width=1`` is an abrupt drift.
    """
    n, d = stream.X.shape
    if drift.n_features > d:
        raise ValueError(f"cannot corrupt {drift.n_features} of {d} features")
    rng = np.random.default_rng(seed)
    start = int(math.floor(drift.position * n))
    features = rank_features(stream.X[:start], stream.y[:start])[: drift.n_features]
    X = stream.X.copy()
    n_post = n - start
    strength = np.minimum(1.0, (np.arange(n_post) + 1) / drift.width)
    corrupt = rng.uniform(size=(n_post, len(features))) < strength[:, None]
    for col, j in enumerate(features):
        pre = stream.X[:start, j]
        draws = rng.choice(pre, size=n_post, replace=True)
        if drift.mode == "shift":
            draws = draws + drift.shift * pre.std()
        rows = start + np.flatnonzero(corrupt[:, col])
        X[rows, j] = draws[corrupt[:, col]]
    return Stream(X, stream.y.copy(), stream.n_classes, stream.name, start, tuple(int(f) for f in features))


class CsvFormatError(ValueError):
    pass


def load_csv_stream(path, label_column: str, standardize: bool = True) -> Stream:
    """Read a labeled stream from a CSV file with a header row.

    Features are z-scored with a full pass over the file. Class indices
    follow the sorted order of the distinct label values.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"stream file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        if label_column not in header:
            raise CsvFormatError(f"{path}: unknown label column {label_column!r}")
        li = header.index(label_column)
        feat_names = [h for k, h in enumerate(header) if k != li]
        rows, labels = [], []
        for r, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvFormatError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
            values = []
            for k, cell in enumerate(row):
                if k == li:
                    continue
                try:
                    values.append(float(cell))
                except ValueError:
                    raise CsvFormatError(
                        f"{path}: non-numeric value {cell!r} at row {r}, column {header[k]!r}"
                    ) from None
            rows.append(values)
            labels.append(row[li].strip())
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    X = np.asarray(rows, dtype=float).reshape(len(rows), len(feat_names))
    classes, y = np.unique(np.asarray(labels), return_inverse=True)
    if standardize:
        sd = X.std(axis=0)
        X = (X - X.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
    return Stream(X, y.astype(np.int64), max(2, len(classes)), name=path.stem)


def make_stream(spec: StreamSpec) -> Stream:
    if spec.kind == "rbf":
        stream = gen_rbf(spec)
    elif spec.kind == "hyperplane":
        stream = gen_hyperplane(spec)
    elif spec.kind == "stagger":
        stream = gen_stagger(spec)
    else:
        if spec.path is None or spec.label_column is None:
            raise ValueError("csv streams need a path and a label column")
        stream = load_csv_stream(spec.path, spec.label_column)
    if spec.drift is not None:
        stream = inject_gradual_drift(stream, spec.drift, seed=spec.seed + 1)
    return stream


def write_csv_stream(stream: Stream, path, label_column: str = "label") -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j}" for j in range(stream.X.shape[1])] + [label_column])
        for x, y in zip(stream.X, stream.y):
            w.writerow([repr(float(v)) for v in x] + [int(y)])
