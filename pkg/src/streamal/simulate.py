"""Prequential active-learning loop under verification latency.

One call to :func:`run_stream` plays one replica: every step delivers due
labels, predicts the new sample before anything learns from it, checks for
drift, sets the budget, scores the sample and possibly queries it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classifier import PWC, default_bandwidth
from .drift import DDM, HDDDM, DriftLevel, make_detector
from .generators import Stream
from .oracle import LatencyDistribution, LatencyOracle
from .propagate import PrConfig, propagate_labels, propagate_pending
from .query import (
    BudgetState,
    PalState,
    SplitState,
    decide_pal,
    decide_random,
    decide_split,
)
from .schedule import BudgetSchedule
from .window import LabelState, SlidingWindow, StreamEvent


@dataclass(frozen=True)
class RunConfig:
    """Settings of a single replica (one grid cell, one seed)."""

    budget: float = 0.05
    delay: int = 0
    delay_dist: str = "truncnorm"
    strategy: str = "split"
    estimator: str = "pr"
    detector: str = "none"
    dynamic_budget: bool = False
    m_high: float = 4.0
    m_low: float = 0.5
    delta_t: float = 1000.0
    k: int = 3
    lam: float = 0.01
    window: int = 500
    init: int = 100
    bandwidth: Optional[float] = None
    hdddm_gamma: float = 1.0
    hdddm_batch: int = 100
    adwin_delta: float = 0.002
    persist_propagated: bool = False
    same_step_delivery: bool = False
    pal_draws: int = 100

    def __post_init__(self):
        if not 0.0 <= self.budget <= 1.0:
            raise ValueError(f"budget must lie in [0, 1], got {self.budget}")
        if self.strategy not in ("random", "split", "pal"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.estimator not in ("pr", "ignore_pending"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.detector not in ("none", "ddm", "adwin", "hdddm"):
            raise ValueError(f"unknown detector {self.detector!r}")
        if self.window < 1 or self.init < 0:
            raise ValueError("window must be positive and init nonnegative")
        if self.init > self.window:
            raise ValueError("init samples must fit into the window")


@dataclass
class RunTrace:
    """Per-step record of one replica plus its detections."""

    t: np.ndarray
    y_pred: np.ndarray
    y_true: np.ndarray
    queried: np.ndarray
    n_delivered: np.ndarray
    drift: np.ndarray
    budget: np.ndarray
    spent: np.ndarray
    init: int
    seed: int = 0
    run_id: str = ""
    detections: list = field(default_factory=list)
    true_drift: Optional[int] = None
    dropped_deliveries: int = 0
    params: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def correct(self) -> np.ndarray:
        return self.y_pred == self.y_true

    @property
    def evaluated(self) -> np.ndarray:
        return self.t > self.init

    @property
    def accuracy(self) -> float:
        mask = self.evaluated
        return float(self.correct[mask].mean()) if mask.any() else math.nan

    @property
    def running_accuracy(self) -> np.ndarray:
        """Prequential accuracy after each step (NaN during initialisation)."""
        mask = self.evaluated
        cum = np.cumsum(np.where(mask, self.correct, 0))
        cnt = np.cumsum(mask)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(cnt > 0, cum / np.maximum(cnt, 1), np.nan)

    @property
    def n_queries(self) -> int:
        return int(self.queried.sum())


def _training_model(window, n_classes, bandwidth, with_propagated):
    return PWC(n_classes, bandwidth, *window.training_set(include_propagated=with_propagated))


def run_stream(stream: Stream, cfg: RunConfig, seed: int, run_id: str = "") -> RunTrace:
    n, d = stream.X.shape
    C = stream.n_classes
    init = min(cfg.init, n)
    oracle_rng, strategy_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))

    window = SlidingWindow(cfg.window, d)
    bandwidth = cfg.bandwidth or default_bandwidth(stream.X[: max(init, 2)])
    oracle = LatencyOracle(LatencyDistribution(cfg.delay_dist, cfg.delay), oracle_rng)
    pr_cfg = PrConfig(cfg.k, cfg.lam)
    use_pr = cfg.estimator == "pr"

    schedule = None
    if cfg.budget > 0:
        schedule = BudgetSchedule(cfg.budget, cfg.m_high, cfg.m_low, cfg.delta_t)
    state = BudgetState(cfg.budget)
    split = SplitState()
    pal = PalState(capacity=cfg.window, n_draws=cfg.pal_draws)

    if cfg.detector == "hdddm":
        detector = HDDDM(batch_size=cfg.hdddm_batch, gamma=cfg.hdddm_gamma)
    elif cfg.detector == "adwin":
        detector = make_detector("adwin", delta=cfg.adwin_delta)
    else:
        detector = make_detector(cfg.detector)
    supervised_detector = cfg.detector in ("ddm", "adwin")

    y_pred = np.zeros(n, dtype=np.int64)
    queried = np.zeros(n, dtype=bool)
    n_delivered = np.zeros(n, dtype=np.int64)
    drift_flags = np.zeros(n, dtype=bool)
    budget_trace = np.zeros(n)
    spent_trace = np.zeros(n)
    detections: list[int] = []

    model = PWC(C, bandwidth)

    def deliver(t: int) -> tuple[int, bool]:
        drift = False
        delivered = oracle.deliver_due(t)
        for t_q, y in delivered:
            window.attach_label(t_q, y)
            if supervised_detector:
                error = int(y_pred[t_q - 1] != y)
                result = detector.update(error)
                drift |= result is True or result is DriftLevel.DRIFT
        return len(delivered), drift

    for i in range(n):
        t = i + 1
        x = stream.X[i]
        y_true = int(stream.y[i])

        if i < init:
            window.push(StreamEvent(t, x, y_true))
            y_pred[i] = model.predict(x)
            window.set_labeled(t, y_true)
            if isinstance(detector, HDDDM):
                detector.update(x)
            model = _training_model(window, C, bandwidth, False)
            budget_trace[i] = 1.0
            spent_trace[i] = state.spent
            continue

        # (1) deliveries due at the start of the step
        n_del, drift = deliver(t)
        # (2) the new sample enters the window unlabeled
        window.push(StreamEvent(t, x, y_true))
        # (3) test before train
        y_pred[i] = model.predict(x)
        # (4) unsupervised detection on the raw features
        if isinstance(detector, HDDDM):
            drift |= detector.update(x)
        if drift:
            detections.append(t)
            drift_flags[i] = True
            if cfg.dynamic_budget and schedule is not None:
                schedule = schedule.on_drift(t)
        # (5) budget in force
        b_now = schedule.budget_at(t) if schedule is not None else 0.0
        state.set_budget(b_now)
        # (6) utility from the estimator's view of the window
        if use_pr:
            propagate_pending(window, pr_cfg, C)
        model_u = _training_model(window, C, bandwidth, use_pr)
        # (7) query decision
        if cfg.strategy == "random":
            a = decide_random(state, strategy_rng)
        elif cfg.strategy == "split":
            a = decide_split(state, split, 1.0 - model_u.confidence(x), strategy_rng)
        else:
            a = decide_pal(state, pal, model_u, x, strategy_rng)
        state.record(a)
        if a:
            queried[i] = True
            due = oracle.enqueue(t, y_true, t)
            window.mark_pending(t, due)
            if use_pr:
                _propagate_one(window, t, pr_cfg, C)
            if cfg.same_step_delivery:
                extra, extra_drift = deliver(t)
                n_del += extra
                if extra_drift and not drift:
                    detections.append(t)
                    drift_flags[i] = True
                    if cfg.dynamic_budget and schedule is not None:
                        schedule = schedule.on_drift(t)
                if extra:
                    window.clear_propagated()
                    if use_pr:
                        propagate_pending(window, pr_cfg, C)
        n_delivered[i] = n_del
        budget_trace[i] = b_now
        spent_trace[i] = state.spent
        # (8) the model for the next prediction
        if use_pr and cfg.persist_propagated:
            model = _training_model(window, C, bandwidth, True)
        elif use_pr:
            model = _training_model(window, C, bandwidth, False)
        else:
            # pending entries do not change the labeled set
            model = model_u

    return RunTrace(
        t=np.arange(1, n + 1),
        y_pred=y_pred,
        y_true=stream.y.astype(np.int64),
        queried=queried,
        n_delivered=n_delivered,
        drift=drift_flags,
        budget=budget_trace,
        spent=spent_trace,
        init=init,
        seed=seed,
        run_id=run_id,
        detections=detections,
        true_drift=stream.drift_t,
        dropped_deliveries=window.dropped_deliveries,
    )


def _propagate_one(window: SlidingWindow, t: int, cfg: PrConfig, n_classes: int) -> None:
    """Propagate a label onto the freshly queried sample only."""
    i = window.index_of(t)
    lab = window.indices(LabelState.LABELED)
    if i is None or len(lab) == 0:
        return
    label = propagate_labels(
        window.X[[i]], window.t[[i]], window.X[lab], window.t[lab], window.label[lab], n_classes, cfg
    )
    window.set_propagated(np.array([i]), label)
