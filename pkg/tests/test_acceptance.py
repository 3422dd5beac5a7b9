"""Acceptance checks, one test per criterion.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line (visible even
under output capture) and then asserts. Simulation settings follow the
package defaults: window 500, 100 initial labels, k=3, lambda=0.01,
truncated-normal latency, drift at the middle of the stream.
Run alone with ``pytest tests/test_acceptance.py -v``.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from streamal.classifier import PWC, default_bandwidth
from streamal.config import ExperimentConfig
from streamal.drift import ADWIN, DDM, HDDDM, DriftLevel
from streamal.generators import Stream, make_stream
from streamal.propagate import PrConfig, propagate_pending, weighted_vote
from streamal.query import BudgetState, decide_random
from streamal.runner import run_experiment, summarize
from streamal.schedule import BudgetSchedule, schedule_times
from streamal.simulate import RunConfig, run_stream
from streamal.stats import mann_whitney_u
from streamal.window import LabelState

from test_propagate import brute_force_knn_vote, random_window
from test_stats import permutation_pvalue

SEEDS = list(range(20))
_cache: dict = {}


@pytest.fixture
def report(capsys):
    def _report(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, f"criterion {number}: {detail}"

    return _report


def runs(**kw) -> list[dict]:
    """Summary rows of one grid cell over ``SEEDS`` (memoised)."""
    key = tuple(sorted((k, tuple(v) if isinstance(v, list) else v) for k, v in kw.items()))
    if key not in _cache:
        cfg = ExperimentConfig(seeds=SEEDS, **kw)
        traces, _ = run_experiment(cfg)
        _cache[key] = [summarize(t, cfg.delta_t) for t in traces]
    return _cache[key]


def column(rows, name) -> np.ndarray:
    return np.array([r[name] for r in rows], dtype=float)


def test_criterion_01_switch_times(report):
    bad = []
    for b in (0.01, 0.05, 0.1, 0.15, 0.2, 0.25):
        s = BudgetSchedule(b, m_high=4.0, m_low=0.5, delta_t=1000.0, t_drift=0.0)
        t1, t2 = s.times
        exact = math.isclose(t1, 1000 / 7, rel_tol=1e-12) and math.isclose(t2 - t1, 6000 / 7, rel_tol=1e-12)
        rounded = (round(t1), round(t2 - t1)) == (143, 857)
        if not (exact and rounded):
            bad.append((b, t1, t2 - t1))
    report(1, not bad, f"t1-t_drift=1000/7, t2-t1=6000/7 -> (143, 857); mismatches={bad}")


def _episode_fraction(b: float, seed: int, delta_t: float = 1000.0, t_drift: int = 2000) -> float:
    rng = np.random.default_rng(seed)
    schedule = BudgetSchedule(b, delta_t=delta_t)
    state = BudgetState(b)
    n_q = 0
    for t in range(1, t_drift + int(delta_t)):
        if t == t_drift:
            schedule = schedule.on_drift(t)
        state.set_budget(schedule.budget_at(t))
        a = decide_random(state, rng)
        state.record(a)
        n_q += a and t >= t_drift
    return n_q / (b * delta_t)


def test_criterion_02_budget_conservation(report):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        b = rng.uniform(0.01, 0.25)
        m_high = rng.uniform(1.05, 1.0 / b)
        m_low = rng.uniform(0.01, 0.99)
        delta_t = rng.uniform(100.0, 2000.0)
        t_drift = rng.uniform(0.0, 1e4)
        b_high, b_low = b * m_high, b * m_low
        t1, t2 = schedule_times(b, b_high, b_low, delta_t, t_drift)
        worst = max(worst, abs((t1 - t_drift) * b_high + (t2 - t1) * b_low - b * delta_t))
    ratios = {b: float(np.mean([_episode_fraction(b, s) for s in SEEDS])) for b in (0.05, 0.1, 0.25)}
    ok = worst <= 1e-12 and all(abs(r - 1.0) <= 0.1 for r in ratios.values())
    detail = f"max identity error={worst:.2e}; realized/b over one episode " + ", ".join(
        f"b={b}: {r:.3f}" for b, r in ratios.items()
    )
    report(2, ok, detail)


def test_criterion_03_pr_beats_ignore_pending(report):
    pr = column(runs(estimator="pr"), "accuracy")
    ig = column(runs(estimator="ignore_pending"), "accuracy")
    _, p = mann_whitney_u(pr, ig)
    ok = pr.mean() > ig.mean() and p < 0.05
    report(3, ok, f"RBF_2_2 split b=0.05 delta=200: PR {pr.mean():.4f} vs ignore {ig.mean():.4f}, p={p:.3g}")


def test_criterion_04_dynamic_beats_static(report):
    dyn_rows = runs(detector="hdddm", dynamic_budget=[True])
    sta_rows = runs(detector="hdddm", dynamic_budget=[False])
    dyn, sta = column(dyn_rows, "accuracy"), column(sta_rows, "accuracy")
    q_ratio = column(dyn_rows, "n_queries").mean() / column(sta_rows, "n_queries").mean()
    _, p = mann_whitney_u(dyn, sta)
    ok = abs(q_ratio - 1.0) <= 0.1 and dyn.mean() > sta.mean() and p < 0.05
    report(
        4, ok,
        f"dynamic {dyn.mean():.4f} vs static {sta.mean():.4f}, p={p:.3g}; "
        f"label ratio {q_ratio:.3f}; detections/run {column(dyn_rows, 'n_detections').mean():.1f}",
    )


def test_criterion_05_latency_hurts(report):
    slow = column(runs(delay=[300]), "accuracy")
    fast = column(runs(delay=[0]), "accuracy")
    _, p = mann_whitney_u(slow, fast)
    ok = slow.mean() < fast.mean() and p < 0.05
    report(5, ok, f"delta=300 {slow.mean():.4f} vs delta=0 {fast.mean():.4f}, p={p:.3g}")


def test_criterion_06_detector_degradation(report):
    common = dict(stream=["RBF_10_4"], vary_stream=True)
    adwin_low = column(runs(detector="adwin", budget=[0.05], delay=[300], **common), "h_score")
    adwin_full = column(runs(detector="adwin", budget=[1.0], delay=[0], **common), "h_score")
    hd_low = column(runs(detector="hdddm", budget=[0.05], delay=[300], **common), "h_score")
    ok = adwin_low.mean() < adwin_full.mean() and hd_low.mean() > adwin_low.mean()
    report(
        6, ok,
        f"ADWIN H (b=0.05, delta=300) {adwin_low.mean():.3f} < (b=1, delta=0) {adwin_full.mean():.3f}; "
        f"HDDDM H (b=0.05, delta=300) {hd_low.mean():.3f}",
    )


def _first_adwin_hit(values) -> int | None:
    det = ADWIN()
    for i, v in enumerate(values):
        if det.update(v):
            return i
    return None


def test_criterion_07_detector_units(report):
    adwin_ok = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        values = np.r_[rng.uniform(size=500) < 0.1, rng.uniform(size=500) < 0.9].astype(float)
        hit = _first_adwin_hit(values)
        adwin_ok += hit is not None and 500 <= hit < 600
    adwin_quiet = all(_first_adwin_hit([c] * 5000) is None for c in (0.0, 0.2, 1.0))

    cfg = ExperimentConfig(stream=["RBF_2_2"], vary_stream=True, drift_width=1)
    hd_ok = 0
    for seed in range(50):
        stream = make_stream(cfg.stream_spec("RBF_2_2", seed))
        det = HDDDM(gamma=1.5)
        hits = [i + 1 for i, x in enumerate(stream.X) if det.update(x)]
        drift_t = stream.drift_t
        pre = [h for h in hits if h < drift_t]
        in_time = [h for h in hits if drift_t <= h < drift_t + 5 * det.batch_size]
        hd_ok += not pre and bool(in_time)

    ddm = DDM()
    ddm_stable = all(ddm.update(0) is DriftLevel.STABLE for _ in range(10_000))
    ok = adwin_ok >= 48 and adwin_quiet and hd_ok >= 45 and ddm_stable
    report(
        7, ok,
        f"ADWIN step hits {adwin_ok}/50, quiet on constants={adwin_quiet}; "
        f"HDDDM clean+timely {hd_ok}/50 (need 45); DDM stable={ddm_stable}",
    )


def test_criterion_08_mann_whitney_oracle(report):
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(200):
        n1, n2 = rng.integers(1, 9, size=2)
        a = rng.integers(0, 8, size=n1).astype(float)
        b = rng.integers(0, 8, size=n2).astype(float)
        worst = max(worst, abs(mann_whitney_u(a, b)[1] - permutation_pvalue(a, b)))
    u, p = mann_whitney_u([1, 2, 3], [4, 5, 6])
    ok = worst <= 1e-9 and u == 0.0 and abs(p - 0.1) <= 1e-12
    report(8, ok, f"max |p - enumeration| over 200 pairs = {worst:.1e}; [1,2,3] vs [4,5,6] p={p}")


def test_criterion_09_pr_micro_oracle(report):
    rng = np.random.default_rng(9)
    mismatches = 0
    for _ in range(100):
        w = random_window(rng)
        propagate_pending(w, PrConfig(k=3, lam=0.0), 3)
        lab = w.indices(LabelState.LABELED)
        for i in w.indices(LabelState.PENDING):
            mismatches += w.label[i] != brute_force_knn_vote(w.X[i], w.X[lab], w.t[lab], w.label[lab], 3)
    fig2 = weighted_vote(100, np.array([60, 55, 98]), np.array([0, 0, 1]), 2, 0.01)
    ok = mismatches == 0 and fig2 == 1
    report(9, ok, f"lambda=0 vs brute-force k-NN mismatches={mismatches}; two old A vs recent B -> {'AB'[fig2]}")


def test_criterion_10_classifier_sanity(report):
    rng = np.random.default_rng(10)
    y = rng.integers(0, 2, size=2000)
    X = rng.normal(size=(2000, 2)) + 6.0 * y[:, None]
    cfg = RunConfig(budget=1.0, delay=0, delay_dist="uniform", strategy="random")
    trace = run_stream(Stream(X, y, 2, "blobs"), cfg, seed=0)
    lag_ok = bool(np.all(trace.n_delivered[trace.t > trace.init + 50] == 1))

    Xt = rng.normal(size=(300, 3))
    model = PWC(4, default_bandwidth(Xt[:100]), Xt, rng.integers(0, 4, size=300))
    worst = max(abs(model.posterior(q).sum() - 1.0) for q in rng.normal(scale=4.0, size=(10_000, 3)))
    ok = trace.accuracy >= 0.95 and lag_ok and worst <= 1e-9
    report(10, ok, f"blobs accuracy {trace.accuracy:.4f} (50-step lag held={lag_ok}); max |sum p - 1|={worst:.1e}")


def test_criterion_11_quarter_budget_near_full(report):
    quarter = column(runs(stream=["RBF_10_4"], budget=[0.25]), "accuracy").mean()
    full = column(runs(stream=["RBF_10_4"], budget=[1.0]), "accuracy").mean()
    ratio = quarter / full
    report(11, ratio >= 0.95, f"RBF_10_4 b=0.25 {quarter:.4f} / b=1.0 {full:.4f} = {ratio:.3f}")
