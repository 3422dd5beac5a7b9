"""Grid orchestration, per-run summaries and atomic CSV emission."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import GRID_FIELDS, ExperimentConfig
from .generators import make_stream
from .simulate import RunConfig, RunTrace, run_stream
from .stats import DetectionRecord, h_score

STEP_COLUMNS = (
    "run_id", "seed", "t", "queried", "n_delivered", "correct",
    "acc_preq", "drift", "budget", "spent",
)
SUMMARY_COLUMNS = (
    "run_id", "seed", *GRID_FIELDS, "accuracy", "n_queries", "query_rate",
    "n_detections", "h_score", "dropped_deliveries",
)
AGGREGATE_COLUMNS = (
    "cell", *GRID_FIELDS, "n_runs", "accuracy_mean", "accuracy_std",
    "query_rate_mean", "detections_mean", "h_score_mean",
)


def cell_id(cell: dict) -> str:
    parts = []
    for name in GRID_FIELDS:
        value = cell[name]
        if name == "stream":
            value = Path(str(value)).stem
        parts.append(f"{value}")
    return "_".join(parts)


def trace_h_score(trace: RunTrace, window: float) -> float:
    if trace.true_drift is None:
        return math.nan
    return h_score(DetectionRecord(trace.true_drift, tuple(trace.detections), window))


def summarize(trace: RunTrace, window: float = 1000.0) -> dict:
    """One summary row for a replica."""
    evaluated = trace.evaluated
    n_eval = int(evaluated.sum())
    row = {"run_id": trace.run_id, "seed": trace.seed}
    row.update({name: trace.params.get(name, "") for name in GRID_FIELDS})
    row.update(
        accuracy=trace.accuracy,
        n_queries=trace.n_queries,
        query_rate=trace.queried[evaluated].sum() / n_eval if n_eval else math.nan,
        n_detections=len(trace.detections),
        h_score=trace_h_score(trace, window),
        dropped_deliveries=trace.dropped_deliveries,
    )
    return row


def _run_job(job: tuple) -> RunTrace:
    stream_spec, run_cfg, seed, run_id, params = job
    trace = run_stream(make_stream(stream_spec), run_cfg, seed, run_id=run_id)
    trace.params = params
    return trace


def build_jobs(cfg: ExperimentConfig) -> list[tuple]:
    jobs = []
    for cell in cfg.cells():
        run_cfg: RunConfig = cfg.run_config(cell)
        cid = cell_id(cell)
        for seed in cfg.seeds:
            spec = cfg.stream_spec(cell["stream"], seed)
            jobs.append((spec, run_cfg, seed, f"{cid}_s{seed}", dict(cell)))
    return jobs


def run_experiment(cfg: ExperimentConfig, n_jobs: int | None = None) -> tuple[list[RunTrace], list[dict]]:
    """Run every (cell, seed) pair; returns the traces and the aggregate table.

    Runs are independent, so ``n_jobs > 1`` spreads them over processes.
    Results come back in grid order either way.
    """
    jobs = build_jobs(cfg)
    n_jobs = cfg.jobs if n_jobs is None else n_jobs
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            traces = list(pool.map(_run_job, jobs, chunksize=1))
    else:
        traces = [_run_job(job) for job in jobs]
    return traces, aggregate([summarize(t, cfg.delta_t) for t in traces])


def _nanmean(values) -> float:
    arr = np.asarray(values, dtype=float)
    return float(np.nanmean(arr)) if np.isfinite(arr).any() else math.nan


def aggregate(rows: Sequence[dict]) -> list[dict]:
    """Mean/std per grid cell over seeds, in first-seen order."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = tuple(str(row.get(name, "")) for name in GRID_FIELDS)
        groups.setdefault(key, []).append(row)
    out = []
    for key, members in groups.items():
        acc = np.array([m["accuracy"] for m in members], dtype=float)
        out.append({
            "cell": cell_id(dict(zip(GRID_FIELDS, key))),
            **dict(zip(GRID_FIELDS, key)),
            "n_runs": len(members),
            "accuracy_mean": float(acc.mean()),
            "accuracy_std": float(acc.std(ddof=1)) if len(acc) > 1 else 0.0,
            "query_rate_mean": _nanmean([m["query_rate"] for m in members]),
            "detections_mean": _nanmean([m["n_detections"] for m in members]),
            "h_score_mean": _nanmean([m["h_score"] for m in members]),
        })
    return out


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "" if math.isnan(value) else repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def step_rows(trace: RunTrace):
    acc = trace.running_accuracy
    for i in range(len(trace)):
        yield (
            trace.run_id, trace.seed, int(trace.t[i]), int(trace.queried[i]),
            int(trace.n_delivered[i]), int(trace.correct[i]), _fmt(float(acc[i])),
            int(trace.drift[i]), _fmt(float(trace.budget[i])), _fmt(float(trace.spent[i])),
        )


def emit_results(traces: Sequence[RunTrace], path, window: float = 1000.0) -> dict[str, Path]:
    """Write ``steps.csv``, ``summary.csv`` and ``aggregate.csv`` under ``path``.

    Each file goes to a temporary sibling first and is renamed into place,
    so readers never see a partial file and reruns replace old results.
    """
    out = Path(path)
    if out.exists() and not out.is_dir():
        raise NotADirectoryError(f"{out} exists and is not a directory")
    summaries = [summarize(t, window) for t in traces]
    steps = (row for trace in traces for row in step_rows(trace))
    files = {
        "steps": out / "steps.csv",
        "summary": out / "summary.csv",
        "aggregate": out / "aggregate.csv",
    }
    _atomic_write(files["steps"], _csv_text(STEP_COLUMNS, steps))
    _atomic_write(
        files["summary"],
        _csv_text(SUMMARY_COLUMNS, ([_fmt(r[c]) for c in SUMMARY_COLUMNS] for r in summaries)),
    )
    agg = aggregate(summaries)
    _atomic_write(
        files["aggregate"],
        _csv_text(AGGREGATE_COLUMNS, ([_fmt(r[c]) for c in AGGREGATE_COLUMNS] for r in agg)),
    )
    return files


def read_summary(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
