"""Command line entry point: ``run``, ``stats`` and ``gen``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config, paper_defaults, save_config, with_overrides
from .generators import PRESETS, CsvFormatError, make_stream, write_csv_stream
from .runner import emit_results, read_summary, run_experiment
from .stats import friedman_nemenyi, mann_whitney_u

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2

log = logging.getLogger("streamal")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _strs(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _bools(text: str) -> list[bool]:
    table = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}
    try:
        return [table[v.strip().lower()] for v in text.split(",") if v.strip()]
    except KeyError as exc:
        raise argparse.ArgumentTypeError(f"not a boolean: {exc}") from None


def _seeds(text: str) -> list[int]:
    """``7``, ``0,3,9`` or a half-open range ``0:20``."""
    if ":" in text:
        lo, hi = (int(v) for v in text.split(":", 1))
        return list(range(lo, hi))
    return _ints(text)


class _Parser(argparse.ArgumentParser):
    """Usage errors are config errors (exit 1), keeping 2 for I/O failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="streamal",
        description="Stream-based active learning under verification latency.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment grid and write CSV results")
    run.add_argument("--config", type=Path, help="TOML config file")
    run.add_argument("--preset", choices=["paper-defaults"], help="start from a named preset")
    run.add_argument("--stream", type=_strs, help="preset names or CSV paths, comma separated")
    run.add_argument("--budget", type=_floats, help="budget levels in (0, 1]")
    run.add_argument("--delay", type=_ints, help="latency parameter(s) delta")
    run.add_argument("--delay-dist", type=_strs, help="uniform or truncnorm")
    run.add_argument("--strategy", type=_strs, help="random, split or pal")
    run.add_argument("--estimator", type=_strs, help="pr or ignore_pending")
    run.add_argument("--detector", type=_strs, help="none, ddm, adwin or hdddm")
    run.add_argument("--dynamic-budget", type=_bools, nargs="?", const=[True],
                     help="enable the post-drift budget schedule (optionally 'true,false')")
    run.add_argument("--m-high", type=_floats)
    run.add_argument("--m-low", type=_floats)
    run.add_argument("--delta-t", type=float)
    run.add_argument("--seeds", type=_seeds, help="e.g. 7, 0,3,9 or 0:50")
    run.add_argument("--jobs", type=int, help="worker processes (default 1)")
    run.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    run.add_argument("--save-config", type=Path, help="also write the resolved config as TOML")

    st = sub.add_parser("stats", help="significance tests over summary CSVs")
    st.add_argument("summaries", nargs="+", type=Path)
    st.add_argument("--metric", default="accuracy")
    st.add_argument("--by", default="estimator", help="field that names the compared algorithms")
    st.add_argument("--blocks", default="stream",
                    help="field(s) defining Friedman datasets, comma separated")
    st.add_argument("--test", choices=["mwu", "friedman"], default="mwu")

    gen = sub.add_parser("gen", help="write a synthetic stream to CSV")
    gen.add_argument("--stream", choices=sorted(PRESETS), required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--no-drift", action="store_true")
    gen.add_argument("--drift-position", type=float, default=0.5)
    gen.add_argument("--drift-width", type=int, default=1)
    gen.add_argument("--label-column", default="label")
    gen.add_argument("--out", type=Path, required=True)
    return parser


def _resolve_config(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = load_config(args.config)
    elif args.preset == "paper-defaults":
        cfg = paper_defaults()
    else:
        cfg = ExperimentConfig()
    return with_overrides(
        cfg,
        stream=args.stream, budget=args.budget, delay=args.delay, delay_dist=args.delay_dist,
        strategy=args.strategy, estimator=args.estimator, detector=args.detector,
        dynamic_budget=args.dynamic_budget, m_high=args.m_high, m_low=args.m_low,
        delta_t=args.delta_t, seeds=args.seeds, jobs=args.jobs,
    )


def cmd_run(args) -> int:
    cfg = _resolve_config(args)
    for name in cfg.stream:
        if name not in PRESETS and not Path(name).exists():
            raise FileNotFoundError(f"stream file not found: {name}")
    log.info("%d cells x %d seeds = %d runs", cfg.n_cells(), len(cfg.seeds), cfg.n_runs())
    traces, table = run_experiment(cfg)
    files = emit_results(traces, args.out, window=cfg.delta_t)
    if args.save_config is not None:
        save_config(cfg, args.save_config)
    for row in table:
        print(f"{row['cell']}: acc={row['accuracy_mean']:.4f}+-{row['accuracy_std']:.4f} "
              f"q={row['query_rate_mean']:.4f} h={row['h_score_mean']:.3f} (n={row['n_runs']})")
    print(f"wrote {', '.join(str(p) for p in files.values())}")
    return EXIT_OK


def cmd_stats(args) -> int:
    rows = [r for path in args.summaries for r in read_summary(path)]
    if not rows:
        raise ConfigError("summary files hold no rows")
    for field in [args.metric, args.by]:
        if field not in rows[0]:
            raise ConfigError(f"summary has no column {field!r}")
    groups: dict[str, list[dict]] = {}
    for r in rows:
        groups.setdefault(r[args.by], []).append(r)
    names = list(groups)
    if args.test == "mwu":
        if len(names) != 2:
            raise ConfigError(f"Mann-Whitney needs exactly 2 groups in {args.by!r}, found {names}")
        a = [float(r[args.metric]) for r in groups[names[0]]]
        b = [float(r[args.metric]) for r in groups[names[1]]]
        u, p = mann_whitney_u(a, b)
        print(f"{names[0]} mean={np.mean(a):.4f} (n={len(a)})  {names[1]} mean={np.mean(b):.4f} (n={len(b)})")
        print(f"U={u:.1f} p={p:.4g}")
        return EXIT_OK
    block_fields = _strs(args.blocks)
    blocks = sorted({tuple(r[f] for f in block_fields) for r in rows})
    matrix = np.full((len(names), len(blocks)), np.nan)
    for i, name in enumerate(names):
        for j, blk in enumerate(blocks):
            vals = [float(r[args.metric]) for r in groups[name] if tuple(r[f] for f in block_fields) == blk]
            if vals:
                matrix[i, j] = np.mean(vals)
    if np.isnan(matrix).any():
        raise ConfigError("every algorithm needs a result on every block")
    res = friedman_nemenyi(matrix)
    print(f"chi2_F={res.statistic:.4f} p={res.pvalue:.4g} CD={res.critical_difference:.4f}")
    for name, rank in sorted(zip(names, res.mean_ranks), key=lambda z: z[1]):
        print(f"  {name}: mean rank {rank:.3f}")
    return EXIT_OK


def cmd_gen(args) -> int:
    cfg = ExperimentConfig(
        stream=[args.stream], seeds=[0], stream_seed=args.seed, drift=not args.no_drift,
        drift_position=args.drift_position, drift_width=args.drift_width,
    )
    stream = make_stream(cfg.stream_spec(args.stream))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_csv_stream(stream, args.out, label_column=args.label_column)
    print(f"wrote {len(stream)} rows to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handlers = {"run": cmd_run, "stats": cmd_stats, "gen": cmd_gen}
    try:
        return handlers[args.command](args)
    except (ConfigError, CsvFormatError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
