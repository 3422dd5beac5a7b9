"""Experiment configuration: grid definition, presets and TOML round-trip."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterator, Optional

import tomli
import tomli_w

from .generators import PRESETS, DriftSpec, StreamSpec, preset
from .simulate import RunConfig

BUDGET_GRID = (0.05, 0.10, 0.15, 0.20, 0.25, 0.40, 0.50, 0.75, 1.0)
DELAY_GRID = (0, 50, 100, 150, 200, 300)

# fields that may hold a list of values; the grid is their Cartesian product
GRID_FIELDS = (
    "stream", "budget", "delay", "delay_dist", "strategy", "estimator",
    "detector", "dynamic_budget", "m_high", "m_low",
)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    stream: list = field(default_factory=lambda: ["RBF_2_2"])
    budget: list = field(default_factory=lambda: [0.05])
    delay: list = field(default_factory=lambda: [200])
    delay_dist: list = field(default_factory=lambda: ["truncnorm"])
    strategy: list = field(default_factory=lambda: ["split"])
    estimator: list = field(default_factory=lambda: ["pr"])
    detector: list = field(default_factory=lambda: ["none"])
    dynamic_budget: list = field(default_factory=lambda: [False])
    m_high: list = field(default_factory=lambda: [4.0])
    m_low: list = field(default_factory=lambda: [0.5])
    delta_t: float = 1000.0
    k: int = 3
    lam: float = 0.01
    window: int = 500
    init: int = 100
    seeds: list = field(default_factory=lambda: list(range(50)))
    stream_seed: int = 0
    vary_stream: bool = False
    drift: bool = True
    drift_position: float = 0.5
    drift_width: int = 1
    drift_features: Optional[int] = None
    drift_mode: str = "shift"
    drift_shift: float = 2.0
    label_column: str = "label"
    bandwidth: Optional[float] = None
    hdddm_gamma: float = 1.0
    persist_propagated: bool = False
    same_step_delivery: bool = False
    jobs: int = 1

    def __post_init__(self):
        for name in GRID_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, (list, tuple)):
                value = [value]
            setattr(self, name, list(value))
        self.seeds = [int(s) for s in (self.seeds if isinstance(self.seeds, (list, tuple)) else [self.seeds])]
        self.validate()

    def validate(self) -> None:
        for b in self.budget:
            if not 0.0 < float(b) <= 1.0:
                raise ConfigError(f"budget {b} outside (0, 1]")
        for d in self.delay:
            if int(d) < 0:
                raise ConfigError(f"delay {d} is negative")
        for name in GRID_FIELDS:
            if not getattr(self, name):
                raise ConfigError(f"{name} needs at least one value")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        choices = {
            "delay_dist": ("uniform", "truncnorm"),
            "strategy": ("random", "split", "pal"),
            "estimator": ("pr", "ignore_pending"),
            "detector": ("none", "ddm", "adwin", "hdddm"),
        }
        for name, allowed in choices.items():
            for v in getattr(self, name):
                if v not in allowed:
                    raise ConfigError(f"{name}={v!r}; choose from {allowed}")
        for s in self.stream:
            if s not in PRESETS and not str(s).lower().endswith(".csv"):
                raise ConfigError(f"stream {s!r} is neither a preset {sorted(PRESETS)} nor a .csv file")
        if self.drift_mode not in ("permute", "shift"):
            raise ConfigError(f"drift_mode={self.drift_mode!r}")

    def n_cells(self) -> int:
        n = 1
        for name in GRID_FIELDS:
            n *= len(getattr(self, name))
        return n

    def n_runs(self) -> int:
        return self.n_cells() * len(self.seeds)

    def cells(self) -> Iterator[dict]:
        """Every grid cell as a dict of the grid fields."""
        for combo in itertools.product(*(getattr(self, name) for name in GRID_FIELDS)):
            yield dict(zip(GRID_FIELDS, combo))

    def run_config(self, cell: dict) -> RunConfig:
        try:
            return RunConfig(
                budget=float(cell["budget"]),
                delay=int(cell["delay"]),
                delay_dist=cell["delay_dist"],
                strategy=cell["strategy"],
                estimator=cell["estimator"],
                detector=cell["detector"],
                dynamic_budget=bool(cell["dynamic_budget"]),
                m_high=float(cell["m_high"]),
                m_low=float(cell["m_low"]),
                delta_t=self.delta_t,
                k=self.k,
                lam=self.lam,
                window=self.window,
                init=self.init,
                bandwidth=self.bandwidth,
                hdddm_gamma=self.hdddm_gamma,
                persist_propagated=self.persist_propagated,
                same_step_delivery=self.same_step_delivery,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def stream_spec(self, name: str, run_seed: int = 0) -> StreamSpec:
        """Stream of a cell; with ``vary_stream`` each run seed draws its own synthetic stream."""
        stream_seed = self.stream_seed + (run_seed if self.vary_stream else 0)
        if name in PRESETS:
            d = PRESETS[name]["d"]
            n_features = self.drift_features or (1 if d <= 2 else max(1, d // 3))
            drift = None
            if self.drift:
                drift = DriftSpec(
                    position=self.drift_position,
                    width=self.drift_width,
                    n_features=min(n_features, d),
                    mode=self.drift_mode,
                    shift=self.drift_shift,
                )
            return preset(name, seed=stream_seed, drift=drift)
        drift = None
        if self.drift:
            drift = DriftSpec(
                position=self.drift_position,
                width=self.drift_width,
                n_features=self.drift_features or 1,
                mode=self.drift_mode,
                shift=self.drift_shift,
            )
        return StreamSpec(kind="csv", seed=stream_seed, drift=drift, path=str(name), label_column=self.label_column)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue  # TOML has no null; absent means default
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def paper_defaults() -> ExperimentConfig:
    """The full published grid over the synthetic presets."""
    return ExperimentConfig(
        stream=list(PRESETS),
        budget=list(BUDGET_GRID),
        delay=list(DELAY_GRID),
        delay_dist=["truncnorm"],
        strategy=["random", "split", "pal"],
        estimator=["pr", "ignore_pending"],
        detector=["hdddm"],
        dynamic_budget=[False, True],
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError:
        raise
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if data.pop("preset", None) == "paper-defaults":
        base = paper_defaults().to_dict()
        base.update(data)
        data = base
    return ExperimentConfig.from_dict(data)


def dump_config(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(dump_config(cfg), encoding="utf-8")


def with_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    overrides = {k: v for k, v in overrides.items() if v is not None}
    data = asdict(cfg)
    data.update(overrides)
    return ExperimentConfig.from_dict(data)
