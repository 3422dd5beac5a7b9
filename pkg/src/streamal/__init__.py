"""Stream-based active learning with delayed labels, drift-aware budgets and evaluation tools."""

from .classifier import PWC, default_bandwidth
from .config import ConfigError, ExperimentConfig, load_config, paper_defaults
from .drift import ADWIN, DDM, HDDDM, DriftLevel
from .generators import DriftSpec, Stream, StreamSpec, make_stream, preset
from .oracle import LatencyDistribution, LatencyOracle
from .propagate import PrConfig, propagate_pending
from .runner import emit_results, run_experiment
from .schedule import BudgetSchedule, schedule_times
from .simulate import RunConfig, RunTrace, run_stream
from .stats import DetectionRecord, friedman_nemenyi, h_score, mann_whitney_u
from .window import LabelState, SlidingWindow, StreamEvent

__version__ = "0.1.0"
