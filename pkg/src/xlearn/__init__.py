"""Cross-learning contextual bandits with epoch snapshots, instrumented for regret analysis."""

from .algo import ParamSchedule, derive_schedule, run_episode
from .baselines import run_baseline
from .core import (
    LossOracle,
    RngStreams,
    Trace,
    best_fixed_policy,
    realized_regret,
    sample_categorical,
    softmax_weights,
)
from .env import EnvSpec, build_oracle, sample_context

__version__ = "0.1.0"

__all__ = [
    "EnvSpec",
    "LossOracle",
    "ParamSchedule",
    "RngStreams",
    "Trace",
    "best_fixed_policy",
    "build_oracle",
    "derive_schedule",
    "realized_regret",
    "run_baseline",
    "run_episode",
    "sample_categorical",
    "sample_context",
    "softmax_weights",
]
