"""Canonical full-scale benchmark runs behind the acceptance suite.

Each ensure_* function trains (or reuses, via the config-hash cache) the
runs a criterion needs, re-derives the evaluation artifacts, and returns
the artifact path. Tests and the prebuild script both call these, so the
configurations cannot drift between them. All functions take the run
root explicitly; nothing here depends on the working directory.
"""

from __future__ import annotations

from pathlib import Path

from .bench import (
    DEFAULT_VELOCITIES,
    cached_train,
    run_curriculum_comparison,
    run_gait_comparison,
    run_gait_suite,
)
from .ppo import TrainConfig

# 244 iterations x 16 envs x 512 low-level steps = 1,998,848 env steps,
# just under the two-million smoke budget.
FULL_ITERATIONS = 244


def smoke_config() -> TrainConfig:
    """Single-gait trot at a fixed 0.6 m/s command."""
    return TrainConfig(
        mode="single_gait", gait="trot", v_min=0.6, v_max=0.6,
        seed=0, iterations=FULL_ITERATIONS,
    )


def curriculum_config() -> TrainConfig:
    """Base config for the curriculum-on/off table; seed and k_c0 vary per cell."""
    return smoke_config()


def gait_trend_config() -> TrainConfig:
    """Base config for the trot-vs-bound table at a fixed 1.5 m/s command."""
    return TrainConfig(
        mode="single_gait", gait="trot", v_min=1.5, v_max=1.5,
        seed=0, iterations=FULL_ITERATIONS,
    )


def multigait_config() -> TrainConfig:
    """Multi-gait training over the full command range."""
    return TrainConfig(
        mode="multi_gait", v_min=0.3, v_max=1.5,
        seed=0, iterations=FULL_ITERATIONS,
    )


def ensure_smoke(root, progress=None) -> Path:
    """Train (or reuse) the smoke run; returns its directory."""
    out, _manifest = cached_train(smoke_config(), root, "smoke_trot", progress=progress)
    return out


def ensure_curriculum(root, progress=None) -> Path:
    """Curriculum-on/off comparison table; returns the table path."""
    return run_curriculum_comparison(curriculum_config(), Path(root) / "curriculum",
                                     progress=progress)


def ensure_gait_trend(root, progress=None) -> Path:
    """Trot-vs-bound tracking comparison at 1.5 m/s; returns the verdicts path."""
    return run_gait_comparison(gait_trend_config(), Path(root) / "gait_trend",
                               progress=progress)


def ensure_multigait(root, progress=None) -> Path:
    """Multi-gait suite across the velocity sweep; returns the period table path."""
    suite = run_gait_suite("multi", multigait_config(), Path(root) / "multi",
                           velocities=DEFAULT_VELOCITIES, progress=progress)
    return suite.tables["period_vs_velocity"]
