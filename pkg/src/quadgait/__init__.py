"""Quadruped gait workbench.

A self-contained toolkit for studying velocity-tracking quadruped gaits:
sinusoidal CPG signal generation and synchronization, a simplified 8-DOF
rigid-body simulator with spring-damper ground contact, a hierarchical
(20 Hz / 100 Hz) controller, a ten-term locomotion cost suite, a
from-scratch PPO trainer, and a benchmark harness that exports CSV data
for gait comparison plots.
"""

__version__ = "0.1.0"

from . import bench, cli, config, controller, costs, cpg, dynamics, policy, ppo

__all__ = [
    "bench",
    "cli",
    "config",
    "controller",
    "costs",
    "cpg",
    "dynamics",
    "policy",
    "ppo",
    "__version__",
]
