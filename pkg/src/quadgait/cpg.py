"""Sinusoidal CPG signal bank: four phase-offset oscillators sharing one frequency.

Leg order everywhere is [FR, FL, RR, RL]. The oscillator bank is
``signal_i(t) = sin(B*t + C_i)``; a gait is a choice of the four phase
offsets C_i, and the synchronizer keeps the signal value-continuous when
the frequency B changes at runtime.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

LEG_NAMES = ("FR", "FL", "RR", "RL")
N_LEGS = 4


class CpgDomainError(ValueError):
    """Raised when an input lies outside an operation's stated domain."""


class GaitKind(enum.Enum):
    TROT = "trot"
    PACE = "pace"
    BOUND = "bound"


# Phase offsets per gait, order [FR, FL, RR, RL].
_GAIT_OFFSETS = {
    GaitKind.TROT: np.array([np.pi, 0.0, 0.0, np.pi]),
    GaitKind.PACE: np.array([np.pi, 0.0, np.pi, 0.0]),
    GaitKind.BOUND: np.array([np.pi, np.pi, 0.0, 0.0]),
}


def wrap_phase(c: np.ndarray | float) -> np.ndarray | float:
    """Wrap a phase (or array of phases) into [0, 2*pi)."""
    return np.mod(c, TWO_PI)


@dataclass(frozen=True)
class CpgParams:
    """Oscillator bank parameters: shared angular frequency B and per-leg phases C.

    All four legs share one B. Phases are stored wrapped to [0, 2*pi).
    """

    B: float
    C: np.ndarray

    def __post_init__(self):
        if not self.B > 0.0:
            raise CpgDomainError(f"angular frequency B must be positive, got {self.B}")
        C = np.asarray(self.C, dtype=float)
        if C.shape != (N_LEGS,):
            raise CpgDomainError(f"C must have shape ({N_LEGS},), got {C.shape}")
        object.__setattr__(self, "C", wrap_phase(C))

    @property
    def period(self) -> float:
        return TWO_PI / self.B


@dataclass
class ClockState:
    """Low-level control clock: integer tick count, never accumulated floats."""

    step: int = 0
    dt: float = 0.01

    def __post_init__(self):
        if self.step < 0:
            raise CpgDomainError(f"step must be >= 0, got {self.step}")
        if not self.dt > 0.0:
            raise CpgDomainError(f"dt must be positive, got {self.dt}")

    @property
    def time(self) -> float:
        return self.step * self.dt

    def tick(self) -> None:
        self.step += 1


def eval_cpg(params: CpgParams, t: float) -> np.ndarray:
    """Evaluate the four oscillator signals sin(B*t + C_i) at time t (seconds)."""
    return np.sin(params.B * t + params.C)


def gait_phase_offsets(gait: GaitKind) -> np.ndarray:
    """Phase offsets for a named gait, order [FR, FL, RR, RL]."""
    return _GAIT_OFFSETS[gait].copy()


def synchronize(
    B_old: float,
    C_old: np.ndarray,
    period: float,
    step: int,
    dt: float,
) -> tuple[float, np.ndarray]:
    """Retarget the oscillator bank to a new period without a value jump.

    Returns (B_new, C_new) with B_new = 2*pi/period and
    C_new_i = (B_old - B_new) * step * dt + C_old_i, wrapped to [0, 2*pi).
    At the switch time T = step*dt the signal value sin(B*T + C_i) is
    unchanged; the slope changes discontinuously by design.
    """
    if not period > 0.0:
        raise CpgDomainError(f"period must be positive, got {period}")
    if not dt > 0.0:
        raise CpgDomainError(f"dt must be positive, got {dt}")
    if step < 0:
        raise CpgDomainError(f"step must be >= 0, got {step}")
    B_new = TWO_PI / period
    C_new = (B_old - B_new) * (step * dt) + np.asarray(C_old, dtype=float)
    return B_new, wrap_phase(C_new)


def gait_schedule(v: float) -> np.ndarray:
    """Map command velocity to gait phase offsets: trot, pace, then bound.

    Branches are closed on the right: (0, 0.5] trot, (0.5, 1] pace,
    (1, 1.5] bound.
    """
    if not 0.0 < v <= 1.5:
        raise CpgDomainError(f"command velocity must be in (0, 1.5] m/s, got {v}")
    if v <= 0.5:
        return gait_phase_offsets(GaitKind.TROT)
    if v <= 1.0:
        return gait_phase_offsets(GaitKind.PACE)
    return gait_phase_offsets(GaitKind.BOUND)


def schedule_gait_kind(v: float) -> GaitKind:
    """Gait name for a command velocity, same branch boundaries as gait_schedule."""
    if not 0.0 < v <= 1.5:
        raise CpgDomainError(f"command velocity must be in (0, 1.5] m/s, got {v}")
    if v <= 0.5:
        return GaitKind.TROT
    if v <= 1.0:
        return GaitKind.PACE
    return GaitKind.BOUND


def phase_at(params: CpgParams, clock: ClockState) -> np.ndarray:
    """Per-leg oscillator phase (B*step*dt + C_i) mod 2*pi."""
    return wrap_phase(params.B * clock.time + params.C)


def leg_phase_indicator(
    params: CpgParams,
    clock: ClockState,
    stance_on_negative: bool = True,
) -> np.ndarray:
    """Commanded stance/swing flags G_i per leg (1 = stance, 0 = swing).

    With the default convention the negative half-wave of the signal is
    stance (the thigh sweeping backward under positive amplitude); the
    sin = 0 boundary is assigned to stance. Set ``stance_on_negative``
    False to flip the convention.
    """
    s = eval_cpg(params, clock.time)
    if stance_on_negative:
        return (s <= 0.0).astype(float)
    return (s >= 0.0).astype(float)


def indicator_from_signal(signal: np.ndarray, stance_on_negative: bool = True) -> np.ndarray:
    """Stance/swing flags from raw oscillator values (vectorizes over any shape)."""
    s = np.asarray(signal, dtype=float)
    if stance_on_negative:
        return (s <= 0.0).astype(float)
    return (s >= 0.0).astype(float)


def nearest_gait(offsets: np.ndarray) -> GaitKind:
    """Classify phase offsets as the nearest gait by relative-phase pattern.

    A synchronization correction shifts all four phases equally, so the
    comparison is on phases relative to leg 0, with circular distance.
    """
    offsets = np.asarray(offsets, dtype=float)
    rel = wrap_phase(offsets - offsets[0])
    best, best_d = None, np.inf
    for kind in GaitKind:
        table = _GAIT_OFFSETS[kind]
        rel_t = wrap_phase(table - table[0])
        diff = wrap_phase(rel - rel_t)
        d = float(np.sum(np.minimum(diff, TWO_PI - diff)))
        if d < best_d:
            best, best_d = kind, d
    return best


def gait_one_hot(offsets: np.ndarray) -> np.ndarray:
    """One-hot [trot, pace, bound] encoding from the nearest gait table row."""
    kinds = list(GaitKind)
    out = np.zeros(len(kinds))
    out[kinds.index(nearest_gait(offsets))] = 1.0
    return out
