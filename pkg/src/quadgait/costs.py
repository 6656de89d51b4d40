"""Locomotion cost suite: two logistic kernels, ten weighted terms, curriculum scale.

Terms c1..c10 cover base angular/linear velocity tracking, torque, joint
speed, foot vertical velocity, foot clearance, foot slip, orientation,
action smoothness, and leg-phase/contact agreement. The weighted total is
sum(w_i * c_i) and the per-tick reward is its negative.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import RobotState

FOOT_CLEARANCE_TARGET = 0.07  # m, desired swing-foot height

DEFAULT_WEIGHTS = (120.0, 500.0, 0.5, 0.02, 1.0, 1.5e4, 200.0, 100.0, 0.5, 300.0)

N_TERMS = 10


class CostFault(ArithmeticError):
    """Raised when a cost term evaluates to a non-finite value."""


def _sech2(u):
    """Numerically stable sech(u)^2 = (2 e^{-|u|} / (1 + e^{-2|u|}))^2."""
    a = np.exp(-np.abs(u))
    s = 2.0 * a / (1.0 + a * a)
    return s * s


def k_angular(x):
    """Angular-velocity tracking kernel: -1 / (e^{10x} + 2 + e^{-10x}).

    Equal to -sech(5x)^2 / 4; strictly negative, even, with minimum -0.25
    at x = 0 and tails decaying to zero.
    """
    return -0.25 * _sech2(5.0 * np.asarray(x, dtype=float))


def k_linear(x):
    """Linear-velocity tracking kernel: the 10x kernel plus a wide 1x lobe.

    -1/(e^x + 2 + e^{-x}) - 1/(e^{10x} + 2 + e^{-10x}); minimum -0.5 at 0.
    The wide lobe keeps a useful gradient far from the target.
    """
    x = np.asarray(x, dtype=float)
    return -0.25 * _sech2(0.5 * x) - 0.25 * _sech2(5.0 * x)


@dataclass(frozen=True)
class CostWeights:
    """Per-term weights w1..w10 of the final cost."""

    w: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_WEIGHTS))

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.shape != (N_TERMS,):
            raise ValueError(f"expected {N_TERMS} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "w", w)

    def with_leg_phase_disabled(self) -> "CostWeights":
        w = self.w.copy()
        w[9] = 0.0
        return CostWeights(w)


@dataclass(frozen=True)
class Curriculum:
    """Regularizer scale k_c annealed toward 1 by k_c <- k_c ** k_d."""

    k_c: float = 0.3
    k_d: float = 0.999

    def __post_init__(self):
        if not 0.0 < self.k_c <= 1.0:
            raise ValueError(f"k_c must be in (0, 1], got {self.k_c}")
        if not 0.0 < self.k_d < 1.0:
            raise ValueError(f"k_d must be in (0, 1), got {self.k_d}")


def curriculum_update(c: Curriculum) -> Curriculum:
    """One annealing step: k_c' = k_c ** k_d, k_d unchanged."""
    return replace(c, k_c=c.k_c**c.k_d)


@dataclass
class CostInputs:
    """Everything one cost evaluation needs, frame-resolved by the caller.

    ``state`` is the robot state after applying ``torques``; ``command_v``
    is the scalar forward command expanded to (v, 0, 0) in the yaw-aligned
    horizontal frame; ``leg_phase`` is the commanded stance indicator G_i.
    """

    state: RobotState
    command_v: float
    torques: np.ndarray
    action: np.ndarray
    prev_action: np.ndarray
    leg_phase: np.ndarray
    command_omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    clearance_target: float = FOOT_CLEARANCE_TARGET


@dataclass(frozen=True)
class CostBreakdown:
    """Per-term values, their weighted total, and the reward (= -total)."""

    terms: np.ndarray
    total: float
    reward: float

    def __getitem__(self, i: int) -> float:
        """1-based term access: breakdown[3] is c3."""
        if not 1 <= i <= N_TERMS:
            raise IndexError(f"cost term index must be 1..{N_TERMS}, got {i}")
        return float(self.terms[i - 1])

    CSV_HEADER = (
        "c1_ang_vel,c2_lin_vel,c3_torque,c4_joint_speed,c5_foot_vz,"
        "c6_clearance,c7_slip,c8_orientation,c9_smoothness,c10_leg_phase,"
        "total,reward"
    )

    def csv_row(self) -> str:
        vals = [repr(float(v)) for v in self.terms] + [repr(self.total), repr(self.reward)]
        return ",".join(vals)


def yaw_aligned_velocity(state: RobotState) -> np.ndarray:
    """World base velocity rotated into the yaw-aligned horizontal frame."""
    yaw = state.yaw()
    c, s = np.cos(yaw), np.sin(yaw)
    v = state.lin_vel
    return np.array([c * v[0] + s * v[1], -s * v[0] + c * v[1], v[2]])


def compute_cost_terms(
    lin_vel,
    ang_vel,
    cmd_lin,
    cmd_ang,
    torques,
    joint_vel,
    foot_z,
    foot_vz,
    foot_vt,
    contact,
    gravity_body,
    action,
    prev_action,
    leg_phase,
    k_c,
    clearance_target=FOOT_CLEARANCE_TARGET,
    leg_phase_cost_as_printed: bool = False,
):
    """Vectorized core for the ten cost terms.

    All arguments accept a leading batch dimension; scalars broadcast.
    Returns an array of shape (..., 10).
    """
    lin_vel = np.asarray(lin_vel, dtype=float)
    ang_vel = np.asarray(ang_vel, dtype=float)
    torques = np.asarray(torques, dtype=float)
    joint_vel = np.asarray(joint_vel, dtype=float)
    foot_vt = np.asarray(foot_vt, dtype=float)
    contact = np.asarray(contact, dtype=float)
    leg_phase = np.asarray(leg_phase, dtype=float)
    k_c = np.asarray(k_c, dtype=float)

    ang_err_sq = np.sum((ang_vel - cmd_ang) ** 2, axis=-1)
    c1 = k_angular(k_c * ang_err_sq)
    c2 = k_linear(np.sum(np.abs(lin_vel - cmd_lin), axis=-1))
    c3 = k_c * np.sqrt(np.sum(torques**2, axis=-1))
    c4 = k_c * np.sum(joint_vel**2, axis=-1)
    c5 = k_c * np.sum(np.asarray(foot_vz, dtype=float) ** 2, axis=-1)

    vt_norm = np.sqrt(np.sum(foot_vt**2, axis=-1))
    clearance = np.maximum(0.0, clearance_target - np.asarray(foot_z, dtype=float))
    c6 = k_c * np.sum((1.0 - contact) * clearance**2 * vt_norm, axis=-1)
    c7 = k_c * np.sum(contact * vt_norm, axis=-1)

    up_err = np.asarray(gravity_body, dtype=float) - np.array([0.0, 0.0, 1.0])
    c8 = k_c * np.sqrt(np.sum(up_err**2, axis=-1))
    c9 = k_c * np.sqrt(
        np.sum((np.asarray(prev_action, dtype=float) - np.asarray(action, dtype=float)) ** 2, axis=-1)
    )

    match = contact * leg_phase + (1.0 - contact) * (1.0 - leg_phase)
    if leg_phase_cost_as_printed:
        c10 = 0.25 * np.sum(match, axis=-1)
    else:
        c10 = 0.25 * np.sum(1.0 - match, axis=-1)

    return np.stack([c1, c2, c3, c4, c5, c6, c7, c8, c9, c10], axis=-1)


def compute_costs(
    inputs: CostInputs,
    k_c: float,
    weights: CostWeights | None = None,
    leg_phase_cost_as_printed: bool = False,
) -> CostBreakdown:
    """Evaluate all ten cost terms for one control tick.

    The linear-velocity error is taken in the yaw-aligned horizontal frame
    against (command_v, 0, 0), with an l1 norm; the angular error uses the
    squared l2 norm scaled by k_c inside the kernel.
    """
    weights = weights or CostWeights()
    st = inputs.state
    cmd_lin = np.array([inputs.command_v, 0.0, 0.0])
    terms = compute_cost_terms(
        lin_vel=yaw_aligned_velocity(st),
        ang_vel=st.ang_vel,
        cmd_lin=cmd_lin,
        cmd_ang=inputs.command_omega,
        torques=inputs.torques,
        joint_vel=st.joint_vel,
        foot_z=st.foot_pos[:, 2],
        foot_vz=st.foot_vel[:, 2],
        foot_vt=st.foot_vel[:, :2],
        contact=st.contact,
        gravity_body=st.gravity_body,
        action=inputs.action,
        prev_action=inputs.prev_action,
        leg_phase=inputs.leg_phase,
        k_c=k_c,
        clearance_target=inputs.clearance_target,
        leg_phase_cost_as_printed=leg_phase_cost_as_printed,
    )
    if not np.all(np.isfinite(terms)):
        bad = [i + 1 for i in np.flatnonzero(~np.isfinite(terms))]
        raise CostFault(f"non-finite cost terms: c{bad}")
    total = float(terms @ weights.w)
    return CostBreakdown(terms=terms, total=total, reward=-total)


def weighted_total(terms: np.ndarray, weights: CostWeights) -> np.ndarray:
    """Weighted sum over the trailing term axis (batch-friendly)."""
    return np.asarray(terms, dtype=float) @ weights.w


def breakdown_csv(breakdowns: list[CostBreakdown]) -> str:
    """Serialize a sequence of breakdowns as CSV, one row per tick."""
    out = io.StringIO()
    out.write(CostBreakdown.CSV_HEADER + "\n")
    for b in breakdowns:
        out.write(b.csv_row() + "\n")
    return out.getvalue()
