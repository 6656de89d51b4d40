"""Hierarchical gait controller runtime.

Two clock domains: a high-level step every ``t_cpg`` seconds (20 Hz by
default) that picks the oscillator period and, in schedule mode, the gait;
and a low-level step every ``dt`` (100 Hz) that turns policy output into
joint targets and PD torques. Period changes go through the phase
synchronizer so the oscillator signal stays value-continuous; gait
switches swap phase-offset tables raw, which is allowed to produce a
visible discontinuity (the recorded traces keep it).

``BatchController`` carries the controller state for N robots as arrays
and is what training uses. ``HierarchicalController`` wraps a batch of
one and bolts policies on for evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cpg import (
    TWO_PI,
    GaitKind,
    gait_phase_offsets,
    indicator_from_signal,
    wrap_phase,
)
from .dynamics import N_JOINTS, N_LEGS, PdGains, RobotModel, SimBatch

OBS_VERSION = 1
MODES = ("single_gait", "multi_gait", "baseline")

GAIT_ORDER = (GaitKind.TROT, GaitKind.PACE, GaitKind.BOUND)
_OFFSET_TABLE = np.stack([gait_phase_offsets(g) for g in GAIT_ORDER])


def gait_index(gait: GaitKind) -> int:
    return GAIT_ORDER.index(gait)


def schedule_gait_index(v) -> np.ndarray:
    """Vectorized gait_schedule branch index: 0 trot, 1 pace, 2 bound."""
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0.0) or np.any(v > 1.5):
        raise ValueError("command velocity outside (0, 1.5] m/s")
    return np.searchsorted(np.array([0.5, 1.0]), v, side="left")


def thigh_targets(amplitude, cpg_values) -> np.ndarray:
    """Thigh joint targets A * sin(B t + C), elementwise over legs."""
    return np.asarray(amplitude, dtype=float)[..., None] * np.asarray(cpg_values, dtype=float)


@dataclass(frozen=True)
class ControllerConfig:
    """Clocking, mode, and action-range configuration for the controller."""

    dt: float = 0.01
    t_cpg: float = 0.05
    gains: PdGains = field(default_factory=PdGains)
    mode: str = "single_gait"
    gait: GaitKind = GaitKind.TROT
    phase_source: str | None = None  # fixed | schedule; derived from mode when None
    period_source: str = "policy"  # policy | fixed
    fixed_period: float = 0.5
    period_lo: float = 0.2
    period_hi: float = 1.0
    amp_hi: float = 0.8
    init_period: float = 0.6
    stance_on_negative: bool = True

    def __post_init__(self):
        if not (self.dt > 0.0 and self.t_cpg > 0.0):
            raise ValueError("dt and t_cpg must be positive")
        ratio = self.t_cpg / self.dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("t_cpg must be an integer multiple of dt")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.phase_source is None:
            derived = "fixed" if self.mode == "single_gait" else "schedule"
            object.__setattr__(self, "phase_source", derived)
        if self.phase_source == "policy":
            raise NotImplementedError(
                "phase source 'policy' is recognized but unsupported: the "
                "high-level policy emits the period only, phases come from "
                "the gait tables"
            )
        if self.phase_source not in ("fixed", "schedule"):
            raise ValueError(f"unknown phase source {self.phase_source!r}")
        if self.period_source not in ("policy", "fixed"):
            raise ValueError(f"unknown period source {self.period_source!r}")
        if not 0.0 < self.period_lo < self.period_hi:
            raise ValueError("period bounds must satisfy 0 < lo < hi")
        for name in ("fixed_period", "init_period"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def steps_per_decision(self) -> int:
        return int(round(self.t_cpg / self.dt))

    @property
    def uses_cpg(self) -> bool:
        return self.mode != "baseline"

    @property
    def act_dim(self) -> int:
        # [A, calf x4] with a CPG; direct 8 joint targets without
        return 5 if self.uses_cpg else N_JOINTS

    @property
    def obs_dim(self) -> int:
        base = 3 + 3 + 3 + N_JOINTS + N_JOINTS + self.act_dim + 1
        return base + (1 + 2 * N_LEGS + len(GAIT_ORDER) if self.uses_cpg else 0)

    def low_bounds(self, model: RobotModel) -> tuple[np.ndarray, np.ndarray]:
        if self.uses_cpg:
            lo = np.array([0.0] + [model.calf_limit_lo] * N_LEGS)
            hi = np.array([self.amp_hi] + [model.calf_limit_hi] * N_LEGS)
            return lo, hi
        return model.joint_limits

    def high_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([self.period_lo]), np.array([self.period_hi])


class BatchController:
    """Controller state for N robots, all math vectorized over the batch."""

    def __init__(self, config: ControllerConfig, model: RobotModel, n: int):
        self.config = config
        self.model = model
        self.n = n
        lo, hi = config.low_bounds(model)
        self.act_lo, self.act_hi = lo, hi
        self.act_mid = 0.5 * (lo + hi)
        self.B = np.full(n, TWO_PI / config.init_period)
        self.phase_shift = np.zeros(n)
        self.steps = np.zeros(n, dtype=np.int64)
        self.gait_idx = np.full(n, gait_index(config.gait))
        self.command = np.full(n, 0.5)
        self.prev_action = np.tile(self.act_mid, (n, 1))
        self.prev_targets = np.tile(model.nominal_joint_angles, (n, 1))
        self.fault = np.zeros(n, dtype=bool)

    # -- episode bookkeeping --

    def reset_envs(self, idx, commands) -> None:
        idx = np.atleast_1d(idx)
        commands = np.broadcast_to(np.asarray(commands, dtype=float), idx.shape)
        self.command[idx] = commands
        if self.config.phase_source == "schedule":
            self.gait_idx[idx] = schedule_gait_index(commands)
        else:
            self.gait_idx[idx] = gait_index(self.config.gait)
        self.B[idx] = TWO_PI / self.config.init_period
        self.phase_shift[idx] = 0.0
        self.steps[idx] = 0
        self.prev_action[idx] = self.act_mid
        self.prev_targets[idx] = self.model.nominal_joint_angles
        self.fault[idx] = False

    def set_command(self, idx, commands) -> None:
        """Change commands mid-run; gait offsets follow at the next high-level tick."""
        self.command[np.atleast_1d(idx)] = commands

    # -- clocks and oscillators --

    @property
    def time(self) -> np.ndarray:
        return self.steps * self.config.dt

    def decision_due(self) -> np.ndarray:
        return self.steps % self.config.steps_per_decision == 0

    def apply_period(self, periods: np.ndarray, idx=None) -> None:
        """High-level decision: re-synchronize phases, adopt the new period.

        In schedule mode this is also the point where a changed command
        swaps the gait table (raw, uncorrected, as the synchronizer only
        guarantees continuity across period changes).
        """
        idx = np.arange(self.n) if idx is None else np.atleast_1d(idx)
        periods = np.broadcast_to(np.asarray(periods, dtype=float), idx.shape)
        if np.any(periods <= 0.0):
            raise ValueError("period must be positive")
        t = self.steps[idx] * self.config.dt
        b_new = TWO_PI / periods
        self.phase_shift[idx] = wrap_phase(self.phase_shift[idx] + (self.B[idx] - b_new) * t)
        self.B[idx] = b_new
        if self.config.phase_source == "schedule":
            self.gait_idx[idx] = schedule_gait_index(self.command[idx])

    def phase_angles(self) -> np.ndarray:
        """(N, 4) unwrapped oscillator arguments B t + shift + gait offset."""
        base = self.B * self.time + self.phase_shift
        return base[:, None] + _OFFSET_TABLE[self.gait_idx]

    def phases(self) -> np.ndarray:
        return wrap_phase(self.phase_angles())

    def cpg_values(self) -> np.ndarray:
        return np.sin(self.phase_angles())

    def leg_indicator(self) -> np.ndarray:
        """Commanded stance flags G per leg from the oscillator sign."""
        return indicator_from_signal(self.cpg_values(), self.config.stance_on_negative)

    @property
    def period(self) -> np.ndarray:
        return TWO_PI / self.B

    # -- action plumbing --

    def joint_targets(self, action: np.ndarray) -> np.ndarray:
        """Map low-level policy output to 8 joint targets, with safe-stop.

        Rows with non-finite action fall back to the previous targets and
        raise the per-env fault flag instead of propagating NaNs into the
        simulator.
        """
        action = np.atleast_2d(np.asarray(action, dtype=float))
        if self.config.uses_cpg:
            targets = np.concatenate(
                [thigh_targets(action[:, 0], self.cpg_values()), action[:, 1:]], axis=1
            )
        else:
            targets = action.copy()
        bad = ~np.all(np.isfinite(targets), axis=1)
        if np.any(bad):
            targets[bad] = self.prev_targets[bad]
            self.fault[bad] = True
        return targets

    def advance(self, executed_action: np.ndarray, targets: np.ndarray) -> None:
        self.prev_action = np.array(executed_action, dtype=float)
        self.prev_targets = np.array(targets, dtype=float)
        self.steps += 1

    # -- observations --

    def observation(self, sim: SimBatch) -> np.ndarray:
        """(N, obs_dim) low-level observation; layout is normative.

        Order: gravity direction in body frame (3), body-frame linear
        velocity (3), body-frame angular velocity (3), joint angles (8),
        joint velocities (8), previous action, command (1); CPG modes
        append period (1), sin of each leg phase (4), cos of each leg
        phase (4), and the gait one-hot (3).
        """
        from .dynamics import quat_to_mat

        R = quat_to_mat(sim.quat)
        lin_body = np.einsum("nji,nj->ni", R, sim.lin_vel)
        ang_body = np.einsum("nji,nj->ni", R, sim.ang_vel)
        parts = [
            sim.gravity_body,
            lin_body,
            ang_body,
            sim.q,
            sim.qd,
            self.prev_action,
            self.command[:, None],
        ]
        if self.config.uses_cpg:
            ang = self.phase_angles()
            one_hot = np.eye(len(GAIT_ORDER))[self.gait_idx]
            parts += [self.period[:, None], np.sin(ang), np.cos(ang), one_hot]
        return np.concatenate(parts, axis=1)

    def high_observation(self) -> np.ndarray:
        return self.command[:, None].copy()


# ---------------------------------------------------------------------------
# single-robot wrapper with policies attached (evaluation path)

TRACE_HEADER = ",".join(
    ["time", "command", "base_vel", "B"]
    + [f"phase_{leg}" for leg in ("fr", "fl", "rr", "rl")]
    + ["amplitude"]
    + [f"target_{i}" for i in range(N_JOINTS)]
    + [f"torque_{i}" for i in range(N_JOINTS)]
    + [f"joint_vel_{i}" for i in range(N_JOINTS)]
    + [f"contact_{leg}" for leg in ("fr", "fl", "rr", "rl")]
)


class Trace:
    """Per-tick controller trace, exportable to CSV and re-loadable.

    Command, oscillator phase, targets, and torques are from action time;
    base velocity, joint velocities, and contact flags are measured after
    the tick's physics step, so tracking and energy tables derived from a
    trace refer to the motion the recorded torques produced.
    """

    def __init__(self, dt: float, rows: list | None = None):
        self.dt = dt
        self.rows = rows if rows is not None else []

    def add(self, **kw) -> None:
        row = np.concatenate(
            [
                [kw["time"], kw["command"], kw["base_vel"], kw["B"]],
                kw["phases"],
                [kw["amplitude"]],
                kw["targets"],
                kw["torques"],
                kw["joint_vel"],
                kw["contact"],
            ]
        )
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = TRACE_HEADER.split(",").index(name)
        return np.array([r[i] for r in self.rows])

    def contact_matrix(self) -> np.ndarray:
        """(T, 4) contact flags in leg order."""
        cols = [self.column(f"contact_{leg}") for leg in ("fr", "fl", "rr", "rl")]
        return np.stack(cols, axis=1)

    def to_csv(self) -> str:
        lines = [TRACE_HEADER]
        for r in self.rows:
            lines.append(",".join(repr(float(v)) for v in r))
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())

    @classmethod
    def load(cls, path) -> "Trace":
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] != TRACE_HEADER:
            raise ValueError(f"{path} is not a controller trace file")
        rows = [np.array([float(v) for v in ln.split(",")]) for ln in lines[1:] if ln]
        dt = rows[1][0] - rows[0][0] if len(rows) > 1 else 0.01
        return cls(dt, rows)


class HierarchicalController:
    """One robot, policies attached, trace recording: the evaluation loop.

    ``policy_high`` may be None when the period source is fixed. Policies
    act deterministically (squashed mean) unless an rng is supplied.
    """

    def __init__(
        self,
        config: ControllerConfig,
        model: RobotModel,
        policy_low,
        policy_high=None,
        rng: np.random.Generator | None = None,
    ):
        if config.uses_cpg and config.period_source == "policy" and policy_high is None:
            raise ValueError("period source 'policy' needs a high-level policy")
        self.config = config
        self.model = model
        self.policy_low = policy_low
        self.policy_high = policy_high
        self.rng = rng
        self.ctl = BatchController(config, model, 1)
        self.trace = Trace(config.dt)

    def reset(self, command: float) -> None:
        self.ctl.reset_envs(0, command)
        self.trace = Trace(self.config.dt)

    def set_command(self, command: float) -> None:
        self.ctl.set_command(0, command)

    @property
    def fault(self) -> bool:
        return bool(self.ctl.fault[0])

    def high_level_step(self) -> float:
        """Pick the period (policy or fixed) and re-synchronize the CPG."""
        if self.config.period_source == "fixed":
            period = self.config.fixed_period
        else:
            obs = self.ctl.high_observation()
            if self.rng is None:
                period = float(self.policy_high.deterministic(obs)[0, 0])
            else:
                period = float(self.policy_high.sample(obs, self.rng)[0][0, 0])
        self.ctl.apply_period(np.array([period]), idx=0)
        return period

    def low_level_step(self, sim: SimBatch) -> tuple[np.ndarray, np.ndarray]:
        """Policy action and the 8 joint targets for the current tick."""
        obs = self.ctl.observation(sim)
        if self.rng is None:
            action = self.policy_low.deterministic(obs)
        else:
            action = self.policy_low.sample(obs, self.rng)[0]
        targets = self.ctl.joint_targets(action)
        return action[0], targets

    def control_step(self, sim: SimBatch, post_step_hook=None) -> np.ndarray:
        """One full low-level tick: decide, act, step physics. Returns torques.

        post_step_hook(sim), when given, runs between the physics step and
        the trace recording (evaluation oracles hang here).
        """
        if self.config.uses_cpg and self.ctl.decision_due()[0]:
            self.high_level_step()
        action, targets = self.low_level_step(sim)
        torques = sim.pd_torques(targets, self.config.gains)
        amplitude = float(action[0]) if self.config.uses_cpg else float("nan")
        tick_time = float(self.ctl.time[0])
        phases = self.ctl.phases()[0]
        sim.step(torques, self.config.dt)
        if post_step_hook is not None:
            post_step_hook(sim)
        self.trace.add(
            time=tick_time,
            command=float(self.ctl.command[0]),
            base_vel=float(sim.forward_velocity()[0]),
            B=float(self.ctl.B[0]),
            phases=phases,
            amplitude=amplitude,
            targets=targets[0],
            torques=torques[0],
            joint_vel=sim.qd[0],
            contact=sim.contact[0],
        )
        self.ctl.advance(np.atleast_2d(action), targets)
        return torques[0]

    def build_observation(self, sim: SimBatch) -> np.ndarray:
        return self.ctl.observation(sim)[0]
