"""Simplified 8-DOF quadruped simulator: floating trunk + 4 planar 2-joint legs.

Deliberate fidelity boundary: the trunk is a rigid box carrying the total
system mass, legs contribute a fixed effective inertia per joint (point
masses lumped at link midpoints plus rotor armature), and leg motion does
not react back on the trunk except through ground contact. Contact is a
penalty model: spring-damper normal force and regularized Coulomb
friction, integrated with semi-implicit Euler at 400 Hz.

All heavy math lives in batched kernels (leading batch axis) shared by the
single-robot API and the vectorized rollout path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_LEGS = 4
N_JOINTS = 8  # 4 thigh then 4 calf, leg order [FR, FL, RR, RL]

_WORLD_UP = np.array([0.0, 0.0, 1.0])


class SimulationFault(RuntimeError):
    """Raised when the simulation receives or produces a non-finite state."""


# ---------------------------------------------------------------------------
# quaternion helpers (scalar-first [w, x, y, z], batched over leading axes)


def quat_to_mat(q: np.ndarray) -> np.ndarray:
    """Rotation matrices (..., 3, 3) from unit quaternions (..., 4)."""
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1.0 - 2.0 * (yy + zz)
    m[..., 0, 1] = 2.0 * (xy - wz)
    m[..., 0, 2] = 2.0 * (xz + wy)
    m[..., 1, 0] = 2.0 * (xy + wz)
    m[..., 1, 1] = 1.0 - 2.0 * (xx + zz)
    m[..., 1, 2] = 2.0 * (yz - wx)
    m[..., 2, 0] = 2.0 * (xz - wy)
    m[..., 2, 1] = 2.0 * (yz + wx)
    m[..., 2, 2] = 1.0 - 2.0 * (xx + yy)
    return m


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def quat_from_rotvec(v: np.ndarray) -> np.ndarray:
    """Exponential map: rotation vector (..., 3) to quaternion, small-angle safe."""
    v = np.asarray(v, dtype=float)
    angle = np.sqrt(np.sum(v * v, axis=-1))
    half = 0.5 * angle
    # sin(angle/2)/angle, with its series limit 1/2 - angle^2/48 near zero
    small = angle < 1e-8
    safe = np.where(small, 1.0, angle)
    k = np.where(small, 0.5 - angle * angle / 48.0, np.sin(half) / safe)
    w = np.cos(half)
    return np.concatenate([w[..., None], v * k[..., None]], axis=-1)


def quat_normalize(q: np.ndarray) -> np.ndarray:
    return q / np.sqrt(np.sum(q * q, axis=-1, keepdims=True))


def roll_pitch(quat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """ZYX Euler roll and pitch from quaternions (..., 4)."""
    w, x, y, z = quat[..., 0], quat[..., 1], quat[..., 2], quat[..., 3]
    roll = np.arctan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    pitch = np.arcsin(np.clip(2.0 * (w * y - z * x), -1.0, 1.0))
    return roll, pitch


def yaw_of(quat: np.ndarray) -> np.ndarray:
    w, x, y, z = quat[..., 0], quat[..., 1], quat[..., 2], quat[..., 3]
    return np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True, eq=False)
class RobotModel:
    """Geometry, masses, limits and contact constants of the simplified robot.

    Defaults are loosely Laikago-scale so the 0.1..1.5 m/s command range is
    dynamically reasonable. All values are overridable from a flat
    key = value config file, see ``from_file``.
    """

    trunk_mass: float = 8.0
    trunk_half_extents: tuple[float, float, float] = (0.28, 0.12, 0.06)
    trunk_inertia: tuple[float, float, float] | None = None  # box formula when None
    hip_x: float = 0.22
    hip_y: float = 0.13
    hip_z: float = -0.06
    thigh_length: float = 0.25
    calf_length: float = 0.25
    # mechanical zero of the thigh coordinate, chosen so a zero thigh angle
    # with the nominal calf bend puts the foot directly below the hip
    # (equal static foot loading; thigh targets oscillate about zero)
    thigh_mount_angle: float = 0.2
    thigh_mass: float = 0.5
    calf_mass: float = 0.5
    armature: float = 0.02  # reflected rotor inertia per joint, kg m^2
    thigh_limit_lo: float = -1.0
    thigh_limit_hi: float = 1.0
    calf_limit_lo: float = -1.4
    calf_limit_hi: float = -0.1
    nominal_calf_angle: float = -0.4
    torque_limit: float = 20.0
    gravity: float = 9.81
    contact_kn: float = 5000.0  # N/m
    contact_dn: float = 100.0  # N s/m
    friction_mu: float = 0.8
    friction_veps: float = 0.01  # m/s
    friction_kt: float = 5000.0  # N/m, tangential stiction anchor stiffness
    substep_dt: float = 0.0025  # 400 Hz physics
    fall_height: float = 0.15
    fall_tilt: float = 1.0  # rad, roll/pitch termination threshold

    def __post_init__(self):
        for name in ("trunk_mass", "thigh_length", "calf_length", "thigh_mass", "calf_mass"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if not self.torque_limit > 0.0:
            raise ValueError("torque_limit must be positive")
        if not (self.thigh_limit_lo < self.thigh_limit_hi and self.calf_limit_lo < self.calf_limit_hi):
            raise ValueError("joint limits must be ordered lo < hi")
        if self.trunk_inertia is None:
            a, b, c = self.trunk_half_extents
            m = self.trunk_mass
            object.__setattr__(
                self,
                "trunk_inertia",
                (m / 3.0 * (b * b + c * c), m / 3.0 * (a * a + c * c), m / 3.0 * (a * a + b * b)),
            )

    # -- derived arrays (computed on demand, cheap enough not to cache) --

    @property
    def total_mass(self) -> float:
        return self.trunk_mass + N_LEGS * (self.thigh_mass + self.calf_mass)

    @property
    def hip_offsets(self) -> np.ndarray:
        """(4, 3) hip attachment points in the trunk frame, order [FR, FL, RR, RL]."""
        x, y, z = self.hip_x, self.hip_y, self.hip_z
        return np.array([[x, -y, z], [x, y, z], [-x, -y, z], [-x, y, z]])

    @property
    def inertia_diag(self) -> np.ndarray:
        return np.asarray(self.trunk_inertia, dtype=float)

    @property
    def joint_inertia(self) -> np.ndarray:
        """(8,) effective inertia per joint: lumped link point masses + armature."""
        lt, lc = self.thigh_length, self.calf_length
        i_thigh = self.thigh_mass * (0.5 * lt) ** 2 + self.calf_mass * (lt + 0.5 * lc) ** 2
        i_calf = self.calf_mass * (0.5 * lc) ** 2
        return np.array([i_thigh + self.armature] * N_LEGS + [i_calf + self.armature] * N_LEGS)

    @property
    def joint_limits(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([self.thigh_limit_lo] * N_LEGS + [self.calf_limit_lo] * N_LEGS)
        hi = np.array([self.thigh_limit_hi] * N_LEGS + [self.calf_limit_hi] * N_LEGS)
        return lo, hi

    @property
    def nominal_joint_angles(self) -> np.ndarray:
        return np.array([0.0] * N_LEGS + [self.nominal_calf_angle] * N_LEGS)

    @classmethod
    def from_dict(cls, values: dict) -> "RobotModel":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown robot model keys: {sorted(unknown)}")
        fixed = dict(values)
        for key in ("trunk_half_extents", "trunk_inertia"):
            if key in fixed and fixed[key] is not None:
                fixed[key] = tuple(float(v) for v in np.atleast_1d(fixed[key]))
        return cls(**fixed)

    @classmethod
    def from_file(cls, path) -> "RobotModel":
        from .config import load_flat_config

        return cls.from_dict(load_flat_config(path))


@dataclass(frozen=True)
class PdGains:
    """Proportional-derivative joint gains, broadcast to all 8 joints."""

    kp: float | np.ndarray = 50.0
    kd: float | np.ndarray = 0.5

    def __post_init__(self):
        kp = np.broadcast_to(np.asarray(self.kp, dtype=float), (N_JOINTS,)).copy()
        kd = np.broadcast_to(np.asarray(self.kd, dtype=float), (N_JOINTS,)).copy()
        if np.any(kp < 0.0) or np.any(kd < 0.0):
            raise ValueError("PD gains must be nonnegative")
        object.__setattr__(self, "kp", kp)
        object.__setattr__(self, "kd", kd)


# ---------------------------------------------------------------------------
# state


@dataclass
class RobotState:
    """Full simulator state plus derived foot kinematics and contact flags."""

    pos: np.ndarray
    quat: np.ndarray  # unit, scalar-first
    lin_vel: np.ndarray
    ang_vel: np.ndarray  # world frame
    joint_pos: np.ndarray  # (8,) thigh FR,FL,RR,RL then calf FR,FL,RR,RL
    joint_vel: np.ndarray
    foot_pos: np.ndarray  # (4, 3) world
    foot_vel: np.ndarray  # (4, 3) world
    contact: np.ndarray  # (4,) 1.0 iff foot z <= 0
    gravity_body: np.ndarray  # world up expressed in the trunk frame

    def copy(self) -> "RobotState":
        return RobotState(*(np.array(getattr(self, f.name)) for f in _STATE_FIELDS))

    def yaw(self) -> float:
        return float(yaw_of(self.quat))

    def rotation(self) -> np.ndarray:
        return quat_to_mat(self.quat)

    def forward_velocity(self) -> float:
        """Base velocity along the yaw-aligned forward axis."""
        yaw = self.yaw()
        return float(np.cos(yaw) * self.lin_vel[0] + np.sin(yaw) * self.lin_vel[1])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(getattr(self, f.name))) for f in _STATE_FIELDS)

    def validate(self, model: RobotModel, tol: float = 1e-9) -> None:
        """Check the state's internal invariants, raising on violation."""
        if abs(np.linalg.norm(self.quat) - 1.0) > tol:
            raise ValueError("quaternion is not unit length")
        fp, fv = _foot_kinematics_arrays(
            model,
            self.pos[None],
            self.quat[None],
            self.lin_vel[None],
            self.ang_vel[None],
            self.joint_pos[None],
            self.joint_vel[None],
        )[:2]
        if np.max(np.abs(fp[0] - self.foot_pos)) > tol:
            raise ValueError("stored foot kinematics inconsistent with joint angles")
        want = (self.foot_pos[:, 2] <= 0.0).astype(float)
        if np.any(want != self.contact):
            raise ValueError("contact flags inconsistent with foot heights")


_STATE_FIELDS = RobotState.__dataclass_fields__.values()

STATE_CSV_HEADER = ",".join(
    ["pos_x", "pos_y", "pos_z", "quat_w", "quat_x", "quat_y", "quat_z"]
    + ["vel_x", "vel_y", "vel_z", "omega_x", "omega_y", "omega_z"]
    + [f"q_{n}" for n in ("thigh_fr", "thigh_fl", "thigh_rr", "thigh_rl",
                          "calf_fr", "calf_fl", "calf_rr", "calf_rl")]
    + [f"qd_{i}" for i in range(N_JOINTS)]
    + [f"foot{i}_{ax}" for i in range(N_LEGS) for ax in "xyz"]
    + [f"contact_{i}" for i in range(N_LEGS)]
)


def state_csv_row(state: RobotState) -> str:
    vals = np.concatenate(
        [
            state.pos,
            state.quat,
            state.lin_vel,
            state.ang_vel,
            state.joint_pos,
            state.joint_vel,
            state.foot_pos.ravel(),
            state.contact,
        ]
    )
    return ",".join(repr(float(v)) for v in vals)


# ---------------------------------------------------------------------------
# batched kernels


def _foot_kinematics_arrays(model, pos, quat, lin_vel, ang_vel, q, qd):
    """Forward kinematics for a batch.

    Returns (foot_pos (N,4,3), foot_vel (N,4,3), jac (N,4,3,2)) where jac
    holds the world-frame Jacobian columns of each foot w.r.t. its thigh
    and calf joint.
    """
    R = quat_to_mat(quat)  # (N,3,3)
    lt, lc = model.thigh_length, model.calf_length
    hips = model.hip_offsets  # (4,3)

    qt = q[:, :N_LEGS] + model.thigh_mount_angle  # (N,4) mechanical thigh angle
    qc = q[:, N_LEGS:]
    th = qt + qc

    sin_t, cos_t = np.sin(qt), np.cos(qt)
    sin_a, cos_a = np.sin(th), np.cos(th)

    zeros = np.zeros_like(qt)
    # body-frame foot positions: hip + thigh link + calf link (sagittal plane)
    foot_b = np.empty(qt.shape + (3,))
    foot_b[..., 0] = hips[:, 0] + lt * sin_t + lc * sin_a
    foot_b[..., 1] = hips[:, 1] + zeros
    foot_b[..., 2] = hips[:, 2] - lt * cos_t - lc * cos_a

    # body-frame Jacobian columns
    jac_b = np.empty(qt.shape + (3, 2))
    jac_b[..., 0, 0] = lt * cos_t + lc * cos_a
    jac_b[..., 1, 0] = zeros
    jac_b[..., 2, 0] = lt * sin_t + lc * sin_a
    jac_b[..., 0, 1] = lc * cos_a
    jac_b[..., 1, 1] = zeros
    jac_b[..., 2, 1] = lc * sin_a

    r_world = np.einsum("nij,nlj->nli", R, foot_b)  # (N,4,3)
    foot_pos = pos[:, None, :] + r_world
    jac = np.einsum("nij,nljk->nlik", R, jac_b)  # (N,4,3,2)

    qd_leg = np.stack([qd[:, :N_LEGS], qd[:, N_LEGS:]], axis=-1)  # (N,4,2)
    v_joint = np.einsum("nlik,nlk->nli", jac, qd_leg)
    foot_vel = lin_vel[:, None, :] + np.cross(ang_vel[:, None, :], r_world) + v_joint
    return foot_pos, foot_vel, jac, r_world


def _contact_forces(model, foot_pos, foot_vel, jac, r_world, anchor, anchor_active, h):
    """Penalty contact forces (N,4,3) in the world frame.

    Normal: spring-damper, active only while the foot is at or below the
    plane, clamped nonnegative.

    Tangential: regularized Coulomb friction (the tanh term, capped by the
    effective-mass impulse that would stop the foot within one substep)
    plus a stiction anchor spring. Each foot remembers where it touched
    down; the spring pulls it back there so a stance foot can carry
    tangential force at rest instead of creeping. The combined force is
    capped at the friction cone mu*F_n, and on saturation the anchor slips
    to the point consistent with the capped force. ``anchor`` and
    ``anchor_active`` are updated in place.
    """
    z = foot_pos[..., 2]
    in_contact = z <= 0.0
    fn = np.where(
        in_contact,
        np.maximum(0.0, model.contact_kn * (-z) - model.contact_dn * foot_vel[..., 2]),
        0.0,
    )

    p_xy = foot_pos[..., :2]
    landed = in_contact & ~anchor_active
    anchor[landed] = p_xy[landed]
    anchor_active[:] = in_contact

    inertia = model.joint_inertia
    i_thigh, i_calf = inertia[0], inertia[N_LEGS]
    # per-direction effective inverse mass seen by the contact point. The
    # base rotation term uses |r|^2 over the smallest principal inertia,
    # an upper bound on the true mobility, so the impulse cap below stays
    # conservative and the capped force can never reverse the velocity it
    # opposes within a substep.
    inv_m = (
        1.0 / model.total_mass
        + np.sum(r_world**2, axis=-1, keepdims=True) / np.min(model.inertia_diag)
        + jac[..., 0] ** 2 / i_thigh
        + jac[..., 1] ** 2 / i_calf
    )  # (N,4,3)

    vt = foot_vel[..., :2]
    raw = model.friction_mu * fn[..., None] * np.tanh(vt / model.friction_veps)
    cap = np.abs(vt) / (h * inv_m[..., :2])
    f_visc = -np.sign(vt) * np.minimum(np.abs(raw), cap)

    # elastoplastic return mapping on the spring alone; the viscous force is
    # never folded into the anchor, which would store a velocity-dependent
    # force and pump oscillations instead of damping them
    cone = model.friction_mu * fn
    f_spring = -model.friction_kt * (p_xy - anchor)
    s_norm = np.sqrt(np.sum(f_spring**2, axis=-1))
    over = s_norm > cone
    s_scale = np.where(over, cone / np.maximum(s_norm, 1e-300), 1.0)
    f_spring = f_spring * s_scale[..., None]
    slipped = over & in_contact
    anchor[slipped] = (p_xy + f_spring / model.friction_kt)[slipped]

    ft = f_visc + f_spring
    t_norm = np.sqrt(np.sum(ft**2, axis=-1))
    t_scale = np.where(t_norm > cone, cone / np.maximum(t_norm, 1e-300), 1.0)
    ft = ft * t_scale[..., None]

    forces = np.concatenate([ft, fn[..., None]], axis=-1)
    return np.where(in_contact[..., None], forces, 0.0)


def angular_momentum(model, quat, ang_vel) -> np.ndarray:
    """World angular momentum R I R^T omega for a batch."""
    R = quat_to_mat(quat)
    omega_body = np.einsum("nji,nj->ni", R, ang_vel)
    return np.einsum("nij,nj->ni", R, model.inertia_diag * omega_body)


def _substep(model, pos, quat, lin_vel, ang_vel, ang_mom, q, qd, anchor, anchor_active, torques, h):
    """One semi-implicit Euler physics step on batch arrays (in place).

    ``ang_mom`` is the authoritative rotational state: it is integrated
    directly (exact momentum conservation under zero torque) and
    ``ang_vel`` is re-derived from it against the current orientation each
    substep, which yields torque-free precession for the anisotropic
    trunk.
    """
    idiag = model.inertia_diag

    def omega_from_momentum(R):
        return np.einsum("nij,nj->ni", R, np.einsum("nji,nj->ni", R, ang_mom) / idiag)

    R = quat_to_mat(quat)
    ang_vel[:] = omega_from_momentum(R)
    foot_pos, foot_vel, jac, r_world = _foot_kinematics_arrays(
        model, pos, quat, lin_vel, ang_vel, q, qd
    )
    forces = _contact_forces(
        model, foot_pos, foot_vel, jac, r_world, anchor, anchor_active, h
    )

    m = model.total_mass
    f_base = np.sum(forces, axis=1)
    f_base[:, 2] -= m * model.gravity
    tau_base = np.sum(np.cross(r_world, forces), axis=1)

    lin_vel += (h / m) * f_base

    ang_mom += h * tau_base
    ang_vel[:] = omega_from_momentum(R)

    # joints: motor torque (clamped) plus contact reaction through the Jacobian
    tau_motor = np.clip(torques, -model.torque_limit, model.torque_limit)
    tau_contact = np.einsum("nlik,nli->nlk", jac, forces)  # (N,4,2)
    tau = tau_motor.copy()
    tau[:, :N_LEGS] += tau_contact[..., 0]
    tau[:, N_LEGS:] += tau_contact[..., 1]
    qd += h * tau / model.joint_inertia

    pos += h * lin_vel
    quat[:] = quat_normalize(quat_mul(quat_from_rotvec(ang_vel * h), quat))
    q += h * qd

    lo, hi = model.joint_limits
    below, above = q < lo, q > hi
    qd[below & (qd < 0.0)] = 0.0
    qd[above & (qd > 0.0)] = 0.0
    np.clip(q, lo, hi, out=q)


def _substep_count(model: RobotModel, dt: float) -> int:
    return max(1, int(np.ceil(dt / model.substep_dt - 1e-12)))


# ---------------------------------------------------------------------------
# batch container and single-robot API


class SimBatch:
    """A batch of independent robots stepped in lockstep with shared kernels."""

    def __init__(self, model: RobotModel, n: int):
        self.model = model
        self.n = n
        self.pos = np.zeros((n, 3))
        self.quat = np.tile(np.array([1.0, 0.0, 0.0, 0.0]), (n, 1))
        self.lin_vel = np.zeros((n, 3))
        self.ang_vel = np.zeros((n, 3))
        self.q = np.zeros((n, N_JOINTS))
        self.qd = np.zeros((n, N_JOINTS))
        self.foot_pos = np.zeros((n, N_LEGS, 3))
        self.foot_vel = np.zeros((n, N_LEGS, 3))
        self.contact = np.zeros((n, N_LEGS))
        self.gravity_body = np.tile(_WORLD_UP, (n, 1))
        # stiction anchors: world-xy touchdown points the friction spring
        # pulls stance feet back to; internal contact memory, not part of
        # RobotState (set_state drops it so feet re-anchor where they stand)
        self.anchor = np.zeros((n, N_LEGS, 2))
        self.anchor_active = np.zeros((n, N_LEGS), dtype=bool)

    def refresh_kinematics(self) -> None:
        fp, fv, _, _ = _foot_kinematics_arrays(
            self.model, self.pos, self.quat, self.lin_vel, self.ang_vel, self.q, self.qd
        )
        self.foot_pos, self.foot_vel = fp, fv
        self.contact = (fp[..., 2] <= 0.0).astype(float)
        R = quat_to_mat(self.quat)
        self.gravity_body = np.einsum("nji,j->ni", R, _WORLD_UP)

    def step(self, torques: np.ndarray, dt: float) -> None:
        """Advance every robot by dt, splitting into ~400 Hz substeps."""
        if not 0.0 < dt <= 0.01:
            raise SimulationFault(f"dt must be in (0, 0.01], got {dt}")
        if not np.all(np.isfinite(torques)):
            raise SimulationFault("non-finite torque input")
        n_sub = _substep_count(self.model, dt)
        h = dt / n_sub
        ang_mom = angular_momentum(self.model, self.quat, self.ang_vel)
        for _ in range(n_sub):
            _substep(
                self.model, self.pos, self.quat, self.lin_vel, self.ang_vel,
                ang_mom, self.q, self.qd, self.anchor, self.anchor_active,
                torques, h,
            )
        # express the final momentum against the final orientation so the
        # rebuild at the next step entry recovers it exactly
        R = quat_to_mat(self.quat)
        self.ang_vel = np.einsum(
            "nij,nj->ni", R, np.einsum("nji,nj->ni", R, ang_mom) / self.model.inertia_diag
        )
        self.refresh_kinematics()

    def pd_torques(self, target_q: np.ndarray, gains: PdGains) -> np.ndarray:
        raw = gains.kp * (target_q - self.q) - gains.kd * self.qd
        return np.clip(raw, -self.model.torque_limit, self.model.torque_limit)

    def fallen(self) -> np.ndarray:
        """Boolean per-env termination mask (fell over, sank, or went non-finite)."""
        roll, pitch = roll_pitch(self.quat)
        bad = self.pos[:, 2] < self.model.fall_height
        bad |= np.abs(roll) > self.model.fall_tilt
        bad |= np.abs(pitch) > self.model.fall_tilt
        finite = (
            np.all(np.isfinite(self.pos), axis=1)
            & np.all(np.isfinite(self.quat), axis=1)
            & np.all(np.isfinite(self.lin_vel), axis=1)
            & np.all(np.isfinite(self.ang_vel), axis=1)
            & np.all(np.isfinite(self.q), axis=1)
            & np.all(np.isfinite(self.qd), axis=1)
        )
        return bad | ~finite

    def forward_velocity(self) -> np.ndarray:
        yaw = yaw_of(self.quat)
        return np.cos(yaw) * self.lin_vel[:, 0] + np.sin(yaw) * self.lin_vel[:, 1]

    def get_state(self, i: int) -> RobotState:
        return RobotState(
            pos=self.pos[i].copy(),
            quat=self.quat[i].copy(),
            lin_vel=self.lin_vel[i].copy(),
            ang_vel=self.ang_vel[i].copy(),
            joint_pos=self.q[i].copy(),
            joint_vel=self.qd[i].copy(),
            foot_pos=self.foot_pos[i].copy(),
            foot_vel=self.foot_vel[i].copy(),
            contact=self.contact[i].copy(),
            gravity_body=self.gravity_body[i].copy(),
        )

    def set_state(self, i: int, state: RobotState) -> None:
        self.pos[i] = state.pos
        self.quat[i] = state.quat
        self.lin_vel[i] = state.lin_vel
        self.ang_vel[i] = state.ang_vel
        self.q[i] = state.joint_pos
        self.qd[i] = state.joint_vel
        self.foot_pos[i] = state.foot_pos
        self.foot_vel[i] = state.foot_vel
        self.contact[i] = state.contact
        self.gravity_body[i] = state.gravity_body
        self.anchor_active[i] = False


def _state_from_batch(batch: SimBatch) -> RobotState:
    return batch.get_state(0)


def _batch_from_state(model: RobotModel, state: RobotState) -> SimBatch:
    batch = SimBatch(model, 1)
    batch.set_state(0, state)
    return batch


def step_dynamics(
    state: RobotState,
    torques: np.ndarray,
    dt: float,
    model: RobotModel | None = None,
) -> RobotState:
    """Advance one robot by dt seconds and return the new, consistent state.

    Stateless convenience wrapper: a fresh batch is built per call, so the
    friction stiction anchors reset to wherever the feet currently stand.
    Loops that need anchors to persist across control ticks (anything
    measuring long-horizon drift) should drive a SimBatch directly.
    """
    model = model or RobotModel()
    torques = np.asarray(torques, dtype=float)
    if not state.is_finite():
        raise SimulationFault("non-finite state input")
    batch = _batch_from_state(model, state)
    batch.step(torques[None, :], dt)
    return _state_from_batch(batch)


def pd_torque(
    target_q: np.ndarray,
    state: RobotState,
    gains: PdGains,
    torque_limit: float = 20.0,
) -> np.ndarray:
    """PD motor torque clamp(kp*(target - q) - kd*qd, +-torque_limit)."""
    raw = gains.kp * (np.asarray(target_q, dtype=float) - state.joint_pos) - gains.kd * state.joint_vel
    return np.clip(raw, -torque_limit, torque_limit)


def foot_kinematics(model: RobotModel, state: RobotState):
    """Per-foot world position, tangential (x, y) velocity, vertical velocity."""
    fp, fv, _, _ = _foot_kinematics_arrays(
        model,
        state.pos[None],
        state.quat[None],
        state.lin_vel[None],
        state.ang_vel[None],
        state.joint_pos[None],
        state.joint_vel[None],
    )
    return fp[0], fv[0, :, :2], fv[0, :, 2]


def mechanical_energy_rate(state: RobotState, torques: np.ndarray, mode: str = "positive") -> float:
    """Actuator power: sum of positive joint work rates, or sum of |tau * qd|."""
    p = np.asarray(torques, dtype=float) * state.joint_vel
    if mode == "positive":
        return float(np.sum(np.maximum(p, 0.0)))
    if mode == "absolute":
        return float(np.sum(np.abs(p)))
    raise ValueError(f"unknown energy mode {mode!r}")


# ---------------------------------------------------------------------------
# reset


_SETTLE_CACHE: dict[tuple, RobotState] = {}


def _model_key(model: RobotModel) -> tuple:
    return tuple(getattr(model, f) for f in sorted(RobotModel.__dataclass_fields__))


def _initial_stand(model: RobotModel) -> SimBatch:
    batch = SimBatch(model, 1)
    batch.q[0] = model.nominal_joint_angles
    batch.refresh_kinematics()
    pen_eq = model.total_mass * model.gravity / (N_LEGS * model.contact_kn)
    batch.pos[0, 2] = -np.min(batch.foot_pos[0, :, 2]) - pen_eq
    batch.refresh_kinematics()
    return batch

def _rest_acceleration(batch: SimBatch, target: np.ndarray, gains: PdGains) -> float:
    """Peak acceleration right after zeroing all velocities (an equilibrium probe).

    Restores the friction anchors along with the state so the probe does
    not disturb the stance it is measuring.
    """
    snap = batch.get_state(0)
    anchor = batch.anchor.copy()
    active = batch.anchor_active.copy()
    h = batch.model.substep_dt
    batch.step(batch.pd_torques(target, gains), h)
    a = max(
        float(np.max(np.abs(batch.lin_vel))),
        float(np.max(np.abs(batch.ang_vel))),
        float(np.max(np.abs(batch.qd))),
    ) / h
    batch.set_state(0, snap)
    batch.anchor[:] = anchor
    batch.anchor_active[:] = active
    return a


def settled_stand(model: RobotModel, gains: PdGains | None = None) -> RobotState:
    """Static standing equilibrium under PD hold at the nominal joint targets.

    Found by heavily damped settling, iterated until the residual
    acceleration from rest is negligible. Cached per model; the result has
    zero velocities and all four feet in contact.
    """
    key = _model_key(model)
    if key in _SETTLE_CACHE:
        return _SETTLE_CACHE[key].copy()
    gains = gains or PdGains()
    batch = _initial_stand(model)
    target = model.nominal_joint_angles[None, :]
    dt = model.substep_dt
    round_steps = int(0.25 / dt)
    for _ in range(80):
        for _ in range(round_steps):
            torques = batch.pd_torques(target, gains)
            batch.step(torques, dt)
            batch.lin_vel *= 0.997
            batch.ang_vel *= 0.997
            batch.qd *= 0.997
        batch.lin_vel[:] = 0.0
        batch.ang_vel[:] = 0.0
        batch.qd[:] = 0.0
        if _rest_acceleration(batch, target, gains) < 1e-4:
            break
    batch.refresh_kinematics()
    state = batch.get_state(0)
    _SETTLE_CACHE[key] = state.copy()
    return state


def reset(model: RobotModel, seed: int, perturb_scale: float = 0.05) -> RobotState:
    """Settled stand plus a small seeded joint-angle perturbation.

    With a nonzero scale the base height is adjusted so every foot stays
    in contact after the perturbation.
    """
    state = settled_stand(model)
    if perturb_scale == 0.0:
        return state
    rng = np.random.default_rng(seed)
    lo, hi = model.joint_limits
    state.joint_pos = np.clip(
        state.joint_pos + rng.uniform(-perturb_scale, perturb_scale, N_JOINTS), lo, hi
    )
    batch = _batch_from_state(model, state)
    batch.refresh_kinematics()
    pen_eq = model.total_mass * model.gravity / (N_LEGS * model.contact_kn)
    batch.pos[0, 2] += -0.25 * pen_eq - np.max(batch.foot_pos[0, :, 2])
    batch.refresh_kinematics()
    return batch.get_state(0)
