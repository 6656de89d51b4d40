import numpy as np
import pytest

from quadgait.controller import (
    TRACE_HEADER,
    BatchController,
    ControllerConfig,
    HierarchicalController,
    Trace,
    gait_index,
    schedule_gait_index,
    thigh_targets,
)
from quadgait.cpg import TWO_PI, GaitKind
from quadgait.dynamics import RobotModel, SimBatch, reset, settled_stand


def make_ctl(n=1, **kw):
    cfg = ControllerConfig(**kw)
    return cfg, BatchController(cfg, RobotModel(), n)


class FixedPolicy:
    def __init__(self, vals):
        self.vals = np.asarray(vals, dtype=float)

    def deterministic(self, obs):
        return np.tile(self.vals, (obs.shape[0], 1))


# -- configuration ----------------------------------------------------------


def test_config_rejects_bad_mode_and_clocks():
    with pytest.raises(ValueError, match="mode"):
        ControllerConfig(mode="tripod")
    with pytest.raises(ValueError, match="integer multiple"):
        ControllerConfig(dt=0.01, t_cpg=0.033)
    with pytest.raises(ValueError):
        ControllerConfig(dt=-0.01)


def test_phase_source_derived_from_mode():
    assert ControllerConfig(mode="single_gait").phase_source == "fixed"
    assert ControllerConfig(mode="multi_gait").phase_source == "schedule"


def test_policy_phase_source_unsupported():
    with pytest.raises(NotImplementedError):
        ControllerConfig(phase_source="policy")


def test_dimensions_by_mode():
    cpg = ControllerConfig(mode="single_gait")
    flat = ControllerConfig(mode="baseline")
    assert cpg.act_dim == 5
    assert flat.act_dim == 8
    assert cpg.obs_dim == 43
    assert flat.obs_dim == 34
    assert cpg.steps_per_decision == 5


def test_low_bounds_cover_action_layout():
    m = RobotModel()
    lo, hi = ControllerConfig(mode="single_gait").low_bounds(m)
    assert lo[0] == 0.0 and hi[0] == pytest.approx(0.8)
    assert np.all(lo[1:] == m.calf_limit_lo) and np.all(hi[1:] == m.calf_limit_hi)
    blo, bhi = ControllerConfig(mode="baseline").low_bounds(m)
    assert blo.shape == (8,) and bhi.shape == (8,)


# -- gait schedule ----------------------------------------------------------


def test_schedule_boundaries_are_closed_on_the_right():
    v = np.array([0.1, 0.5, 0.50001, 1.0, 1.00001, 1.5])
    np.testing.assert_array_equal(schedule_gait_index(v), [0, 0, 1, 1, 2, 2])


def test_schedule_rejects_out_of_range():
    for bad in (0.0, -0.2, 1.6):
        with pytest.raises(ValueError):
            schedule_gait_index(bad)


def test_gait_index_order():
    assert [gait_index(g) for g in (GaitKind.TROT, GaitKind.PACE, GaitKind.BOUND)] == [0, 1, 2]


# -- oscillator clocking ----------------------------------------------------


def test_decision_cadence():
    _, ctl = make_ctl()
    ctl.reset_envs(0, 0.4)
    due = []
    for _ in range(11):
        due.append(bool(ctl.decision_due()[0]))
        ctl.advance(ctl.prev_action, ctl.prev_targets)
    assert due == [True, False, False, False, False] * 2 + [True]


def test_apply_period_sets_rate_and_keeps_values_continuous():
    _, ctl = make_ctl()
    ctl.reset_envs(0, 0.4)
    for _ in range(7):
        ctl.advance(ctl.prev_action, ctl.prev_targets)
    before = ctl.cpg_values().copy()
    ctl.apply_period(np.array([0.25]))
    np.testing.assert_allclose(ctl.cpg_values(), before, atol=1e-12)
    assert ctl.period[0] == pytest.approx(0.25)
    with pytest.raises(ValueError):
        ctl.apply_period(np.array([0.0]))


def test_schedule_mode_swaps_gait_at_decision_time_only():
    _, ctl = make_ctl(mode="multi_gait")
    ctl.reset_envs(0, 0.4)
    assert ctl.gait_idx[0] == 0
    ctl.set_command(0, 1.2)
    assert ctl.gait_idx[0] == 0  # raw command change leaves the table alone
    ctl.apply_period(np.array([0.5]))
    assert ctl.gait_idx[0] == 2


def test_phase_angles_include_gait_offsets():
    _, ctl = make_ctl(gait=GaitKind.BOUND)
    ctl.reset_envs(0, 0.4)
    ang = ctl.phase_angles()[0]
    np.testing.assert_allclose(ang, [np.pi, np.pi, 0.0, 0.0], atol=1e-12)


# -- action mapping ---------------------------------------------------------


def test_thigh_targets_scale_the_oscillator():
    out = thigh_targets(0.5, np.array([1.0, -1.0, 0.0, 0.5]))
    np.testing.assert_allclose(out, [0.5, -0.5, 0.0, 0.25])


def test_joint_targets_layout_in_cpg_mode():
    _, ctl = make_ctl()
    ctl.reset_envs(0, 0.4)
    action = np.array([[0.3, -0.5, -0.6, -0.7, -0.8]])
    targets = ctl.joint_targets(action)
    np.testing.assert_allclose(targets[0, :4], 0.3 * ctl.cpg_values()[0])
    np.testing.assert_allclose(targets[0, 4:], action[0, 1:])


def test_joint_targets_baseline_passthrough():
    _, ctl = make_ctl(mode="baseline")
    ctl.reset_envs(0, 0.4)
    action = np.linspace(-0.2, 0.2, 8)[None, :]
    np.testing.assert_array_equal(ctl.joint_targets(action), action)


def test_safe_stop_on_non_finite_action():
    _, ctl = make_ctl()
    ctl.reset_envs(0, 0.4)
    good = ctl.joint_targets(np.array([[0.3, -0.5, -0.5, -0.5, -0.5]]))
    ctl.advance(np.array([[0.3, -0.5, -0.5, -0.5, -0.5]]), good)
    bad = np.array([[np.nan, -0.5, -0.5, -0.5, -0.5]])
    targets = ctl.joint_targets(bad)
    np.testing.assert_array_equal(targets, good)
    assert ctl.fault[0]


# -- observations -----------------------------------------------------------


def test_observation_layout_cpg_mode():
    cfg, ctl = make_ctl()
    ctl.reset_envs(0, 0.7)
    m = RobotModel()
    sim = SimBatch(m, 1)
    sim.set_state(0, settled_stand(m))
    obs = ctl.observation(sim)
    assert obs.shape == (1, cfg.obs_dim)
    row = obs[0]
    np.testing.assert_allclose(row[0:3], sim.gravity_body[0])
    np.testing.assert_allclose(row[9:17], sim.q[0])
    np.testing.assert_allclose(row[17:25], sim.qd[0])
    np.testing.assert_allclose(row[25:30], ctl.prev_action[0])
    assert row[30] == pytest.approx(0.7)
    assert row[31] == pytest.approx(ctl.period[0])
    ang = ctl.phase_angles()[0]
    np.testing.assert_allclose(row[32:36], np.sin(ang), atol=1e-12)
    np.testing.assert_allclose(row[36:40], np.cos(ang), atol=1e-12)
    np.testing.assert_array_equal(row[40:43], [1.0, 0.0, 0.0])


def test_observation_velocities_rotate_into_body_frame():
    _, ctl = make_ctl()
    ctl.reset_envs(0, 0.4)
    m = RobotModel()
    sim = SimBatch(m, 1)
    sim.set_state(0, settled_stand(m))
    # yaw 90 degrees: world +x velocity appears as body -y
    sim.quat[0] = np.array([np.cos(np.pi / 4), 0.0, 0.0, np.sin(np.pi / 4)])
    sim.lin_vel[0] = np.array([1.0, 0.0, 0.0])
    sim.refresh_kinematics()
    row = ctl.observation(sim)[0]
    np.testing.assert_allclose(row[3:6], [0.0, -1.0, 0.0], atol=1e-12)


def test_high_observation_is_the_command():
    _, ctl = make_ctl(n=3)
    ctl.reset_envs(np.arange(3), np.array([0.3, 0.8, 1.4]))
    np.testing.assert_allclose(ctl.high_observation(), [[0.3], [0.8], [1.4]])


# -- trace ------------------------------------------------------------------


def _controller_on_stand(cfg):
    m = RobotModel()
    sim = SimBatch(m, 1)
    sim.set_state(0, reset(m, seed=1, perturb_scale=0.0))
    low = FixedPolicy([0.3, -0.4, -0.4, -0.4, -0.4])
    high = FixedPolicy([0.5])
    hc = HierarchicalController(cfg, m, low, high)
    hc.reset(0.4)
    return hc, sim


def test_control_step_records_trace_rows():
    hc, sim = _controller_on_stand(ControllerConfig(mode="single_gait"))
    for _ in range(12):
        hc.control_step(sim)
    assert len(hc.trace) == 12
    times = hc.trace.column("time")
    np.testing.assert_allclose(np.diff(times), 0.01, atol=1e-12)
    assert hc.trace.column("command")[0] == pytest.approx(0.4)
    assert hc.trace.contact_matrix().shape == (12, 4)
    assert not hc.fault


def test_trace_csv_roundtrip(tmp_path):
    hc, sim = _controller_on_stand(ControllerConfig(mode="single_gait"))
    for _ in range(9):
        hc.control_step(sim)
    path = tmp_path / "trace.csv"
    hc.trace.save(path)
    back = Trace.load(path)
    assert back.dt == pytest.approx(hc.trace.dt)
    for name in ("time", "base_vel", "B", "amplitude", "torque_3"):
        np.testing.assert_array_equal(back.column(name), hc.trace.column(name))


def test_trace_load_rejects_foreign_csv(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError, match="not a controller trace"):
        Trace.load(path)


def test_trace_header_matches_row_width():
    hc, sim = _controller_on_stand(ControllerConfig(mode="single_gait"))
    hc.control_step(sim)
    assert len(hc.trace.rows[0]) == len(TRACE_HEADER.split(","))


# -- hierarchy wiring -------------------------------------------------------


def test_period_source_fixed_needs_no_high_policy():
    cfg = ControllerConfig(mode="single_gait", period_source="fixed", fixed_period=0.4)
    m = RobotModel()
    hc = HierarchicalController(cfg, m, FixedPolicy([0.3, -0.4, -0.4, -0.4, -0.4]))
    sim = SimBatch(m, 1)
    sim.set_state(0, settled_stand(m))
    hc.reset(0.4)
    hc.control_step(sim)
    assert hc.ctl.period[0] == pytest.approx(0.4)


def test_policy_period_source_requires_high_policy():
    cfg = ControllerConfig(mode="single_gait", period_source="policy")
    with pytest.raises(ValueError, match="high-level policy"):
        HierarchicalController(cfg, RobotModel(), FixedPolicy([0.3, 0, 0, 0, 0]))


def test_high_level_runs_every_fifth_tick():
    hc, sim = _controller_on_stand(ControllerConfig(mode="single_gait"))
    periods = []
    for _ in range(11):
        hc.control_step(sim)
        periods.append(float(hc.ctl.period[0]))
    # the first tick already applies the high-level decision
    assert periods[0] == pytest.approx(0.5)
    assert len(set(round(p, 12) for p in periods)) == 1


def test_baseline_mode_runs_without_oscillator():
    cfg = ControllerConfig(mode="baseline")
    m = RobotModel()
    low = FixedPolicy(m.nominal_joint_angles)
    hc = HierarchicalController(cfg, m, low)
    sim = SimBatch(m, 1)
    sim.set_state(0, reset(m, seed=2, perturb_scale=0.0))
    hc.reset(0.4)
    for _ in range(10):
        hc.control_step(sim)
    assert not sim.fallen()[0]
    assert np.isnan(hc.trace.column("amplitude")).all()
