import json

import numpy as np
import pytest

from quadgait.bench import (
    ENERGY_BIN_MEDIANS,
    EvalReport,
    EvalRun,
    cached_train,
    contact_intervals,
    eval_command_profile,
    export_contact_plot,
    export_energy_table,
    export_tracking_table,
    pair_overlap,
    run_curriculum_comparison,
    run_tracking_eval,
    steady_state_overlap,
)
from quadgait.cpg import GaitKind
from quadgait.ppo import TrainConfig, Trainer


def tiny_config(**kw):
    base = dict(
        mode="single_gait",
        gait="trot",
        n_envs=2,
        steps_per_iter=60,
        episode_ticks=25,
        iterations=1,
        hidden_low=(16, 16),
        hidden_high=(8,),
        minibatch=32,
        seed=7,
    )
    base.update(kw)
    return TrainConfig(**base)


@pytest.fixture(scope="module")
def tiny_checkpoint(tmp_path_factory):
    # an untrained policy is enough to exercise the evaluation plumbing
    path = tmp_path_factory.mktemp("ckpt") / "tiny.bin"
    Trainer(tiny_config()).save(path)
    return path


# -- contact run-length encoding ----------------------------------------------


def test_contact_intervals_basic():
    spans = contact_intervals([1, 1, 0, 1], dt=0.01)
    assert spans == [(0.0, 0.02), pytest.approx((0.03, 0.04))]


def test_contact_intervals_edges():
    assert contact_intervals([], dt=0.01) == []
    assert contact_intervals([0, 0, 0], dt=0.01) == []
    assert contact_intervals([1, 1], dt=0.5) == [(0.0, 1.0)]
    # offset start shifts every span
    spans = contact_intervals([0, 1, 0], dt=0.1, t0=2.0)
    assert spans == [pytest.approx((2.1, 2.2))]


# -- pair overlap --------------------------------------------------------------


def _pattern(rows):
    return np.array(rows, dtype=float)


def test_pair_overlap_perfect_trot():
    # alternating diagonal pairs, never all four down
    a = [1, 0, 0, 1]
    b = [0, 1, 1, 0]
    contact = _pattern([a, a, b, b] * 10)
    ov = pair_overlap(contact, GaitKind.TROT)
    assert ov.fraction == 1.0
    assert not ov.degenerate
    assert ov.any_contact_ticks == 40


def test_pair_overlap_standing_is_degenerate():
    contact = _pattern([[1, 1, 1, 1]] * 50)
    ov = pair_overlap(contact, GaitKind.TROT)
    assert ov.fraction == 1.0
    assert ov.degenerate


def test_pair_overlap_no_contact():
    ov = pair_overlap(np.zeros((20, 4)), GaitKind.TROT)
    assert ov.fraction == 0.0
    assert ov.any_contact_ticks == 0


def test_pair_overlap_wrong_gait_scores_low():
    a = [1, 0, 0, 1]
    b = [0, 1, 1, 0]
    contact = _pattern([a, b] * 20)
    assert pair_overlap(contact, GaitKind.BOUND).fraction == 0.0


def test_pair_overlap_random_near_three_fifteenths():
    # conditioned on any contact, 3 of the 15 nonzero patterns are valid
    rng = np.random.default_rng(0)
    contact = (rng.random((60000, 4)) < 0.5).astype(float)
    ov = pair_overlap(contact, GaitKind.PACE)
    assert abs(ov.fraction - 3.0 / 15.0) < 0.01
    assert not ov.degenerate


def test_pair_overlap_mixed_fraction():
    a = [1, 0, 0, 1]
    bad = [1, 1, 1, 0]
    contact = _pattern([a, bad, a, bad])
    assert pair_overlap(contact, GaitKind.TROT).fraction == 0.5


# -- energy binning ------------------------------------------------------------


def _fake_run(velocities, power, dt=0.01):
    v = np.asarray(velocities, dtype=float)
    p = np.asarray(power, dtype=float)
    return EvalRun(
        v_cmd=0.0, tracking_error=0.0, mean_speed=float(v.mean()),
        mean_period=0.0, fell=False, ticks_measured=v.size, trace=None,
        velocity_samples=v, power_pos=p, power_abs=2.0 * p, dt=dt,
    )


def test_energy_csv_bins_by_measured_velocity():
    # 10 ticks at 0.15 m/s in the lowest bin, 5 ticks at 0.95 in the fifth
    run = _fake_run([0.15] * 10 + [0.95] * 5, [10.0] * 10 + [20.0] * 5)
    report = EvalReport(runs=[run], duration=1.0, warmup=0.0, seed=0, checkpoint="x")
    rows = report.energy_csv().splitlines()[1:]
    table = {float(r.split(",")[0]): r.split(",") for r in rows}
    assert len(rows) == len(ENERGY_BIN_MEDIANS)

    lo = table[0.1]
    assert float(lo[1]) == 10.0  # count
    assert float(lo[2]) == pytest.approx(10.0)  # mean positive power
    assert float(lo[4]) == pytest.approx(10.0 * 10 * 0.01)  # integrated energy
    # energy per meter = energy / distance in the bin
    assert float(lo[6]) == pytest.approx(10.0 * 10 * 0.01 / (0.15 * 10 * 0.01))

    mid = table[0.9]
    assert float(mid[1]) == 5.0
    assert float(mid[3]) == pytest.approx(40.0)  # mean absolute power

    # untouched bins carry zero counts, not missing rows
    assert float(table[1.5][1]) == 0.0


def test_energy_csv_open_ended_outer_bins():
    run = _fake_run([0.01, 2.5], [1.0, 1.0])
    report = EvalReport(runs=[run], duration=1.0, warmup=0.0, seed=0, checkpoint="x")
    rows = report.energy_csv().splitlines()[1:]
    counts = [float(r.split(",")[1]) for r in rows]
    assert counts[0] == 1.0 and counts[-1] == 1.0


def test_tracking_csv_round_trips_values():
    run = _fake_run([0.5, 0.5], [1.0, 1.0])
    run.v_cmd = 0.6
    run.tracking_error = 0.1
    report = EvalReport(runs=[run], duration=1.0, warmup=0.0, seed=0, checkpoint="x")
    line = report.tracking_csv().splitlines()[1].split(",")
    assert float(line[0]) == 0.6
    assert float(line[1]) == 0.1
    assert float(line[4]) == 0.0  # fell flag


# -- tracking evaluation against a pinned-velocity oracle -----------------------


def test_tracking_eval_zero_error_when_oracle_pins_velocity(tiny_checkpoint):
    # the hook overwrites the post-step state with level pose and exact
    # command velocity, so any nonzero tracking error would have to come
    # from the measurement pipeline itself
    def pin(sim, v):
        sim.lin_vel[0] = (v, 0.0, 0.0)
        sim.ang_vel[0] = 0.0
        sim.quat[0] = (1.0, 0.0, 0.0, 0.0)
        sim.pos[0, 2] = 0.55

    report = run_tracking_eval(
        tiny_checkpoint, velocities=[0.4, 1.1], duration=1.0, warmup=0.5,
        seed=3, oracle=pin,
    )
    for r in report.runs:
        assert r.tracking_error < 1e-12
        assert r.mean_speed == pytest.approx(r.v_cmd)
        assert not r.fell
        assert r.ticks_measured == 50


def test_tracking_eval_writes_artifacts(tiny_checkpoint, tmp_path):
    def pin(sim, v):
        sim.lin_vel[0] = (v, 0.0, 0.0)
        sim.quat[0] = (1.0, 0.0, 0.0, 0.0)
        sim.pos[0, 2] = 0.55

    out = tmp_path / "eval"
    run_tracking_eval(tiny_checkpoint, velocities=[0.3], duration=0.6,
                      warmup=0.2, seed=0, oracle=pin, out_dir=out)
    assert (out / "trace_v0.30.csv").exists()
    assert (out / "tracking.csv").exists()
    assert (out / "energy.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["kind"] == "eval"
    assert manifest["velocities"] == [0.3]
    assert manifest["summary"]["fell"] == [False]


def test_tracking_eval_rejects_short_duration(tiny_checkpoint):
    with pytest.raises(ValueError):
        run_tracking_eval(tiny_checkpoint, velocities=[0.5], duration=0.5, warmup=1.0)


# -- trace exports --------------------------------------------------------------


@pytest.fixture(scope="module")
def short_trace(tiny_checkpoint):
    report = run_tracking_eval(tiny_checkpoint, velocities=[0.5], duration=0.5,
                               warmup=0.0, seed=1)
    return report.runs[0].trace


def test_export_contact_plot_matches_matrix(short_trace):
    text = export_contact_plot(short_trace)
    lines = text.splitlines()
    assert lines[0] == "foot,start,end"
    contact = short_trace.contact_matrix()
    # total covered time per foot equals the flag count times dt
    for leg, name in enumerate(("fr", "fl", "rr", "rl")):
        spans = [ln for ln in lines[1:] if ln.startswith(name + ",")]
        covered = sum(float(s.split(",")[2]) - float(s.split(",")[1]) for s in spans)
        assert covered == pytest.approx(contact[:, leg].sum() * short_trace.dt)


def test_export_tracking_table(short_trace):
    lines = export_tracking_table(short_trace).splitlines()
    assert lines[0] == "time,command,base_vel,abs_error"
    assert len(lines) == len(short_trace) + 1
    first = lines[1].split(",")
    assert float(first[3]) == pytest.approx(abs(float(first[1]) - float(first[2])))


def test_export_energy_table_cumsum(short_trace):
    lines = export_energy_table(short_trace).splitlines()
    assert len(lines) == len(short_trace) + 1
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    # cumulative columns integrate the instantaneous ones
    np.testing.assert_allclose(rows[:, 3], np.cumsum(rows[:, 1]) * short_trace.dt,
                               rtol=1e-9)
    np.testing.assert_allclose(rows[:, 4], np.cumsum(rows[:, 2]) * short_trace.dt,
                               rtol=1e-9)
    assert np.all(rows[:, 2] >= rows[:, 1] - 1e-12)


def test_steady_state_overlap_skips_warmup(short_trace):
    full = pair_overlap(short_trace.contact_matrix(), GaitKind.TROT)
    tail = steady_state_overlap(short_trace, GaitKind.TROT, warmup=0.3)
    assert tail.any_contact_ticks <= full.any_contact_ticks


# -- command profile -------------------------------------------------------------


def test_eval_command_profile_segments(tiny_checkpoint):
    trace, stats = eval_command_profile(tiny_checkpoint, [(0.3, 0.3), (0.8, 0.3)],
                                        seed=0)
    assert [s["v_cmd"] for s in stats] == [0.3, 0.8]
    assert sum(s["ticks"] for s in stats) == len(trace)
    # a fall in one segment truncates all later ones
    if stats[0]["fell"]:
        assert stats[1]["ticks"] == 0


# -- cached training --------------------------------------------------------------


def test_cached_train_reuses_finished_run(tmp_path):
    tc = tiny_config(iterations=2)
    out1, man1 = cached_train(tc, tmp_path, "unit")
    stamp = (out1 / "manifest.json").stat().st_mtime_ns
    out2, man2 = cached_train(tc, tmp_path, "unit")
    assert out1 == out2
    assert (out1 / "manifest.json").stat().st_mtime_ns == stamp
    assert man2["iterations_completed"] == 2

    # a different config claims a different directory
    out3, _ = cached_train(tiny_config(iterations=3), tmp_path, "unit")
    assert out3 != out1


def test_curriculum_comparison_table(tmp_path):
    tc = tiny_config(v_min=0.5, v_max=0.7)
    path = run_curriculum_comparison(tc, tmp_path, seeds=(0,), k_values=(1.0, 0.3),
                                     duration=0.6, warmup=0.2)
    lines = path.read_text().splitlines()
    assert lines[0] == "k_c0,seed,tracking_error,mean_speed,stopped,fell"
    assert len(lines) == 3
    k_values = [float(ln.split(",")[0]) for ln in lines[1:]]
    assert k_values == [1.0, 0.3]
    # stopped flag is consistent with its definition: speed < command/4
    for ln in lines[1:]:
        cols = [float(v) for v in ln.split(",")]
        assert (cols[3] < 0.25 * 0.6) == bool(cols[4])
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["kind"] == "suite:curriculum"
