"""Evaluation harness: tracking error, energy, contact analysis, suites.

Everything here consumes checkpoints and produces CSV tables plus a JSON
run manifest. All randomness flows from explicit seeds, and every number
in an exported table can be recomputed from the trace files written next
to it; given the same config and seed the CSV bytes are identical.

Energy accounting: per tick, positive mechanical work sums max(tau*qd, 0)
over joints (the default), and the absolute mode sums |tau*qd|, both
integrated at the control period. Bins follow the measured (not
commanded) velocity, medians 0.1 to 1.5 m/s in 0.2-wide bins with the
outer bins open-ended so every sample lands somewhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import config_hash
from .controller import ControllerConfig, HierarchicalController, Trace
from .cpg import GaitKind
from .dynamics import RobotModel, SimBatch
from .dynamics import reset as reset_robot
from .policy import load_checkpoint
from .ppo import TrainConfig, train

DEFAULT_VELOCITIES = (0.3, 0.6, 0.9, 1.2, 1.5)
ENERGY_BIN_MEDIANS = tuple(round(0.1 + 0.2 * i, 1) for i in range(8))  # 0.1 .. 1.5
_ENERGY_BIN_EDGES = np.array([0.2 + 0.2 * i for i in range(7)])  # inner edges

TRACKING_HEADER = "velocity,tracking_error,mean_speed,mean_period,fell,ticks_measured"
ENERGY_HEADER = (
    "bin_median,count,mean_power_pos,mean_power_abs,"
    "energy_pos,energy_abs,energy_pos_per_m,energy_abs_per_m"
)
CONTACT_HEADER = "foot,start,end"

_FOOT_NAMES = ("fr", "fl", "rr", "rl")

# expected simultaneous-contact pairs per gait, as leg index sets
GAIT_PAIRS = {
    GaitKind.TROT: ((0, 3), (1, 2)),
    GaitKind.PACE: ((0, 2), (1, 3)),
    GaitKind.BOUND: ((0, 1), (2, 3)),
}


def _fmt(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# checkpoint -> runnable controller


def controller_from_checkpoint(path, model: RobotModel | None = None,
                               rng: np.random.Generator | None = None):
    """Rebuild a HierarchicalController (plus meta) from a checkpoint file."""
    policies, _values, meta = load_checkpoint(path)
    model = model or RobotModel()
    config = ControllerConfig(
        mode=meta["mode"],
        gait=GaitKind(meta["gait"]),
        stance_on_negative=meta.get("stance_on_negative", True),
    )
    if config.obs_dim != meta["obs_dim"]:
        raise ValueError(
            f"checkpoint observation layout ({meta['obs_dim']}) does not match "
            f"this build ({config.obs_dim})"
        )
    hc = HierarchicalController(
        config, model, policies["low"], policies.get("high"), rng=rng
    )
    return hc, meta


# ---------------------------------------------------------------------------
# single evaluation runs


@dataclass
class EvalRun:
    """Metrics of one constant-command rollout."""

    v_cmd: float
    tracking_error: float
    mean_speed: float
    mean_period: float
    fell: bool
    ticks_measured: int
    trace: Trace
    velocity_samples: np.ndarray
    power_pos: np.ndarray
    power_abs: np.ndarray
    dt: float

    @property
    def distance(self) -> float:
        return float(np.sum(np.abs(self.velocity_samples)) * self.dt)


@dataclass
class EvalReport:
    """Tracking and energy evaluation across a set of command velocities."""

    runs: list
    duration: float
    warmup: float
    seed: int
    checkpoint: str
    meta: dict = field(default_factory=dict)

    @property
    def velocities(self) -> list:
        return [r.v_cmd for r in self.runs]

    def tracking_csv(self) -> str:
        lines = [TRACKING_HEADER]
        for r in self.runs:
            lines.append(
                ",".join(
                    [_fmt(r.v_cmd), _fmt(r.tracking_error), _fmt(r.mean_speed),
                     _fmt(r.mean_period), _fmt(1.0 if r.fell else 0.0),
                     _fmt(r.ticks_measured)]
                )
            )
        return "\n".join(lines) + "\n"

    def energy_csv(self) -> str:
        v = np.concatenate([r.velocity_samples for r in self.runs]) if self.runs else np.zeros(0)
        p_pos = np.concatenate([r.power_pos for r in self.runs]) if self.runs else np.zeros(0)
        p_abs = np.concatenate([r.power_abs for r in self.runs]) if self.runs else np.zeros(0)
        dt = self.runs[0].dt if self.runs else 0.01
        idx = np.digitize(v, _ENERGY_BIN_EDGES)
        lines = [ENERGY_HEADER]
        for b, median in enumerate(ENERGY_BIN_MEDIANS):
            sel = idx == b
            count = int(sel.sum())
            if count == 0:
                lines.append(",".join([_fmt(median), "0.0"] + ["0.0"] * 6))
                continue
            e_pos = float(p_pos[sel].sum() * dt)
            e_abs = float(p_abs[sel].sum() * dt)
            dist = float(np.abs(v[sel]).sum() * dt)
            per_m = (e_pos / dist, e_abs / dist) if dist > 0.0 else (0.0, 0.0)
            lines.append(
                ",".join(
                    [_fmt(median), _fmt(count), _fmt(p_pos[sel].mean()),
                     _fmt(p_abs[sel].mean()), _fmt(e_pos), _fmt(e_abs),
                     _fmt(per_m[0]), _fmt(per_m[1])]
                )
            )
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "velocities": self.velocities,
            "tracking_errors": [r.tracking_error for r in self.runs],
            "mean_periods": [r.mean_period for r in self.runs],
            "fell": [bool(r.fell) for r in self.runs],
        }


def _run_one(hc: HierarchicalController, model: RobotModel, v: float,
             duration: float, warmup: float, reset_seed: int,
             perturb_scale: float, oracle=None) -> EvalRun:
    sim = SimBatch(model, 1)
    sim.set_state(0, reset_robot(model, reset_seed, perturb_scale))
    hc.reset(v)
    dt = hc.config.dt
    ticks = int(round(duration / dt))
    hook = (lambda s: oracle(s, v)) if oracle is not None else None
    fell = False
    for _ in range(ticks):
        hc.control_step(sim, post_step_hook=hook)
        if sim.fallen()[0]:
            fell = True
            break
    trace = hc.trace
    times = trace.column("time") if len(trace) else np.zeros(0)
    meas = times >= warmup - 1e-12
    base_vel = trace.column("base_vel")[meas] if len(trace) else np.zeros(0)
    n_meas = int(meas.sum()) if len(trace) else 0
    if n_meas:
        torques = np.stack([trace.column(f"torque_{i}")[meas] for i in range(8)], axis=1)
        qd = np.stack([trace.column(f"joint_vel_{i}")[meas] for i in range(8)], axis=1)
        p = torques * qd
        power_pos = np.maximum(p, 0.0).sum(axis=1)
        power_abs = np.abs(p).sum(axis=1)
        tracking = float(np.mean(np.abs(v - base_vel)))
        mean_speed = float(np.mean(base_vel))
        mean_period = float(np.mean(2.0 * np.pi / trace.column("B")[meas]))
    else:
        power_pos = power_abs = np.zeros(0)
        tracking = mean_speed = mean_period = 0.0
    return EvalRun(
        v_cmd=v, tracking_error=tracking, mean_speed=mean_speed,
        mean_period=mean_period, fell=fell, ticks_measured=n_meas,
        trace=trace, velocity_samples=base_vel,
        power_pos=power_pos, power_abs=power_abs, dt=dt,
    )


def run_tracking_eval(
    checkpoint,
    velocities=DEFAULT_VELOCITIES,
    duration: float = 5.0,
    seed: int = 0,
    warmup: float = 1.0,
    model: RobotModel | None = None,
    oracle=None,
    out_dir=None,
    perturb_scale: float = 0.0,
) -> EvalReport:
    """Constant-command rollouts at each velocity; metrics past the warmup.

    oracle(sim, v_cmd), when given, runs after every physics step before
    measurements are taken (test instrumentation). out_dir, when given,
    receives per-velocity traces, tracking.csv, energy.csv, and
    manifest.json.
    """
    if duration < warmup:
        raise ValueError("duration must be at least the warmup")
    model = model or RobotModel()
    hc, meta = controller_from_checkpoint(checkpoint, model)
    seeds = np.random.SeedSequence(seed).spawn(len(list(velocities)))
    runs = []
    for i, v in enumerate(velocities):
        reset_seed = int(seeds[i].generate_state(1)[0])
        runs.append(
            _run_one(hc, model, float(v), duration, warmup, reset_seed,
                     perturb_scale, oracle)
        )
    report = EvalReport(
        runs=runs, duration=duration, warmup=warmup, seed=seed,
        checkpoint=str(checkpoint), meta=meta,
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        outputs = []
        for r in runs:
            name = f"trace_v{r.v_cmd:.2f}.csv"
            r.trace.save(out / name)
            outputs.append(name)
        (out / "tracking.csv").write_text(report.tracking_csv(), encoding="utf-8")
        (out / "energy.csv").write_text(report.energy_csv(), encoding="utf-8")
        outputs += ["tracking.csv", "energy.csv"]
        manifest = {
            "kind": "eval",
            "checkpoint": str(checkpoint),
            "checkpoint_meta": meta,
            "velocities": [float(v) for v in velocities],
            "duration": duration,
            "warmup": warmup,
            "seed": seed,
            "outputs": outputs,
            "summary": report.summary(),
        }
        with open(out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return report


def eval_command_profile(checkpoint, segments, seed: int = 0,
                         model: RobotModel | None = None,
                         perturb_scale: float = 0.0):
    """Piecewise-constant command profile in one continuous rollout.

    segments is a list of (velocity, seconds) pairs. Returns (trace,
    per-segment stat dicts). Gait switches happen at the first high-level
    tick after each command change, so the trace keeps any oscillator
    discontinuity for inspection.
    """
    model = model or RobotModel()
    hc, _meta = controller_from_checkpoint(checkpoint, model)
    sim = SimBatch(model, 1)
    reset_seed = int(np.random.SeedSequence(seed).generate_state(1)[0])
    sim.set_state(0, reset_robot(model, reset_seed, perturb_scale))
    hc.reset(float(segments[0][0]))
    dt = hc.config.dt
    stats = []
    tick = 0
    fell = False
    for v, seconds in segments:
        hc.set_command(float(v))
        start = tick
        n = int(round(seconds / dt))
        for _ in range(n):
            if fell:
                break
            hc.control_step(sim)
            tick += 1
            if sim.fallen()[0]:
                fell = True
        seg_vel = hc.trace.column("base_vel")[start:tick]
        stats.append(
            {
                "v_cmd": float(v),
                "ticks": tick - start,
                "tracking_error": float(np.mean(np.abs(v - seg_vel))) if tick > start else 0.0,
                "mean_speed": float(np.mean(seg_vel)) if tick > start else 0.0,
                "fell": fell,
            }
        )
    return hc.trace, stats


# ---------------------------------------------------------------------------
# contact analysis


def contact_intervals(flags, dt: float, t0: float = 0.0) -> list:
    """Run-length encode one foot's contact flags into (start, end) spans.

    The flag at tick k covers [k*dt, (k+1)*dt).
    """
    flags = np.asarray(flags, dtype=float) > 0.5
    out = []
    start = None
    for k, f in enumerate(flags):
        if f and start is None:
            start = k
        elif not f and start is not None:
            out.append((t0 + start * dt, t0 + k * dt))
            start = None
    if start is not None:
        out.append((t0 + start * dt, t0 + flags.size * dt))
    return out


def export_contact_plot(trace: Trace) -> str:
    """CSV of run-length-encoded contact intervals, one row per span."""
    contact = trace.contact_matrix()
    lines = [CONTACT_HEADER]
    for leg, name in enumerate(_FOOT_NAMES):
        for start, end in contact_intervals(contact[:, leg], trace.dt):
            lines.append(f"{name},{_fmt(start)},{_fmt(end)}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PairOverlap:
    """How cleanly contact sets decompose into a gait's expected leg pairs."""

    fraction: float
    degenerate: bool
    any_contact_ticks: int


def pair_overlap(contact, gait: GaitKind) -> PairOverlap:
    """Fraction of contact time spent in valid pair combinations.

    A tick counts as valid when its contact set is exactly one expected
    pair, the other, or both (all four feet). A rollout that stands on
    all four feet nearly the whole time scores 1.0 vacuously and is
    flagged degenerate.
    """
    contact = np.asarray(contact, dtype=float) > 0.5
    pair_a, pair_b = GAIT_PAIRS[gait]
    mask_a = np.zeros(4, dtype=bool)
    mask_a[list(pair_a)] = True
    mask_b = np.zeros(4, dtype=bool)
    mask_b[list(pair_b)] = True
    any_c = contact.any(axis=1)
    n_any = int(any_c.sum())
    if n_any == 0:
        return PairOverlap(0.0, False, 0)
    rows = contact[any_c]
    is_a = np.all(rows == mask_a, axis=1)
    is_b = np.all(rows == mask_b, axis=1)
    is_all = rows.all(axis=1)
    valid = is_a | is_b | is_all
    frac = float(valid.mean())
    degenerate = float(is_all.mean()) > 0.9
    return PairOverlap(frac, degenerate, n_any)


def steady_state_overlap(trace: Trace, gait: GaitKind, warmup: float = 1.0) -> PairOverlap:
    """Pair overlap restricted to the post-warmup portion of a trace."""
    times = trace.column("time")
    return pair_overlap(trace.contact_matrix()[times >= warmup - 1e-12], gait)


# ---------------------------------------------------------------------------
# trace re-exports (CLI `export`)


def export_tracking_table(trace: Trace) -> str:
    lines = ["time,command,base_vel,abs_error"]
    t = trace.column("time")
    cmd = trace.column("command")
    vel = trace.column("base_vel")
    for k in range(len(trace)):
        lines.append(
            ",".join([_fmt(t[k]), _fmt(cmd[k]), _fmt(vel[k]), _fmt(abs(cmd[k] - vel[k]))])
        )
    return "\n".join(lines) + "\n"


def export_energy_table(trace: Trace) -> str:
    lines = ["time,power_pos,power_abs,energy_pos_cum,energy_abs_cum"]
    t = trace.column("time")
    torques = np.stack([trace.column(f"torque_{i}") for i in range(8)], axis=1)
    qd = np.stack([trace.column(f"joint_vel_{i}") for i in range(8)], axis=1)
    p = torques * qd
    p_pos = np.maximum(p, 0.0).sum(axis=1)
    p_abs = np.abs(p).sum(axis=1)
    e_pos = np.cumsum(p_pos) * trace.dt
    e_abs = np.cumsum(p_abs) * trace.dt
    for k in range(len(trace)):
        lines.append(
            ",".join([_fmt(t[k]), _fmt(p_pos[k]), _fmt(p_abs[k]), _fmt(e_pos[k]), _fmt(e_abs[k])])
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# suites


@dataclass
class SuiteResult:
    out_dir: Path
    runs: dict
    tables: dict


def _suite_manifest(out: Path, kind: str, tc: TrainConfig, entries: dict) -> None:
    manifest = {
        "kind": f"suite:{kind}",
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in tc.to_dict().items()},
        "config_hash": config_hash(tc.to_dict()),
        "seed": tc.seed,
        **entries,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cached_train(tc: TrainConfig, root, name: str, progress=None):
    """Train under tc unless a finished run with the same config exists.

    The run directory is root/name_<config-hash>, so a config change can
    never silently reuse stale artifacts. Returns (out_dir, manifest).
    """
    digest = config_hash(tc.to_dict())
    out = Path(root) / f"{name}_{digest}"
    manifest_path = out / "manifest.json"
    if manifest_path.exists():
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
        if manifest.get("config_hash") == digest and not manifest.get("fault"):
            return out, manifest
    result = train(tc, out, progress=progress)
    with open(result.manifest_path, encoding="utf-8") as fh:
        return out, json.load(fh)


def run_gait_suite(kind: str, tc: TrainConfig, out_dir,
                   velocities=DEFAULT_VELOCITIES, duration: float = 5.0,
                   eval_seed: int = 0, progress=None) -> SuiteResult:
    """Train-and-evaluate suites: 'single' (trot, pace, bound), 'multi', 'baseline'.

    Each sub-run trains under tc (mode and gait overridden as needed),
    evaluates the final checkpoint over the velocity list, and the suite
    writes comparison tables across runs. Training goes through
    cached_train, so re-running a suite with an unchanged config only
    repeats the cheap evaluation half.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = {}
    tables = {}

    if kind == "single":
        names = [("trot", GaitKind.TROT), ("pace", GaitKind.PACE), ("bound", GaitKind.BOUND)]
        for name, _g in names:
            sub = replace(tc, mode="single_gait", gait=name)
            run_dir, _manifest = cached_train(sub, out, name, progress=progress)
            report = run_tracking_eval(
                run_dir / "ckpt_final.bin", velocities, duration, eval_seed,
                out_dir=run_dir / "eval",
            )
            runs[name] = (run_dir, report)
        lines = ["gait,velocity,tracking_error,fell"]
        for name, (_res, rep) in runs.items():
            for r in rep.runs:
                lines.append(
                    f"{name},{_fmt(r.v_cmd)},{_fmt(r.tracking_error)},{_fmt(1.0 if r.fell else 0.0)}"
                )
        path = out / "tracking_comparison.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        tables["tracking_comparison"] = path
        e_lines = ["gait," + ENERGY_HEADER]
        for name, (_res, rep) in runs.items():
            for row in rep.energy_csv().splitlines()[1:]:
                e_lines.append(f"{name},{row}")
        e_path = out / "energy_comparison.csv"
        e_path.write_text("\n".join(e_lines) + "\n", encoding="utf-8")
        tables["energy_comparison"] = e_path
    elif kind in ("multi", "baseline"):
        mode = "multi_gait" if kind == "multi" else "baseline"
        sub = replace(tc, mode=mode)
        run_dir, _manifest = cached_train(sub, out, kind, progress=progress)
        ckpt = run_dir / "ckpt_final.bin"
        report = run_tracking_eval(
            ckpt, velocities, duration, eval_seed, out_dir=run_dir / "eval"
        )
        runs[kind] = (run_dir, report)
        if kind == "multi":
            lines = ["velocity,mean_period,tracking_error"]
            for r in report.runs:
                lines.append(f"{_fmt(r.v_cmd)},{_fmt(r.mean_period)},{_fmt(r.tracking_error)}")
            path = out / "period_vs_velocity.csv"
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            tables["period_vs_velocity"] = path
        # step-command profile crossing both gait-schedule boundaries
        segments = [(0.3, 3.0), (0.8, 3.0), (1.3, 3.0)]
        trace, stats = eval_command_profile(ckpt, segments, seed=eval_seed)
        trace.save(run_dir / "profile_trace.csv")
        lines = ["segment,v_cmd,ticks,tracking_error,mean_speed,fell"]
        for i, s in enumerate(stats):
            lines.append(
                f"{i},{_fmt(s['v_cmd'])},{_fmt(s['ticks'])},{_fmt(s['tracking_error'])},"
                f"{_fmt(s['mean_speed'])},{_fmt(1.0 if s['fell'] else 0.0)}"
            )
        path = out / "profile_stats.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        tables["profile_stats"] = path
    else:
        raise ValueError(f"unknown suite kind {kind!r}")

    _suite_manifest(out, kind, tc, {
        "runs": sorted(runs),
        "tables": {k: p.name for k, p in tables.items()},
    })
    return SuiteResult(out, runs, tables)


def run_curriculum_comparison(tc: TrainConfig, out_dir, seeds=(0, 1, 2),
                              k_values=(1.0, 0.3), duration: float = 5.0,
                              eval_seed: int = 0, warmup: float = 1.0,
                              progress=None) -> Path:
    """Train with and without the cost curriculum and tabulate stopping.

    "Stopped" flags runs whose mean forward speed stays below a quarter of
    the command; the table itself is the deliverable, whatever the counts
    come out to. Returns the table path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    v_eval = 0.5 * (tc.v_min + tc.v_max)
    lines = ["k_c0,seed,tracking_error,mean_speed,stopped,fell"]
    for k0 in k_values:
        for seed in seeds:
            sub = replace(tc, k_c0=float(k0), seed=int(seed))
            run_dir, _manifest = cached_train(sub, out, f"k{k0}_s{seed}", progress=progress)
            report = run_tracking_eval(
                run_dir / "ckpt_final.bin", [v_eval], duration, eval_seed,
                warmup=warmup, out_dir=run_dir / "eval",
            )
            r = report.runs[0]
            stopped = r.mean_speed < 0.25 * v_eval
            lines.append(
                f"{_fmt(k0)},{_fmt(seed)},{_fmt(r.tracking_error)},"
                f"{_fmt(r.mean_speed)},{_fmt(1.0 if stopped else 0.0)},"
                f"{_fmt(1.0 if r.fell else 0.0)}"
            )
    path = out / "curriculum_comparison.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _suite_manifest(out, "curriculum", tc, {
        "seeds": list(seeds), "k_values": [float(k) for k in k_values],
        "tables": {"curriculum_comparison": path.name},
    })
    return path


def run_gait_comparison(tc: TrainConfig, out_dir, seeds=(0, 1, 2),
                        gaits=("trot", "bound"), duration: float = 5.0,
                        eval_seed: int = 0, warmup: float = 1.0,
                        progress=None) -> Path:
    """Train each gait under each seed at one command and tabulate tracking.

    The command velocity is the midpoint of tc's range (use v_min == v_max
    to fix it). gait_comparison.csv holds one row per (gait, seed);
    gait_verdicts.csv compares the second listed gait against the first
    per seed, flagging the seeds where it tracked strictly better. Returns
    the verdicts path.
    """
    if len(gaits) != 2:
        raise ValueError("gait comparison needs exactly two gaits")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    v_eval = 0.5 * (tc.v_min + tc.v_max)
    errors = {}
    lines = ["gait,seed,tracking_error,mean_speed,fell"]
    for gait in gaits:
        for seed in seeds:
            sub = replace(tc, mode="single_gait", gait=gait, seed=int(seed))
            run_dir, _manifest = cached_train(sub, out, f"{gait}_s{seed}", progress=progress)
            report = run_tracking_eval(
                run_dir / "ckpt_final.bin", [v_eval], duration, eval_seed,
                warmup=warmup, out_dir=run_dir / "eval",
            )
            r = report.runs[0]
            errors[(gait, seed)] = r.tracking_error
            lines.append(
                f"{gait},{_fmt(seed)},{_fmt(r.tracking_error)},"
                f"{_fmt(r.mean_speed)},{_fmt(1.0 if r.fell else 0.0)}"
            )
    table = out / "gait_comparison.csv"
    table.write_text("\n".join(lines) + "\n", encoding="utf-8")
    first, second = gaits
    v_lines = [f"seed,{first}_error,{second}_error,{second}_lower"]
    for seed in seeds:
        better = errors[(second, seed)] < errors[(first, seed)]
        v_lines.append(
            f"{_fmt(seed)},{_fmt(errors[(first, seed)])},"
            f"{_fmt(errors[(second, seed)])},{_fmt(1.0 if better else 0.0)}"
        )
    verdicts = out / "gait_verdicts.csv"
    verdicts.write_text("\n".join(v_lines) + "\n", encoding="utf-8")
    _suite_manifest(out, "gait_comparison", tc, {
        "seeds": list(seeds), "gaits": list(gaits),
        "tables": {"gait_comparison": table.name, "gait_verdicts": verdicts.name},
    })
    return verdicts
