"""Command-line entry points: train, eval, suite, export."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench
from .controller import Trace
from .ppo import TrainConfig, TrainingFault, train

_MODE_CHOICES = ("single:trot", "single:pace", "single:bound", "multi", "baseline")


def _mode_fields(mode: str) -> dict:
    if mode.startswith("single:"):
        return {"mode": "single_gait", "gait": mode.split(":", 1)[1]}
    if mode == "multi":
        return {"mode": "multi_gait"}
    if mode == "baseline":
        return {"mode": "baseline"}
    raise ValueError(f"unknown mode {mode!r}")


def _train_config(args) -> TrainConfig:
    base = TrainConfig.from_file(args.config).to_dict() if args.config else {}
    base.update(_mode_fields(args.mode))
    if args.seed is not None:
        base["seed"] = args.seed
    if args.iterations is not None:
        base["iterations"] = args.iterations
    return TrainConfig.from_dict(base)


def _cmd_train(args) -> int:
    tc = _train_config(args)
    def progress(stats):
        print(
            f"iter {stats['iteration']:4d}  reward {stats['mean_reward']:9.2f}  "
            f"episode {stats['mean_episode_ticks']:6.1f}  "
            f"kl {stats['kl']:.4f}  k_c {stats['k_c']:.4f}",
            flush=True,
        )
    try:
        result = train(tc, args.out, progress=progress)
    except TrainingFault as exc:
        print(f"training fault: {exc}", file=sys.stderr)
        return 1
    print(f"done: {result.manifest_path}")
    return 0


def _cmd_eval(args) -> int:
    velocities = [float(v) for v in args.velocities.split(",")] if args.velocities \
        else list(bench.DEFAULT_VELOCITIES)
    report = bench.run_tracking_eval(
        args.checkpoint,
        velocities=velocities,
        duration=args.duration,
        seed=args.seed,
        warmup=args.warmup,
        out_dir=args.out,
    )
    for r in report.runs:
        status = "FELL" if r.fell else "ok"
        print(
            f"v={r.v_cmd:4.2f}  tracking={r.tracking_error:7.4f}  "
            f"speed={r.mean_speed:7.4f}  period={r.mean_period:6.4f}  {status}"
        )
    if args.out:
        print(f"wrote {Path(args.out) / 'manifest.json'}")
    return 0


def _cmd_suite(args) -> int:
    tc = _train_config(args) if args.mode != "curriculum" else (
        TrainConfig.from_file(args.config) if args.config else TrainConfig()
    )
    if args.mode == "curriculum":
        seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else (0, 1, 2)
        path = bench.run_curriculum_comparison(tc, args.out, seeds=seeds)
        print(f"wrote {path}")
        return 0
    kind = {"single:trot": "single", "single:pace": "single",
            "single:bound": "single", "multi": "multi",
            "baseline": "baseline"}[args.mode]
    result = bench.run_gait_suite(kind, tc, args.out)
    for name, p in result.tables.items():
        print(f"wrote {p}")
    return 0


def _cmd_export(args) -> int:
    trace = Trace.load(args.trace)
    if args.kind == "contact":
        text = bench.export_contact_plot(trace)
    elif args.kind == "tracking":
        text = bench.export_tracking_table(trace)
    else:
        text = bench.export_energy_table(trace)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadgait",
        description="Train and evaluate oscillator-driven quadruped gait policies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run PPO training")
    p_train.add_argument("--mode", choices=_MODE_CHOICES, default="single:trot")
    p_train.add_argument("--config", help="flat key=value config file")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--iterations", type=int, default=None)
    p_train.add_argument("--out", default=None, help="output directory")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--velocities", help="comma-separated m/s list")
    p_eval.add_argument("--duration", type=float, default=5.0)
    p_eval.add_argument("--warmup", type=float, default=1.0)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--out", default=None)
    p_eval.set_defaults(func=_cmd_eval)

    p_suite = sub.add_parser("suite", help="train-and-compare suites")
    p_suite.add_argument(
        "--mode", choices=_MODE_CHOICES + ("curriculum",), default="single:trot"
    )
    p_suite.add_argument("--config", help="flat key=value config file")
    p_suite.add_argument("--seed", type=int, default=None)
    p_suite.add_argument("--iterations", type=int, default=None)
    p_suite.add_argument("--seeds", help="comma-separated seeds (curriculum)")
    p_suite.add_argument("--out", required=True)
    p_suite.set_defaults(func=_cmd_suite)

    p_export = sub.add_parser("export", help="re-derive tables from a trace")
    p_export.add_argument("--trace", required=True)
    p_export.add_argument("--kind", choices=("contact", "tracking", "energy"),
                          required=True)
    p_export.add_argument("--out", default=None)
    p_export.set_defaults(func=_cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
