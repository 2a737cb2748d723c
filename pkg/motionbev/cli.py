"""
Command-line entry point: ``motionbev <verb> [flags]``.

Verbs: gen, train, eval, render, ablate, gradcheck. Every ExperimentConfig
key is also a flag (``--grid-nx``, ``--fusion-strategy``, ...); flags override
``--config`` which overrides the defaults.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from dataclasses import fields
from typing import Any

from .exceptions import MotionBevError, ValidationError
from .harness.ablation import ablation_matrix
from .harness.config import ExperimentConfig, resolve_config
from .harness.evaluation import evaluate
from .harness.probe import PROBE_TOLERANCE, pipeline_gradcheck
from .harness.render import render_predictions
from .harness.training import train
from .synthgen.dataset import dataset_summary, generate_dataset, read_dataset, write_dataset
from .synthgen.scene import SceneSpec


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="JSON experiment config file")
    group = parser.add_argument_group("experiment config overrides")
    for f in fields(ExperimentConfig):
        flag = "--" + f.name.replace("_", "-")
        if isinstance(f.default, bool):
            group.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        elif f.name == "backbone_channels":
            group.add_argument(flag, dest=f.name, type=int, nargs=4, default=None)
        elif f.name == "modalities":
            group.add_argument(flag, dest=f.name, default=None, help='e.g. "C+R+L" or "camera,lidar"')
        else:
            group.add_argument(flag, dest=f.name, type=type(f.default), default=None)


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {f.name: getattr(args, f.name) for f in fields(ExperimentConfig)}
    return resolve_config(args.config, overrides)


def _print_every(total: int) -> int:
    return max(1, total // 20)


def _cmd_gen(args: argparse.Namespace) -> int:
    spec = SceneSpec(
        num_cams=args.num_cams,
        image_size=(args.image_height, args.image_width),
        num_boxes=args.num_boxes,
    )
    frames = generate_dataset(
        args.seed,
        args.scenes,
        args.frames_per_scene,
        adverse_fraction=args.adverse_fraction,
        base_spec=spec,
    )
    root = write_dataset(args.out, frames)
    summary = dataset_summary(frames)
    print(
        f"wrote {int(summary['frames'])} frames ({int(summary['scenes'])} scenes, "
        f"{int(summary['boxes'])} boxes, moving fraction {summary['moving_fraction']:.2f}) to {root}"
    )
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    every = _print_every(config.iterations)

    def progress(iteration: int, loss: float) -> None:
        if iteration % every == 0 or iteration == config.iterations:
            print(f"iter {iteration}/{config.iterations} loss {loss:.6f}", flush=True)

    state = train(config, resume=args.resume, progress=progress)
    print(f"checkpoint written to {config.checkpoint} after {state.iteration} iterations")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    report = evaluate(
        config,
        conditions=args.condition,
        output=args.output,
    )
    print(report.to_frame().to_string(index=False))
    return 0


def _cmd_render(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    paths = render_predictions(config, args.out_dir, limit=args.limit, scale=args.scale)
    print(f"wrote {len(paths)} images to {args.out_dir}")
    return 0


def parse_axes(specs: Sequence[str] | None) -> dict[str, list[str]]:
    """``["modalities=C,C+R", "seed=0,1"]`` -> {"modalities": ["C", "C+R"], "seed": ["0", "1"]}."""
    axes: dict[str, list[str]] = {}
    for spec in specs or []:
        name, sep, values = spec.partition("=")
        if not sep or not values.strip():
            raise ValidationError(f"Ablation axis must look like name=v1,v2, got '{spec}'.")
        axes[name.strip()] = [v.strip() for v in values.split(",") if v.strip()]
    for name in ("sweep_count", "seed"):
        if name in axes:
            try:
                axes[name] = [int(v) for v in axes[name]]
            except ValueError as e:
                raise ValidationError(f"Ablation axis '{name}' takes integers.") from e
    return axes


def _cmd_ablate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    axes = parse_axes(args.axis)
    train_frames = read_dataset(config.dataset, workers=config.loader_workers)
    eval_frames = read_dataset(config.eval_dataset, workers=config.loader_workers)
    table = ablation_matrix(
        config,
        axes,
        output=args.output,
        train_frames=train_frames,
        eval_frames=eval_frames,
        progress=lambda msg: print(msg, flush=True),
    )
    print(table.to_string(index=False, na_rep="n/a"))
    return 0


def _cmd_gradcheck(args: argparse.Namespace) -> int:
    failed = 0
    for seed in range(args.seed, args.seed + args.seeds):
        report = pipeline_gradcheck(seed, probes=args.probes)
        ok = report.passed(args.tolerance)
        failed += not ok
        print(
            f"seed {seed}: max relative error {report.max_relative_error:.3e} "
            f"over {report.checked} probes {'ok' if ok else 'FAILED'}"
        )
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motionbev", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic dataset")
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--scenes", type=int, default=10)
    gen.add_argument("--frames-per-scene", type=int, default=5)
    gen.add_argument("--adverse-fraction", type=float, default=0.3)
    gen.add_argument("--num-cams", type=int, default=2)
    gen.add_argument("--num-boxes", type=int, default=6)
    gen.add_argument("--image-height", type=int, default=64)
    gen.add_argument("--image-width", type=int, default=112)
    gen.set_defaults(handler=_cmd_gen)

    tr = sub.add_parser("train", help="train a model")
    _add_config_flags(tr)
    tr.add_argument("--resume", default=None, help="checkpoint to continue from")
    tr.set_defaults(handler=_cmd_train)

    ev = sub.add_parser("eval", help="score a checkpoint")
    _add_config_flags(ev)
    ev.add_argument("--condition", action="append", default=None)
    ev.add_argument("--output", default=None, help="metrics path stem")
    ev.set_defaults(handler=_cmd_eval)

    rd = sub.add_parser("render", help="write BEV prediction images")
    _add_config_flags(rd)
    rd.add_argument("--out-dir", required=True)
    rd.add_argument("--limit", type=int, default=8)
    rd.add_argument("--scale", type=int, default=4)
    rd.set_defaults(handler=_cmd_render)

    ab = sub.add_parser("ablate", help="train/evaluate an ablation grid")
    _add_config_flags(ab)
    ab.add_argument("--axis", action="append", help="name=v1,v2 (repeatable)")
    ab.add_argument("--output", default="runs/ablation", help="table path stem")
    ab.set_defaults(handler=_cmd_ablate)

    gc = sub.add_parser("gradcheck", help="end-to-end finite-difference probe")
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--seeds", type=int, default=3)
    gc.add_argument("--probes", type=int, default=20)
    gc.add_argument("--tolerance", type=float, default=PROBE_TOLERANCE)
    gc.set_defaults(handler=_cmd_gradcheck)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args: Any = build_parser().parse_args(argv)
    try:
        return int(args.handler(args))
    except MotionBevError as e:
        print(f"motionbev: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
