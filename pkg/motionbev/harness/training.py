"""
Training loop.

Each iteration draws ``batch_size`` (current, previous) frame pairs from the
counter-based stream (seed, 1, iteration), back-propagates the mean BCE and
takes one Adam step. Because batch selection depends only on the iteration
number, a run resumed from a checkpoint replays the uninterrupted run
exactly.
"""

from __future__ import annotations

import json
import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .. import ops
from ..boxes import GtMask
from ..checkpoint import load_checkpoint, load_into, save_checkpoint
from ..exceptions import CheckpointError, DatasetError, OutputError, TrainingDivergedError
from ..losses import bce_loss
from ..optim import Adam
from ..synthgen.dataset import frame_pairs, read_dataset
from ..synthgen.scene import SceneFrame
from ..tensor import make_rng
from .config import ExperimentConfig
from .model import MotionSegModel, build_model, frame_target

_STREAM_BATCH = 1

ProgressFn = Callable[[int, float], None]


@dataclass
class TrainState:
    model: MotionSegModel
    optimizer: Adam
    iteration: int = 0
    losses: list[float] = field(default_factory=list)


def new_train_state(config: ExperimentConfig) -> TrainState:
    model = build_model(config)
    optimizer = Adam(model.parameters(), lr=config.lr, weight_decay=config.weight_decay)
    return TrainState(model=model, optimizer=optimizer)


def train_state_records(state: TrainState) -> dict[str, np.ndarray]:
    records = {f"param/{name}": p.data for name, p in state.model.named_parameters()}
    records.update(state.optimizer.state_records())
    records["state/iteration"] = np.array([float(state.iteration)])
    records["state/losses"] = np.asarray(state.losses, dtype=np.float64)
    return records


def save_train_state(path: str | Path, state: TrainState) -> Path:
    return save_checkpoint(path, train_state_records(state))


def load_train_state(path: str | Path, config: ExperimentConfig) -> TrainState:
    """Rebuild the model for ``config`` and restore parameters, moments and counters."""
    records = load_checkpoint(path)
    state = new_train_state(config)
    load_into(state.model, records, path=str(path))
    state.optimizer.load_state_records(records, path=str(path))
    if "state/iteration" not in records:
        raise CheckpointError(path=str(path), record="state/iteration", message="iteration counter missing")
    state.iteration = int(records["state/iteration"].reshape(-1)[0])
    state.losses = [float(v) for v in records.get("state/losses", np.zeros(0)).reshape(-1)]
    return state


def sample_batch(config: ExperimentConfig, iteration: int, num_pairs: int) -> np.ndarray:
    rng = make_rng(config.seed, _STREAM_BATCH, iteration)
    return rng.choice(num_pairs, size=config.batch_size, replace=num_pairs < config.batch_size)


def _dump_batch(
    config: ExperimentConfig,
    iteration: int,
    keys: Sequence[str],
    losses: Sequence[float],
) -> str:
    path = Path(config.output_dir) / f"diverged_{iteration:06d}.json"
    payload = {
        "iteration": iteration,
        "frames": list(keys),
        "losses": [None if not math.isfinite(v) else v for v in losses],
        "config": config.to_dict(),
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(path=str(path), message=f"cannot write divergence dump: {e}") from e
    return str(path)


def train_step(
    state: TrainState,
    config: ExperimentConfig,
    pairs: Sequence[tuple[SceneFrame, SceneFrame]],
    targets: dict[str, GtMask],
) -> float:
    """One optimizer step on the batch for ``state.iteration``; returns the mean loss."""
    batch = sample_batch(config, state.iteration, len(pairs))
    state.optimizer.zero_grad()
    scale = 1.0 / len(batch)
    losses = []
    for b in batch:
        frame, prev = pairs[int(b)]
        out = state.model(frame, prev)
        loss = bce_loss(out.probs, targets[frame.key])
        losses.append(loss.item())
        if math.isfinite(losses[-1]):
            ops.scale(loss, scale).backward()

    mean = float(np.mean(losses))
    if not math.isfinite(mean):
        keys = [f"{pairs[int(b)][0].key}<-{pairs[int(b)][1].key}" for b in batch]
        dump = _dump_batch(config, state.iteration, keys, losses)
        raise TrainingDivergedError(iteration=state.iteration, dump_path=dump)
    state.optimizer.step()
    state.losses.append(mean)
    state.iteration += 1
    return mean


def write_loss_curve(losses: Sequence[float], path_stem: str | Path) -> tuple[Path, Path]:
    """``<stem>.tsv`` (iteration, loss) and ``<stem>.json``."""
    stem = Path(path_stem)
    tsv = stem.with_name(stem.name + ".tsv")
    js = stem.with_name(stem.name + ".json")
    frame = pd.DataFrame({"iteration": np.arange(1, len(losses) + 1), "loss": list(losses)})
    try:
        stem.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(tsv, sep="\t", index=False, float_format="%.17g")
        js.write_text(json.dumps({"loss": list(losses)}) + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(path=str(stem), message=f"cannot write loss curve: {e}") from e
    return tsv, js


def train(
    config: ExperimentConfig,
    frames: Sequence[SceneFrame] | None = None,
    resume: str | Path | None = None,
    progress: ProgressFn | None = None,
) -> TrainState:
    """
    Train for ``config.iterations`` steps and return the final state.

    Frames are read from ``config.dataset`` unless given. With ``resume`` the
    run continues from that checkpoint. Checkpoints go to ``config.checkpoint``
    every ``checkpoint_every`` iterations and at the end; the loss curve goes
    to ``<output_dir>/loss_curve.{tsv,json}``.
    """
    if frames is None:
        frames = read_dataset(config.dataset, workers=config.loader_workers)
    pairs = frame_pairs(frames)
    if not pairs:
        raise DatasetError(path=config.dataset, message="dataset holds no consecutive frame pairs")
    targets = {frame.key: frame_target(frame, config) for frame, _ in pairs}

    if resume is not None:
        state = load_train_state(resume, config)
    else:
        state = new_train_state(config)
        if Path(config.checkpoint).exists():
            warnings.warn(
                f"Overwriting existing checkpoint {config.checkpoint}.",
                RuntimeWarning,
                stacklevel=2,
            )

    while state.iteration < config.iterations:
        loss = train_step(state, config, pairs, targets)
        if progress is not None:
            progress(state.iteration, loss)
        if config.checkpoint_every and state.iteration % config.checkpoint_every == 0:
            save_train_state(config.checkpoint, state)

    save_train_state(config.checkpoint, state)
    write_loss_curve(state.losses, Path(config.output_dir) / "loss_curve")
    return state
