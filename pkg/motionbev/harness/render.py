"""
Top-down PNG rendering of predictions against ground truth.

Image column = grid index i (X to the right), image row = nz - 1 - k so +Z
(forward) points up. GT cells are green, the predicted probability blends
red over them, and the ego cell is marked white.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from ..boxes import GtMask
from ..exceptions import OutputError, ShapeError, ValidationError
from ..head import SegmentationOutput
from ..synthgen.dataset import frame_pairs, read_dataset
from ..tensor import Tensor
from .config import ExperimentConfig
from .evaluation import load_model, predict
from .model import frame_target

BACKGROUND = np.array([24.0, 24.0, 28.0])
GT_COLOR = np.array([40.0, 170.0, 60.0])
PRED_COLOR = np.array([230.0, 40.0, 40.0])
EGO_COLOR = np.array([255.0, 255.0, 255.0])


def _as_map(value: SegmentationOutput | GtMask | Tensor | np.ndarray) -> np.ndarray:
    if isinstance(value, SegmentationOutput):
        value = value.probs
    if isinstance(value, GtMask):
        value = value.mask
    arr = value.data if isinstance(value, Tensor) else np.asarray(value, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[0] == 1:
        arr = arr[0]
    return arr


def bev_image(
    pred: SegmentationOutput | Tensor | np.ndarray,
    gt: GtMask | np.ndarray,
    scale: int = 4,
) -> np.ndarray:
    """[nz * scale, nx * scale, 3] uint8 RGB array."""
    if isinstance(scale, bool) or not isinstance(scale, int) or scale < 1:
        raise ValidationError(f"scale must be a positive integer, got {scale!r}.")
    probs = np.clip(_as_map(pred), 0.0, 1.0)
    truth = _as_map(gt) > 0.5
    if probs.ndim != 2 or probs.shape != truth.shape:
        raise ShapeError(
            op="render_bev", expected="matching [nx, nz] maps", got=f"{probs.shape} and {truth.shape}"
        )
    nx, nz = probs.shape

    rgb = np.broadcast_to(BACKGROUND, (nx, nz, 3)).copy()
    rgb[truth] = GT_COLOR
    alpha = probs[..., None]
    rgb = (1.0 - alpha) * rgb + alpha * PRED_COLOR
    rgb[nx // 2, nz // 2] = EGO_COLOR

    # (i, k) -> (row, col) = (nz - 1 - k, i)
    image = np.transpose(rgb, (1, 0, 2))[::-1]
    image = np.repeat(np.repeat(image, scale, axis=0), scale, axis=1)
    return np.round(image).astype(np.uint8)


def render_bev(
    pred: SegmentationOutput | Tensor | np.ndarray,
    gt: GtMask | np.ndarray,
    out_path: str | Path,
    scale: int = 4,
) -> Path:
    """Write the rendering as a lossless PNG; identical inputs give identical bytes."""
    path = Path(out_path)
    image = Image.fromarray(bev_image(pred, gt, scale))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        image.save(path, format="PNG")
    except OSError as e:
        raise OutputError(path=str(path), message=f"cannot write image: {e}") from e
    return path


def render_predictions(
    config: ExperimentConfig,
    out_dir: str | Path,
    checkpoint: str | Path | None = None,
    dataset: str | Path | None = None,
    limit: int | None = None,
    scale: int = 4,
) -> list[Path]:
    """One ``<frame key>.png`` per evaluated (current, previous) pair."""
    model = load_model(config, checkpoint)
    frames = read_dataset(dataset or config.eval_dataset, workers=config.loader_workers)
    pairs = frame_pairs(frames)[:limit] if limit is not None else frame_pairs(frames)
    written = []
    for frame, prev in pairs:
        out = predict(model, frame, prev)
        target = frame_target(frame, config)
        written.append(render_bev(out, target, Path(out_dir) / f"{frame.key}.png", scale))
    return written
