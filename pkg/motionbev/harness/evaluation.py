from __future__ import annotations

from collections.abc import Callable, Iterable, Iterator, Sequence
from pathlib import Path

from ..boxes import GtMask
from ..checkpoint import load_checkpoint, load_into
from ..exceptions import DatasetError
from ..head import SegmentationOutput
from ..metrics import MetricsReport, score_predictions
from ..synthgen.dataset import frame_pairs, read_dataset
from ..synthgen.scene import SceneFrame
from ..tensor import no_grad
from ..validators import validate_condition
from .config import ExperimentConfig
from .model import MotionSegModel, build_model, frame_target

ProgressFn = Callable[[int, int], None]


def load_model(config: ExperimentConfig, checkpoint: str | Path | None = None) -> MotionSegModel:
    """Model for ``config`` with the ``param/*`` records of ``checkpoint`` loaded."""
    path = Path(checkpoint or config.checkpoint)
    model = build_model(config)
    load_into(model, load_checkpoint(path), path=str(path))
    return model


def predict(model: MotionSegModel, frame: SceneFrame, prev: SceneFrame) -> SegmentationOutput:
    with no_grad():
        return model(frame, prev)


def evaluate(
    config: ExperimentConfig,
    checkpoint: str | Path | None = None,
    dataset: str | Path | None = None,
    conditions: Iterable[str] | None = None,
    output: str | Path | None = None,
    frames: Sequence[SceneFrame] | None = None,
    progress: ProgressFn | None = None,
) -> MetricsReport:
    """
    Score a trained checkpoint on every (current, previous) pair of the
    evaluation set and write ``<output>.tsv`` / ``<output>.json``
    (default ``<output_dir>/metrics``).

    ``conditions`` restricts scoring to frames of those driving conditions.
    """
    model = load_model(config, checkpoint)
    if frames is None:
        source = dataset or config.eval_dataset
        frames = read_dataset(source, workers=config.loader_workers)
    pairs = frame_pairs(frames)
    if conditions is not None:
        wanted = {validate_condition(c) for c in conditions}
        pairs = [(f, p) for f, p in pairs if f.condition in wanted]
    if not pairs:
        raise DatasetError(
            path=str(dataset or config.eval_dataset), message="no frame pairs to evaluate"
        )

    def scored() -> Iterator[tuple[SegmentationOutput, GtMask, str]]:
        for n, (frame, prev) in enumerate(pairs, start=1):
            out = predict(model, frame, prev)
            if progress is not None:
                progress(n, len(pairs))
            yield out, frame_target(frame, config), frame.condition

    report = score_predictions(scored(), threshold=config.threshold)
    report.write(output if output is not None else Path(config.output_dir) / "metrics")
    return report
