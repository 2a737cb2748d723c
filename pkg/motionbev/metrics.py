"""
IoU / precision scoring of BEV moving masks.

Dataset numbers are micro-averaged: TP/FP/FN are pooled over frames before
dividing. Per-frame IoU and precision are kept as well and reported as
macro averages. Ratios with a zero denominator are NaN ("n/a" in tables).
"""

from __future__ import annotations

import json
import math
import warnings
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .boxes import GtMask
from .exceptions import OutputError, ShapeError
from .head import SegmentationOutput
from .tensor import Tensor
from .validators import validate_condition, validate_threshold

DISTANCE_BINS: tuple[tuple[float, float], ...] = ((0.0, 20.0), (20.0, 35.0), (35.0, 50.0))
DEFAULT_THRESHOLD = 0.5


def bin_label(lo: float, hi: float) -> str:
    return f"{lo:g}-{hi:g}m"


def _ratio(num: int, den: int) -> float:
    return num / den if den > 0 else math.nan


@dataclass(frozen=True)
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: Counts) -> Counts:
        return Counts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @property
    def iou(self) -> float:
        return _ratio(self.tp, self.tp + self.fp + self.fn)

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)


def _count(pred: np.ndarray, gt: np.ndarray, region: np.ndarray | None = None) -> Counts:
    if region is not None:
        pred = pred & region
        gt = gt & region
    return Counts(
        tp=int(np.count_nonzero(pred & gt)),
        fp=int(np.count_nonzero(pred & ~gt)),
        fn=int(np.count_nonzero(~pred & gt)),
    )


def _probs_array(pred: SegmentationOutput | Tensor | np.ndarray) -> np.ndarray:
    if isinstance(pred, SegmentationOutput):
        pred = pred.probs
    arr = pred.data if isinstance(pred, Tensor) else np.asarray(pred, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[0] == 1:
        arr = arr[0]
    return arr


@dataclass(frozen=True)
class MetricsReport:
    iou: float
    precision: float
    iou_by_distance: dict[str, float]
    precision_by_distance: dict[str, float]
    iou_by_condition: dict[str, float]
    precision_by_condition: dict[str, float]
    macro_iou: float
    macro_precision: float
    frames: int
    tp: int
    fp: int
    fn: int

    def to_dict(self) -> dict[str, float | int]:
        """Flat key -> value mapping (NaN kept as float NaN)."""
        out: dict[str, float | int] = {
            "iou": self.iou,
            "precision": self.precision,
            "macro_iou": self.macro_iou,
            "macro_precision": self.macro_precision,
        }
        for label, value in self.iou_by_distance.items():
            out[f"iou_{label}"] = value
        for label, value in self.precision_by_distance.items():
            out[f"precision_{label}"] = value
        for cond, value in self.iou_by_condition.items():
            out[f"iou_{cond}"] = value
        for cond, value in self.precision_by_condition.items():
            out[f"precision_{cond}"] = value
        out.update(frames=self.frames, tp=self.tp, fp=self.fp, fn=self.fn)
        return out

    def to_frame(self) -> pd.DataFrame:
        """Two-column (metric, value) table with NaN rendered as "n/a"."""
        rows = [(k, _format_value(v)) for k, v in self.to_dict().items()]
        return pd.DataFrame(rows, columns=["metric", "value"])

    def to_json(self) -> str:
        data = {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in self.to_dict().items()}
        return json.dumps(data, indent=2, sort_keys=False)

    def write(self, path_stem: str | Path) -> tuple[Path, Path]:
        """Write ``<stem>.tsv`` and ``<stem>.json``."""
        stem = Path(path_stem)
        tsv = stem.with_name(stem.name + ".tsv")
        js = stem.with_name(stem.name + ".json")
        try:
            stem.parent.mkdir(parents=True, exist_ok=True)
            self.to_frame().to_csv(tsv, sep="\t", index=False)
            js.write_text(self.to_json() + "\n", encoding="utf-8")
        except OSError as e:
            raise OutputError(path=str(stem), message=f"cannot write metrics: {e}") from e
        return tsv, js


def _format_value(value: float | int) -> str:
    if isinstance(value, float):
        return "n/a" if math.isnan(value) else repr(value)
    return str(value)


@dataclass
class MetricsAccumulator:
    """Mergeable TP/FP/FN counters: overall, per distance bin, per condition."""

    threshold: float = DEFAULT_THRESHOLD
    bins: tuple[tuple[float, float], ...] = DISTANCE_BINS
    overall: Counts = field(default_factory=Counts)
    by_distance: dict[str, Counts] = field(default_factory=dict)
    by_condition: dict[str, Counts] = field(default_factory=dict)
    frame_scores: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.threshold = validate_threshold("threshold", self.threshold, 0.0, 1.0, inclusive=False)
        for lo, hi in self.bins:
            self.by_distance.setdefault(bin_label(lo, hi), Counts())

    def add(
        self,
        pred: SegmentationOutput | Tensor | np.ndarray,
        gt: GtMask,
        condition: str | None = None,
    ) -> Counts:
        """Score one frame and fold it into the running totals."""
        probs = _probs_array(pred)
        if probs.shape != gt.mask.shape:
            raise ShapeError(op="compute_metrics", expected=str(gt.mask.shape), got=str(probs.shape))
        positive = probs > self.threshold
        truth = gt.mask > 0.5
        frame = _count(positive, truth)
        self.overall = self.overall + frame
        for lo, hi in self.bins:
            region = (gt.distance >= lo) & (gt.distance < hi)
            label = bin_label(lo, hi)
            self.by_distance[label] = self.by_distance[label] + _count(positive, truth, region)
        if condition is not None:
            cond = validate_condition(condition)
            self.by_condition[cond] = self.by_condition.get(cond, Counts()) + frame
        self.frame_scores.append((frame.iou, frame.precision))
        return frame

    def merge(self, other: MetricsAccumulator) -> MetricsAccumulator:
        """Combine two accumulators; frame scores are appended in order."""
        merged = MetricsAccumulator(threshold=self.threshold, bins=self.bins)
        merged.overall = self.overall + other.overall
        for label in merged.by_distance:
            merged.by_distance[label] = self.by_distance[label] + other.by_distance.get(label, Counts())
        for cond in sorted(set(self.by_condition) | set(other.by_condition)):
            merged.by_condition[cond] = self.by_condition.get(cond, Counts()) + other.by_condition.get(
                cond, Counts()
            )
        merged.frame_scores = [*self.frame_scores, *other.frame_scores]
        return merged

    def report(self) -> MetricsReport:
        empty = [label for label, c in self.by_distance.items() if c.tp + c.fp + c.fn == 0]
        if empty:
            warnings.warn(
                f"Distance bins with no positives report n/a: {', '.join(empty)}.",
                RuntimeWarning,
                stacklevel=2,
            )
        return MetricsReport(
            iou=self.overall.iou,
            precision=self.overall.precision,
            iou_by_distance={k: c.iou for k, c in self.by_distance.items()},
            precision_by_distance={k: c.precision for k, c in self.by_distance.items()},
            iou_by_condition={k: self.by_condition[k].iou for k in sorted(self.by_condition)},
            precision_by_condition={k: self.by_condition[k].precision for k in sorted(self.by_condition)},
            macro_iou=_nanmean([s[0] for s in self.frame_scores]),
            macro_precision=_nanmean([s[1] for s in self.frame_scores]),
            frames=len(self.frame_scores),
            tp=self.overall.tp,
            fp=self.overall.fp,
            fn=self.overall.fn,
        )


def _nanmean(values: list[float]) -> float:
    finite = [v for v in values if not math.isnan(v)]
    return float(np.mean(finite)) if finite else math.nan


def compute_metrics(
    pred: SegmentationOutput | Tensor | np.ndarray,
    gt: GtMask,
    threshold: float = DEFAULT_THRESHOLD,
    condition: str | None = None,
) -> MetricsReport:
    """Single-frame report; probabilities strictly above ``threshold`` count as positive."""
    acc = MetricsAccumulator(threshold=threshold)
    acc.add(pred, gt, condition)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return acc.report()


def score_predictions(
    items: Iterable[tuple[SegmentationOutput | Tensor | np.ndarray, GtMask, str | None]],
    threshold: float = DEFAULT_THRESHOLD,
) -> MetricsReport:
    """Micro-averaged report over (prediction, gt, condition) triples."""
    acc = MetricsAccumulator(threshold=threshold)
    for pred, gt, condition in items:
        acc.add(pred, gt, condition)
    return acc.report()
