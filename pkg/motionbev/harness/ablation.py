"""
Train/evaluate grids over modality subsets, fusion strategies, sweep
counts, driving conditions and training seeds.

``condition`` only filters the evaluation frames, so each training
configuration is trained once and scored per condition.
"""

from __future__ import annotations

import itertools
import json
from collections.abc import Callable, Mapping, Sequence
from pathlib import Path
from typing import Any

import pandas as pd

from ..exceptions import OutputError, ValidationError
from ..fusion.plan import validate_strategy
from ..metrics import MetricsReport
from ..synthgen.scene import SceneFrame
from ..validators import (
    modality_label,
    normalize_modalities,
    validate_condition,
    validate_positive_int,
    validate_sweep_count,
)
from .config import ExperimentConfig
from .evaluation import evaluate
from .training import train

AXES: tuple[str, ...] = ("modalities", "fusion_strategy", "sweep_count", "condition", "seed")

_NORMALIZERS: dict[str, Callable[[Any], Any]] = {
    "modalities": lambda v: modality_label(normalize_modalities(v)),
    "fusion_strategy": validate_strategy,
    "sweep_count": validate_sweep_count,
    "condition": validate_condition,
    "seed": lambda v: validate_positive_int("seed", v, minv=0),
}


def normalize_axes(axes: Mapping[str, Sequence[Any]]) -> dict[str, list[Any]]:
    """Validate axis names and values; returns axes in canonical order."""
    unknown = sorted(set(axes) - set(AXES))
    if unknown:
        raise ValidationError(
            f"Unknown ablation axis '{unknown[0]}'. Allowed values are {', '.join(AXES)}."
        )
    out: dict[str, list[Any]] = {}
    for name in AXES:
        if name not in axes:
            continue
        values = [axes[name]] if isinstance(axes[name], (str, int)) else list(axes[name])
        if not values:
            raise ValidationError(f"Ablation axis '{name}' has no values.")
        normalized = [_NORMALIZERS[name](v) for v in values]
        out[name] = list(dict.fromkeys(normalized))
    return out


def _run_name(values: Mapping[str, Any]) -> str:
    if not values:
        return "base"
    return "_".join(f"{k}-{v}" for k, v in values.items())


def _report_row(report: MetricsReport) -> dict[str, Any]:
    row: dict[str, Any] = {"iou": report.iou, "precision": report.precision}
    for label, value in report.iou_by_distance.items():
        row[f"iou_{label}"] = value
    for label, value in report.precision_by_distance.items():
        row[f"precision_{label}"] = value
    row["frames"] = report.frames
    return row


def _settings_row(config: ExperimentConfig) -> dict[str, Any]:
    # settings that are not ablation axes but qualify every result
    return {"heads": config.heads, "points": config.points, "corr_d": config.corr_d}


def write_table(table: pd.DataFrame, path_stem: str | Path) -> tuple[Path, Path]:
    """``<stem>.tsv`` ("n/a" for missing values) and ``<stem>.json`` (records)."""
    stem = Path(path_stem)
    tsv = stem.with_name(stem.name + ".tsv")
    js = stem.with_name(stem.name + ".json")
    try:
        stem.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(tsv, sep="\t", index=False, na_rep="n/a")
        records = json.loads(table.to_json(orient="records"))
        js.write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(path=str(stem), message=f"cannot write ablation table: {e}") from e
    return tsv, js


def ablation_matrix(
    base: ExperimentConfig,
    axes: Mapping[str, Sequence[Any]],
    output: str | Path | None = None,
    train_frames: Sequence[SceneFrame] | None = None,
    eval_frames: Sequence[SceneFrame] | None = None,
    progress: Callable[[str], None] | None = None,
) -> pd.DataFrame:
    """
    Train and evaluate every combination of ``axes`` on top of ``base``.

    Each run writes under ``<output_dir>/ablation/<run name>/``. Rows are
    sorted by the axis columns. With ``output`` the table is also written
    as TSV and JSON.
    """
    grid = normalize_axes(axes)
    conditions = grid.pop("condition", [None])
    train_axes = list(grid)
    rows = []
    for combo in itertools.product(*(grid[a] for a in train_axes)):
        values = dict(zip(train_axes, combo))
        run_dir = Path(base.output_dir) / "ablation" / _run_name(values)
        config = base.with_overrides(
            **values, output_dir=str(run_dir), checkpoint=str(run_dir / "model.bmos")
        )
        if progress is not None:
            progress(f"train {_run_name(values)}")
        train(config, frames=train_frames)
        for condition in conditions:
            report = evaluate(
                config,
                checkpoint=config.checkpoint,
                conditions=[condition] if condition is not None else None,
                output=run_dir / f"metrics_{condition or 'all'}",
                frames=eval_frames,
            )
            row = dict(values)
            if condition is not None:
                row["condition"] = condition
            row.update(_report_row(report))
            row.update(_settings_row(config))
            rows.append(row)

    table = pd.DataFrame(rows)
    keys = [a for a in AXES if a in table.columns]
    if keys:
        table = table.sort_values(keys, kind="mergesort").reset_index(drop=True)
    if output is not None:
        write_table(table, output)
    return table
