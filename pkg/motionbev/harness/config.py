"""
Experiment configuration.

One flat JSON object with the keys of :class:`ExperimentConfig`. Values are
resolved as dataclass defaults < config file < explicit overrides (the CLI
flags). Unknown keys are rejected.
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any

from ..correlation import CorrelationCfg
from ..encoders.camera import BackboneCfg
from ..exceptions import OutputError, ParseError, ValidationError
from ..fusion.plan import CONCAT, FusionPlan, validate_strategy
from ..geometry import BevGrid
from ..parsing import parse_config_text
from ..validators import (
    normalize_modalities,
    validate_non_negative,
    validate_positive_int,
    validate_sweep_count,
    validate_threshold,
)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    # BEV grid: nx x ny x nz cells of grid_cell metres, centred on the ego
    grid_nx: int = 100
    grid_ny: int = 4
    grid_nz: int = 100
    grid_cell: float = 1.0
    grid_y_min: float = -1.5
    grid_y_max: float = 8.5
    backbone_channels: tuple[int, ...] = (16, 32, 64, 128)
    camera_channels: int = 16
    modalities: tuple[str, ...] = ("camera", "radar", "lidar")
    fusion_strategy: str = CONCAT
    heads: int = 4
    points: int = 4
    model_dim: int = 64
    corr_k: int = 3
    corr_d: int = 4
    corr_stride: int = 1
    decoder_hidden: int = 32
    sweep_count: int = 5
    align_sweeps: bool = True
    warp_previous: bool = True
    lr: float = 3e-4
    weight_decay: float = 1e-7
    batch_size: int = 4
    iterations: int = 2000
    checkpoint_every: int = 500
    threshold: float = 0.5
    deterministic: bool = False
    workers: int = 4
    dataset: str = "data/train"
    eval_dataset: str = "data/eval"
    checkpoint: str = "runs/model.bmos"
    output_dir: str = "runs"

    def __post_init__(self) -> None:
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}.")
        for name in ("grid_nx", "grid_ny", "grid_nz", "camera_channels", "decoder_hidden",
                     "batch_size", "heads", "points", "model_dim", "corr_stride"):
            validate_positive_int(name, getattr(self, name))
        for name in ("iterations", "checkpoint_every", "corr_k", "corr_d"):
            validate_positive_int(name, getattr(self, name), minv=0)
        validate_positive_int("workers", self.workers)
        for name in ("align_sweeps", "warp_previous", "deterministic"):
            if not isinstance(getattr(self, name), bool):
                raise ValidationError(f"{name} must be true or false, got {getattr(self, name)!r}.")
        for name in ("dataset", "eval_dataset", "checkpoint", "output_dir"):
            if not isinstance(getattr(self, name), str) or not getattr(self, name).strip():
                raise ValidationError(f"{name} must be a non-empty path string.")

        object.__setattr__(self, "modalities", normalize_modalities(self.modalities))
        object.__setattr__(self, "fusion_strategy", validate_strategy(self.fusion_strategy))
        object.__setattr__(
            self, "backbone_channels", tuple(int(c) for c in self.backbone_channels)
        )
        object.__setattr__(self, "sweep_count", validate_sweep_count(self.sweep_count))
        object.__setattr__(self, "lr", validate_non_negative("lr", self.lr))
        object.__setattr__(
            self, "weight_decay", validate_non_negative("weight_decay", self.weight_decay)
        )
        object.__setattr__(
            self, "threshold", validate_threshold("threshold", self.threshold, 0.0, 1.0, inclusive=False)
        )
        if validate_non_negative("grid_cell", self.grid_cell) == 0.0:
            raise ValidationError("grid_cell must be > 0.")

        # composite views validate their own invariants
        _ = self.grid, self.backbone, self.plan, self.correlation

    @property
    def grid(self) -> BevGrid:
        half_x = self.grid_nx * self.grid_cell / 2.0
        half_z = self.grid_nz * self.grid_cell / 2.0
        return BevGrid(
            x_range=(-half_x, half_x),
            y_range=(self.grid_y_min, self.grid_y_max),
            z_range=(-half_z, half_z),
            nx=self.grid_nx,
            ny=self.grid_ny,
            nz=self.grid_nz,
        )

    @property
    def backbone(self) -> BackboneCfg:
        return BackboneCfg(channels=self.backbone_channels)

    @property
    def plan(self) -> FusionPlan:
        return FusionPlan(
            self.modalities,
            self.fusion_strategy,
            heads=self.heads,
            points=self.points,
            model_dim=self.model_dim,
        )

    @property
    def correlation(self) -> CorrelationCfg:
        return CorrelationCfg(k=self.corr_k, d=self.corr_d, stride_disp=self.corr_stride)

    @property
    def loader_workers(self) -> int:
        return 1 if self.deterministic else self.workers

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path: str | Path) -> Path:
        target = Path(path)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(self.to_json() + "\n", encoding="utf-8")
        except OSError as e:
            raise OutputError(path=str(target), message=f"cannot write config: {e}") from e
        return target

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ExperimentConfig:
        return cls().with_overrides(**data)

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ParseError(f"Cannot read config file {path}: {e}") from e
        return cls.from_dict(parse_config_text(text))

    def with_overrides(self, **overrides: Any) -> ExperimentConfig:
        """Copy with ``overrides`` applied; unknown keys raise ValidationError."""
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ValidationError(f"Unknown config key(s): {', '.join(unknown)}.")
        cleaned = {k: (tuple(v) if isinstance(v, list) else v) for k, v in overrides.items()}
        return replace(self, **cleaned)


def resolve_config(
    path: str | Path | None = None, overrides: Mapping[str, Any] | None = None
) -> ExperimentConfig:
    """Defaults, then the config file at ``path``, then non-None ``overrides``."""
    config = ExperimentConfig.load(path) if path is not None else ExperimentConfig()
    explicit = {k: v for k, v in (overrides or {}).items() if v is not None}
    return config.with_overrides(**explicit) if explicit else config
