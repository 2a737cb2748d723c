"""Night and rain degradations applied to a rendered keyframe."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..encoders.camera import CameraBundle
from ..encoders.lidar import LidarSweep
from ..tensor import Tensor, make_rng
from ..validators import validate_condition, validate_threshold
from .scene import SceneFrame

_STREAM_CONDITION = 2


@dataclass(frozen=True)
class DegradationCfg:
    night_gain: float = 0.15
    night_noise: float = 0.02
    rain_contrast: float = 0.5
    rain_speckle: float = 0.1
    lidar_drop_rate: float = 0.2
    lidar_jitter_m: float = 0.05

    def __post_init__(self) -> None:
        validate_threshold("lidar_drop_rate", self.lidar_drop_rate)


def _night(image: np.ndarray, cfg: DegradationCfg, rng: np.random.Generator) -> np.ndarray:
    return np.clip(image * cfg.night_gain + rng.normal(0.0, cfg.night_noise, image.shape), 0.0, 1.0)


def _rain_image(image: np.ndarray, cfg: DegradationCfg, rng: np.random.Generator) -> np.ndarray:
    mean = image.mean()
    faded = mean + cfg.rain_contrast * (image - mean)
    speckled = faded * (1.0 + rng.normal(0.0, cfg.rain_speckle, image.shape))
    return np.clip(speckled, 0.0, 1.0)


def _rain_lidar(sweep: LidarSweep, cfg: DegradationCfg, rng: np.random.Generator) -> LidarSweep:
    keep = rng.uniform(0.0, 1.0, len(sweep.points)) >= cfg.lidar_drop_rate
    pts = sweep.points[keep]
    pts = pts + rng.normal(0.0, cfg.lidar_jitter_m, pts.shape)
    return LidarSweep(pts, sweep_index=sweep.sweep_index, pose=sweep.pose)


def apply_condition(
    frame: SceneFrame,
    condition: str,
    seed: int = 0,
    cfg: DegradationCfg | None = None,
) -> SceneFrame:
    """
    Return a copy of ``frame`` degraded for ``condition``.

    day: unchanged. night: images x0.15 plus N(0, 0.02) noise; LiDAR and radar
    untouched. rain: image contrast halved about the mean with speckle noise,
    LiDAR points dropped (20%) and jittered (0.05 m); radar untouched. Noise
    comes from the (seed, frame index) stream.
    """
    condition = validate_condition(condition)
    if condition == "day":
        return frame
    cfg = cfg or DegradationCfg()
    rng = make_rng(seed, _STREAM_CONDITION, frame.frame_index)
    images = [im.data for im in frame.cameras.images]
    lidar = frame.lidar
    if condition == "night":
        images = [_night(im, cfg, rng) for im in images]
    else:
        images = [_rain_image(im, cfg, rng) for im in images]
        lidar = tuple(_rain_lidar(s, cfg, rng) for s in frame.lidar)
    bundle = CameraBundle([Tensor(im) for im in images], frame.cameras.calibs)
    return replace(frame, cameras=bundle, lidar=lidar, condition=condition)
