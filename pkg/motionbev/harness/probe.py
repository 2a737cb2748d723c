"""End-to-end gradient probe on a micro configuration."""

from __future__ import annotations

from ..gradcheck import GradCheckReport, check_gradients
from ..losses import bce_loss
from ..synthgen.scene import SceneSpec, generate_scene
from ..tensor import Tensor
from .config import ExperimentConfig
from .model import build_model, frame_target

PROBE_TOLERANCE = 1e-3


def micro_config(seed: int = 0, **overrides: object) -> ExperimentConfig:
    """2 cameras at 32x32, a 20 x 2 x 20 grid of 2 m cells and narrow layers."""
    base = ExperimentConfig(
        seed=seed,
        grid_nx=20,
        grid_ny=2,
        grid_nz=20,
        grid_cell=2.0,
        backbone_channels=(4, 4, 8, 8),
        camera_channels=2,
        model_dim=8,
        heads=2,
        points=2,
        corr_k=1,
        corr_d=2,
        decoder_hidden=4,
        sweep_count=3,
    )
    return base.with_overrides(**overrides) if overrides else base


def micro_scene_spec(seed: int = 0) -> SceneSpec:
    return SceneSpec(
        seed=seed,
        num_frames=2,
        num_boxes=3,
        num_cams=2,
        image_size=(32, 32),
        lidar_points_per_box=16,
        radar_points_per_box=2,
        lidar_ground_points=32,
        placement_extent=15.0,
    )


def pipeline_gradcheck(
    seed: int = 0, probes: int = 20, config: ExperimentConfig | None = None
) -> GradCheckReport:
    """Loss gradient w.r.t. ``probes`` random parameter entries versus central differences."""
    config = config or micro_config(seed)
    prev, frame = generate_scene(micro_scene_spec(seed))
    model = build_model(config)
    target = frame_target(frame, config)

    def loss() -> Tensor:
        return bce_loss(model(frame, prev).probs, target)

    return check_gradients(loss, model.parameters(), seed=seed, probes=probes)
