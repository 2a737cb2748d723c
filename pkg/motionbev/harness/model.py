"""The two-frame segmentation model assembled from an ExperimentConfig."""

from __future__ import annotations

import numpy as np

from ..boxes import GtMask, boxes_to_mask
from ..correlation import correlate, motion_features
from ..encoders.camera import CameraEncoder
from ..encoders.lidar import voxelize_lidar
from ..encoders.radar import RADAR_CHANNELS, rasterize_radar
from ..fusion.runner import FusionModule
from ..geometry import warp_bev
from ..head import Decoder, SegmentationOutput, decode
from ..nn import Module
from ..synthgen.scene import SceneFrame
from ..tensor import Tensor, make_rng
from .config import ExperimentConfig

_STREAM_INIT = 3


class MotionSegModel(Module):
    """
    Encoders, fusion, BEV encoder and decoder for one config.

    The same weights encode the current and the previous frame.
    """

    def __init__(self, config: ExperimentConfig, rng: np.random.Generator) -> None:
        self.config = config
        self.grid = config.grid
        plan = config.plan
        ny = self.grid.ny
        channels = {
            "camera": config.camera_channels * ny,
            "radar": RADAR_CHANNELS,
            "lidar": ny,
        }
        self.camera = (
            CameraEncoder(config.backbone, config.camera_channels, rng) if plan.has("camera") else None
        )
        self.fusion = FusionModule(plan, channels, rng)
        self.decoder = Decoder(
            config.correlation.channels + plan.model_dim, config.decoder_hidden, rng
        )

    def encode_frame(self, frame: SceneFrame) -> Tensor:
        """Fused [model_dim, nx, nz] BEV map of one keyframe."""
        cfg = self.config
        plan = cfg.plan
        current = frame.pose if cfg.align_sweeps else None
        camera = self.camera(frame.cameras, self.grid) if self.camera is not None else None
        radar = (
            rasterize_radar(frame.radar[: cfg.sweep_count], self.grid, current)
            if plan.has("radar")
            else None
        )
        lidar = (
            voxelize_lidar(frame.lidar[: cfg.sweep_count], self.grid, current)
            if plan.has("lidar")
            else None
        )
        return self.fusion(camera=camera, radar=radar, lidar=lidar)

    def forward(self, frame: SceneFrame, prev_frame: SceneFrame) -> SegmentationOutput:
        return forward_pipeline(frame, prev_frame, self)


def forward_pipeline(
    frame: SceneFrame, prev_frame: SceneFrame, model: MotionSegModel
) -> SegmentationOutput:
    """
    encode both frames -> warp previous into current -> correlate ->
    motion features -> decode. Output logits are [1, nx, nz].
    """
    curr = model.encode_frame(frame)
    prev = model.encode_frame(prev_frame)
    if model.config.warp_previous:
        prev = warp_bev(prev, prev_frame.pose, frame.pose, model.grid)
    corr = correlate(curr, prev, model.config.correlation)
    return decode(motion_features(corr, curr), model.decoder)


def build_model(config: ExperimentConfig) -> MotionSegModel:
    """Fresh model with weights drawn from the config seed."""
    return MotionSegModel(config, make_rng(config.seed, _STREAM_INIT))


def frame_target(frame: SceneFrame, config: ExperimentConfig) -> GtMask:
    return boxes_to_mask(frame.boxes, config.grid)
