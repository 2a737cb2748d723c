from __future__ import annotations

__version__ = "0.1.0"

from motionbev.boxes import Box3D, GtMask, boxes_to_mask
from motionbev.checkpoint import load_checkpoint, load_into, save_checkpoint
from motionbev.correlation import CorrelationCfg, correlate, motion_features
from motionbev.exceptions import (
    CheckpointError,
    DatasetError,
    MotionBevError,
    ShapeError,
    ValidationError,
)
from motionbev.fusion import FusionPlan, mdca, run_fusion
from motionbev.geometry import BevGrid, CameraCalib, EgoPose, project_to_image, warp_bev
from motionbev.head import SegmentationOutput, decode
from motionbev.losses import bce_loss
from motionbev.lookups import list_fusion_strategies, list_radar_attributes
from motionbev.metrics import MetricsReport, compute_metrics, score_predictions
from motionbev.tensor import Parameter, Tensor, as_tensor, no_grad

__all__ = [
    "__version__",
    "BevGrid",
    "Box3D",
    "CameraCalib",
    "CheckpointError",
    "CorrelationCfg",
    "DatasetError",
    "EgoPose",
    "FusionPlan",
    "GtMask",
    "MetricsReport",
    "MotionBevError",
    "Parameter",
    "SegmentationOutput",
    "ShapeError",
    "Tensor",
    "ValidationError",
    "as_tensor",
    "bce_loss",
    "boxes_to_mask",
    "compute_metrics",
    "correlate",
    "decode",
    "list_fusion_strategies",
    "list_radar_attributes",
    "load_checkpoint",
    "load_into",
    "mdca",
    "motion_features",
    "no_grad",
    "project_to_image",
    "run_fusion",
    "save_checkpoint",
    "score_predictions",
    "warp_bev",
]
