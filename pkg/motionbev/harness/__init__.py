from .ablation import AXES, ablation_matrix, normalize_axes
from .config import ExperimentConfig, resolve_config
from .evaluation import evaluate, load_model, predict
from .model import MotionSegModel, build_model, forward_pipeline, frame_target
from .probe import micro_config, micro_scene_spec, pipeline_gradcheck
from .render import bev_image, render_bev, render_predictions
from .training import (
    TrainState,
    load_train_state,
    new_train_state,
    save_train_state,
    train,
    write_loss_curve,
)

__all__ = [
    "AXES",
    "ExperimentConfig",
    "MotionSegModel",
    "TrainState",
    "ablation_matrix",
    "bev_image",
    "build_model",
    "evaluate",
    "forward_pipeline",
    "frame_target",
    "load_model",
    "load_train_state",
    "micro_config",
    "micro_scene_spec",
    "new_train_state",
    "normalize_axes",
    "pipeline_gradcheck",
    "predict",
    "render_bev",
    "render_predictions",
    "resolve_config",
    "save_train_state",
    "train",
    "write_loss_curve",
]
