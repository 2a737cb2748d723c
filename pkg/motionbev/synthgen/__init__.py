from .conditions import DegradationCfg, apply_condition
from .dataset import (
    dataset_summary,
    frame_pairs,
    generate_dataset,
    iter_dataset,
    read_dataset,
    write_dataset,
)
from .render import render_camera
from .scene import SceneFrame, SceneSpec, generate_scene

__all__ = [
    "DegradationCfg",
    "SceneFrame",
    "SceneSpec",
    "apply_condition",
    "dataset_summary",
    "frame_pairs",
    "generate_dataset",
    "generate_scene",
    "iter_dataset",
    "read_dataset",
    "render_camera",
    "write_dataset",
]
