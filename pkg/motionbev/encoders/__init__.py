from .camera import (
    BackboneCfg,
    CameraBundle,
    CameraEncoder,
    CameraNeck,
    ImageBackbone,
    camera_neck,
    encode_camera,
    image_backbone,
    lift_to_bev,
)
from .lidar import LidarSweep, voxelize_lidar
from .radar import RadarSweep, rasterize_radar

__all__ = [
    "BackboneCfg",
    "CameraBundle",
    "CameraEncoder",
    "CameraNeck",
    "ImageBackbone",
    "LidarSweep",
    "RadarSweep",
    "camera_neck",
    "encode_camera",
    "image_backbone",
    "lift_to_bev",
    "rasterize_radar",
    "voxelize_lidar",
]
