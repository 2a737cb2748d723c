"""
Camera branch: a small residual backbone with stride-8/16 outputs, a neck
that merges them, and voxel lifting that pulls image features into the BEV
volume by projecting every voxel center into every camera.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .. import ops
from ..exceptions import ShapeError, ValidationError
from ..geometry import BevGrid, CameraCalib, project_to_image, voxel_centers
from ..nn import Conv2d, ConvNormReLU, Module, ResidualBlock
from ..tensor import Tensor, lift

FEATURE_STRIDE = 8


@dataclass(frozen=True)
class BackboneCfg:
    channels: tuple[int, int, int, int] = (16, 32, 64, 128)
    in_channels: int = 3

    def __post_init__(self) -> None:
        if len(self.channels) != 4 or any(int(c) < 1 for c in self.channels):
            raise ValidationError(f"BackboneCfg needs four positive stage widths, got {self.channels}.")


@dataclass(frozen=True)
class CameraBundle:
    images: Sequence[Tensor]
    calibs: Sequence[CameraCalib]

    def __post_init__(self) -> None:
        if len(self.images) != len(self.calibs):
            raise ShapeError(
                op="CameraBundle",
                expected="one calibration per image",
                got=f"{len(self.images)} images, {len(self.calibs)} calibs",
            )
        for image, calib in zip(self.images, self.calibs):
            if image.ndim != 3 or image.shape[0] != 3:
                raise ShapeError(op="CameraBundle", expected="[3, H, W] images", got=str(image.shape))
            h, w = image.shape[1:]
            if h % FEATURE_STRIDE or w % FEATURE_STRIDE:
                raise ShapeError(
                    op="CameraBundle",
                    expected=f"H, W divisible by {FEATURE_STRIDE}",
                    got=str(image.shape),
                )
            if calib.image_size != (h, w):
                raise ShapeError(
                    op="CameraBundle",
                    expected=f"calibration for {(h, w)}",
                    got=str(calib.image_size),
                )


class ImageBackbone(Module):
    """Four stride-2 residual stages; returns stage-3 (stride 8) and stage-4 (stride 16) maps."""

    def __init__(self, cfg: BackboneCfg, rng: np.random.Generator) -> None:
        self.cfg = cfg
        widths = (cfg.in_channels, *cfg.channels)
        self.downs = [Conv2d(widths[s], widths[s + 1], 3, rng, stride=2) for s in range(4)]
        self.blocks = [ResidualBlock(widths[s + 1], rng, norm=False) for s in range(4)]

    def forward(self, image: Tensor) -> tuple[Tensor, Tensor]:
        if image.ndim != 3 or image.shape[0] != self.cfg.in_channels:
            raise ShapeError(
                op="image_backbone",
                expected=f"[{self.cfg.in_channels}, H, W]",
                got=str(image.shape),
            )
        if image.shape[1] % 16 or image.shape[2] % 16:
            raise ShapeError(op="image_backbone", expected="H, W divisible by 16", got=str(image.shape))
        x = image
        outputs = []
        for down, block in zip(self.downs, self.blocks):
            x = block(ops.relu(down(x)))
            outputs.append(x)
        return outputs[2], outputs[3]


class CameraNeck(Module):
    def __init__(self, c2: int, c3: int, out_channels: int, rng: np.random.Generator) -> None:
        self.block1 = ConvNormReLU(c2 + c3, out_channels, rng)
        self.block2 = ConvNormReLU(out_channels, out_channels, rng)
        self.reduce = Conv2d(out_channels, out_channels, 1, rng)

    def forward(self, feat2: Tensor, feat3: Tensor) -> Tensor:
        if (
            feat2.ndim != 3
            or feat3.ndim != 3
            or feat2.shape[1] != 2 * feat3.shape[1]
            or feat2.shape[2] != 2 * feat3.shape[2]
        ):
            raise ShapeError(
                op="camera_neck",
                expected="feat2 spatial extent exactly twice feat3's",
                got=f"{feat2.shape} and {feat3.shape}",
            )
        x = ops.concat_channels([ops.upsample_nearest2x(feat3), feat2])
        return self.reduce(self.block2(self.block1(x)))


def image_backbone(image: Tensor, backbone: ImageBackbone) -> tuple[Tensor, Tensor]:
    return backbone(image)


def camera_neck(feat2: Tensor, feat3: Tensor, neck: CameraNeck) -> Tensor:
    return neck(feat2, feat3)


def lift_to_bev(
    feats: Sequence[Tensor],
    calibs: Sequence[CameraCalib],
    grid: BevGrid,
    stride: int = FEATURE_STRIDE,
) -> Tensor:
    """
    Pull per-camera image features into the BEV volume.

    Every voxel center is projected with intrinsics scaled by 1/stride and
    bilinearly sampled; cameras that see a voxel are averaged and voxels
    seen by none are zero. The [C, nx, ny, nz] volume is folded to
    [C*ny, nx, nz] with channel index c*ny + j.
    """
    if not feats or len(feats) != len(calibs):
        raise ShapeError(
            op="lift_to_bev",
            expected="one feature map per calibration",
            got=f"{len(feats)} maps, {len(calibs)} calibs",
        )
    channels = feats[0].shape[0]
    centers = voxel_centers(grid)
    total: Tensor | None = None
    seen = np.zeros(grid.num_voxels)
    for feat, calib in zip(feats, calibs):
        scaled = calib.scaled(1.0 / stride)
        if feat.ndim != 3 or feat.shape != (channels, *scaled.image_size):
            raise ShapeError(
                op="lift_to_bev",
                expected=f"[{channels}, {scaled.image_size[0]}, {scaled.image_size[1]}]",
                got=str(feat.shape),
            )
        pixels, valid = project_to_image(centers, scaled)
        sampled = ops.mul(ops.bilinear_sample(feat, pixels), lift(valid[:, None].astype(np.float64)))
        total = sampled if total is None else ops.add(total, sampled)
        seen += valid

    averaged = ops.mul(total, lift((1.0 / np.maximum(seen, 1.0))[:, None]))
    volume = ops.reshape(averaged, (grid.nx, grid.ny, grid.nz, channels))
    volume = ops.transpose(volume, (3, 1, 0, 2))
    return ops.reshape(volume, (channels * grid.ny, grid.nx, grid.nz))


class CameraEncoder(Module):
    """Backbone + neck shared by all cameras."""

    def __init__(self, cfg: BackboneCfg, out_channels: int, rng: np.random.Generator) -> None:
        self.backbone = ImageBackbone(cfg, rng)
        self.neck = CameraNeck(cfg.channels[2], cfg.channels[3], out_channels, rng)
        self.out_channels = out_channels

    def forward(self, bundle: CameraBundle, grid: BevGrid) -> Tensor:
        return encode_camera(bundle, self.backbone, self.neck, grid)


def encode_camera(
    bundle: CameraBundle, backbone: ImageBackbone, neck: CameraNeck, grid: BevGrid
) -> Tensor:
    """Backbone -> neck per camera, then lift all cameras into one [C*ny, nx, nz] map."""
    feats = [neck(*backbone(image)) for image in bundle.images]
    return lift_to_bev(feats, bundle.calibs, grid)
