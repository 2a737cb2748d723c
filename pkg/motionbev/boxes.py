"""Oriented 3D boxes and the ground-truth moving mask derived from them."""

from __future__ import annotations

import math
import warnings
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ShapeError
from .geometry import BevGrid, cell_centers_xz, cell_distance_map
from .validators import ensure_finite

BOX_COLUMNS: tuple[str, ...] = (
    "cx",
    "cy",
    "cz",
    "length",
    "width",
    "height",
    "yaw",
    "vx",
    "vz",
    "moving",
    "r",
    "g",
    "b",
)


@dataclass(frozen=True, eq=False)
class Box3D:
    """
    Box with bottom-face center ``center`` (x, y, z), ``size`` (length, width,
    height) and heading ``yaw`` about +Y. Length runs along the heading
    (sin yaw, cos yaw) in the X-Z plane; ``velocity`` is (vx, vz) in m/s.
    """

    center: np.ndarray
    size: np.ndarray
    yaw: float = 0.0
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))
    moving: bool = False
    color: np.ndarray = field(default_factory=lambda: np.full(3, 0.5))

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", ensure_finite("Box3D.center", self.center).reshape(3))
        object.__setattr__(self, "size", ensure_finite("Box3D.size", self.size).reshape(3))
        object.__setattr__(self, "velocity", ensure_finite("Box3D.velocity", self.velocity).reshape(2))
        object.__setattr__(self, "color", ensure_finite("Box3D.color", self.color).reshape(3))
        object.__setattr__(self, "yaw", float(self.yaw))
        object.__setattr__(self, "moving", bool(self.moving))

    @property
    def heading(self) -> np.ndarray:
        return np.array([math.sin(self.yaw), math.cos(self.yaw)])

    @property
    def is_degenerate(self) -> bool:
        return bool(self.size[0] <= 0.0 or self.size[1] <= 0.0)

    def local_xz(self, xz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(along-heading, lateral) offsets of ground points [..., 2] from the box center."""
        dx = xz[..., 0] - self.center[0]
        dz = xz[..., 1] - self.center[2]
        s, c = math.sin(self.yaw), math.cos(self.yaw)
        return dx * s + dz * c, dx * c - dz * s

    def footprint_contains(self, xz: np.ndarray) -> np.ndarray:
        """Half-open footprint test: -L/2 <= a < L/2 and -W/2 <= b < W/2."""
        a, b = self.local_xz(xz)
        half_l, half_w = self.size[0] / 2.0, self.size[1] / 2.0
        return (a >= -half_l) & (a < half_l) & (b >= -half_w) & (b < half_w)

    def corners(self) -> np.ndarray:
        """[8, 3] corners: bottom face then top face, each front-right, front-left, rear-left, rear-right."""
        length, width, height = self.size
        s, c = math.sin(self.yaw), math.cos(self.yaw)
        fwd = np.array([s, 0.0, c])
        side = np.array([c, 0.0, -s])
        out = []
        for dy in (0.0, height):
            for a, b in ((1, 1), (1, -1), (-1, -1), (-1, 1)):
                out.append(self.center + fwd * a * length / 2 + side * b * width / 2 + [0.0, dy, 0.0])
        return np.array(out)

    def to_array(self) -> np.ndarray:
        return np.concatenate(
            [self.center, self.size, [self.yaw], self.velocity, [float(self.moving)], self.color]
        )

    @classmethod
    def from_array(cls, row: np.ndarray) -> Box3D:
        row = np.asarray(row, dtype=np.float64)
        if row.shape != (len(BOX_COLUMNS),):
            raise ShapeError(op="Box3D.from_array", expected=f"({len(BOX_COLUMNS)},)", got=str(row.shape))
        return cls(row[0:3], row[3:6], row[6], row[7:9], bool(row[9] > 0.5), row[10:13])


def boxes_to_array(boxes: Iterable[Box3D]) -> np.ndarray:
    rows = [b.to_array() for b in boxes]
    return np.array(rows) if rows else np.zeros((0, len(BOX_COLUMNS)))


def boxes_from_array(array: np.ndarray) -> list[Box3D]:
    arr = np.asarray(array, dtype=np.float64).reshape(-1, len(BOX_COLUMNS))
    return [Box3D.from_array(row) for row in arr]


@dataclass(frozen=True, eq=False)
class GtMask:
    """Binary [nx, nz] moving mask and the per-cell distance from the ego origin."""

    mask: np.ndarray
    distance: np.ndarray


def boxes_to_mask(boxes: Iterable[Box3D], grid: BevGrid) -> GtMask:
    """Mark cells whose centers lie inside the footprint of a moving box."""
    centers = cell_centers_xz(grid)
    mask = np.zeros((grid.nx, grid.nz))
    for i, box in enumerate(boxes):
        if not box.moving:
            continue
        if box.is_degenerate:
            warnings.warn(
                f"Skipping degenerate box {i} with footprint {box.size[0]} x {box.size[1]} m.",
                RuntimeWarning,
                stacklevel=2,
            )
            continue
        mask[box.footprint_contains(centers)] = 1.0
    return GtMask(mask=mask, distance=cell_distance_map(grid))
