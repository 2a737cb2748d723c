from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..exceptions import ShapeError, ValidationError
from ..geometry import BevGrid, EgoPose, metric_to_index
from ..tensor import Tensor
from ..validators import ensure_finite

MAX_SWEEPS = 5


@dataclass(frozen=True, eq=False)
class LidarSweep:
    """
    One LiDAR scan. ``points`` are [N, 3] in the reference frame of ``pose``
    (the capture pose); sweep 0 is the current keyframe.
    """

    points: np.ndarray
    sweep_index: int = 0
    pose: EgoPose | None = None

    def __post_init__(self) -> None:
        pts = ensure_finite("LidarSweep.points", self.points)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ShapeError(op="LidarSweep", expected="points [N, 3]", got=str(pts.shape))
        object.__setattr__(self, "points", pts)

    def in_frame(self, current_pose: EgoPose | None) -> np.ndarray:
        """Points expressed in the current reference frame."""
        if current_pose is None or self.pose is None:
            return self.points
        return current_pose.relative_to(self.pose).transform_points(self.points)


def _check_sweep_count(sweeps: Sequence[object], op: str) -> None:
    if len(sweeps) > MAX_SWEEPS:
        raise ValidationError(f"{op} accepts at most {MAX_SWEEPS} sweeps, got {len(sweeps)}.")


def voxelize_lidar(
    sweeps: Sequence[LidarSweep], grid: BevGrid, current_pose: EgoPose | None = None
) -> Tensor:
    """Binary [ny, nx, nz] occupancy of the union of all sweeps; off-grid points are dropped."""
    _check_sweep_count(sweeps, "voxelize_lidar")
    occupancy = np.zeros((grid.ny, grid.nx, grid.nz))
    for sweep in sweeps:
        pts = sweep.in_frame(current_pose)
        if len(pts) == 0:
            continue
        idx, inside = metric_to_index(grid, pts)
        idx = idx[inside]
        occupancy[idx[:, 1], idx[:, 0], idx[:, 2]] = 1.0
    return Tensor(occupancy)
