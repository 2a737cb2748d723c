from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..exceptions import ShapeError
from ..geometry import BevGrid, EgoPose, metric_to_index
from ..tensor import Tensor
from ..validators import ensure_finite
from .lidar import _check_sweep_count

RADAR_WIDTH = 18
RADAR_CHANNELS = 16
# (vx, vz) column pairs rotated with the frame when sweeps are aligned
VELOCITY_COLUMNS: tuple[tuple[int, int], ...] = ((3, 4), (5, 6))
COMPENSATED_VELOCITY = (5, 6)


@dataclass(frozen=True, eq=False)
class RadarSweep:
    """
    One radar scan of [M, 18] points: columns 0-2 position in the capture
    frame, 3-17 attributes (see ``lookups.list_radar_attributes``).
    """

    points: np.ndarray
    sweep_index: int = 0
    pose: EgoPose | None = None

    def __post_init__(self) -> None:
        pts = ensure_finite("RadarSweep.points", self.points)
        if pts.size == 0 and pts.ndim < 2:
            pts = pts.reshape(0, RADAR_WIDTH)
        if pts.ndim != 2 or pts.shape[1] != RADAR_WIDTH:
            raise ShapeError(
                op="RadarSweep", expected=f"points [M, {RADAR_WIDTH}]", got=str(pts.shape)
            )
        object.__setattr__(self, "points", pts)

    def in_frame(self, current_pose: EgoPose | None) -> np.ndarray:
        if current_pose is None or self.pose is None or len(self.points) == 0:
            return self.points
        rel = current_pose.relative_to(self.pose)
        out = self.points.copy()
        out[:, 0:3] = rel.transform_points(self.points[:, 0:3])
        for cx, cz in VELOCITY_COLUMNS:
            vec = np.stack(
                [self.points[:, cx], np.zeros(len(out)), self.points[:, cz]], axis=1
            )
            rotated = rel.transform_vectors(vec)
            out[:, cx] = rotated[:, 0]
            out[:, cz] = rotated[:, 2]
        return out


def rasterize_radar(
    sweeps: Sequence[RadarSweep], grid: BevGrid, current_pose: EgoPose | None = None
) -> Tensor:
    """
    [16, nx, nz] radar BEV map.

    Channel 0 is occupancy; channels 1-15 copy attribute columns 3-17 of the
    point with the largest compensated speed in the cell (first one on ties).
    Height is ignored.
    """
    _check_sweep_count(sweeps, "rasterize_radar")
    out = np.zeros((RADAR_CHANNELS, grid.nx, grid.nz))
    clouds = [s.in_frame(current_pose) for s in sweeps]
    clouds = [c for c in clouds if len(c)]
    if not clouds:
        return Tensor(out)
    pts = np.concatenate(clouds, axis=0)

    idx, _ = metric_to_index(grid, pts[:, 0:3])
    inside = (idx[:, 0] >= 0) & (idx[:, 0] < grid.nx) & (idx[:, 2] >= 0) & (idx[:, 2] < grid.nz)
    if not np.any(inside):
        return Tensor(out)
    pts = pts[inside]
    cell = idx[inside, 0] * grid.nz + idx[inside, 2]
    speed = np.hypot(pts[:, COMPENSATED_VELOCITY[0]], pts[:, COMPENSATED_VELOCITY[1]])
    order = np.lexsort((np.arange(len(pts)), -speed, cell))
    _, first = np.unique(cell[order], return_index=True)
    winners = order[first]

    i = cell[winners] // grid.nz
    k = cell[winners] % grid.nz
    out[0, i, k] = 1.0
    out[1:, i, k] = pts[winners, 3:].T
    return Tensor(out)
