"""
Reference frame, camera projection and the metric BEV grid.

Axes: X right, Y up, Z forward in the reference (ego / reference-camera)
frame. Camera frames use the same handedness (x right, y up, z forward) so
every extrinsic rotation is proper; image rows grow downward, hence
``v = cy - fy * y / z``. BEV maps are indexed ``[X, Z]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ops
from .exceptions import ShapeError, ValidationError
from .tensor import Tensor, lift
from .validators import ensure_finite, validate_positive_int

ORTHONORMAL_TOL = 1e-9
# continuous grid indices this close to an integer are snapped onto it
SNAP_TOL = 1e-9


def rot_y(theta: float) -> np.ndarray:
    """Rotation by ``theta`` about +Y; maps heading 0 (+Z) to (sin t, 0, cos t)."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _check_rotation(name: str, rotation: np.ndarray) -> np.ndarray:
    r = ensure_finite(name, rotation)
    if r.shape != (3, 3):
        raise ShapeError(op=name, expected="(3, 3) rotation", got=str(r.shape))
    if not np.allclose(r @ r.T, np.eye(3), atol=ORTHONORMAL_TOL, rtol=0.0):
        raise ValidationError(f"{name} is not orthonormal.")
    if abs(np.linalg.det(r) - 1.0) > ORTHONORMAL_TOL:
        raise ValidationError(f"{name} must have determinant +1.")
    return r


def _check_translation(name: str, translation: np.ndarray) -> np.ndarray:
    t = ensure_finite(name, translation).reshape(-1)
    if t.shape != (3,):
        raise ShapeError(op=name, expected="(3,) translation", got=str(t.shape))
    return t


def _points_array(points: Tensor | np.ndarray, op: str) -> np.ndarray:
    arr = points.data if isinstance(points, Tensor) else ensure_finite(op, points)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ShapeError(op=op, expected="points [N, 3]", got=str(arr.shape))
    return arr


@dataclass(frozen=True)
class BevGrid:
    """Metric X x Y x Z volume around the reference origin."""

    x_range: tuple[float, float] = (-50.0, 50.0)
    y_range: tuple[float, float] = (-1.5, 8.5)
    z_range: tuple[float, float] = (-50.0, 50.0)
    nx: int = 200
    ny: int = 8
    nz: int = 200

    def __post_init__(self) -> None:
        for name in ("nx", "ny", "nz"):
            validate_positive_int(name, getattr(self, name))
        for name in ("x_range", "y_range", "z_range"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
                raise ValidationError(f"{name} must be an increasing finite pair, got {(lo, hi)}.")
        if not math.isclose(self.cell_x, self.cell_z, rel_tol=1e-12):
            raise ValidationError(
                f"X and Z cells must be square, got {self.cell_x} m and {self.cell_z} m."
            )

    @classmethod
    def desk(cls) -> BevGrid:
        """100 x 4 x 100 cells at 1.0 m."""
        return cls(nx=100, ny=4, nz=100)

    @property
    def cell_x(self) -> float:
        return (self.x_range[1] - self.x_range[0]) / self.nx

    @property
    def cell_z(self) -> float:
        return (self.z_range[1] - self.z_range[0]) / self.nz

    @property
    def cell_xz(self) -> float:
        return self.cell_x

    @property
    def cell_y(self) -> float:
        return (self.y_range[1] - self.y_range[0]) / self.ny

    @property
    def num_voxels(self) -> int:
        return self.nx * self.ny * self.nz

    def axis_centers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        xs = self.x_range[0] + (np.arange(self.nx) + 0.5) * self.cell_x
        ys = self.y_range[0] + (np.arange(self.ny) + 0.5) * self.cell_y
        zs = self.z_range[0] + (np.arange(self.nz) + 0.5) * self.cell_z
        return xs, ys, zs


def voxel_centers(grid: BevGrid) -> Tensor:
    """[nx*ny*nz, 3] voxel centroids; row = (i*ny + j)*nz + k (X-major, then Y, then Z)."""
    xs, ys, zs = grid.axis_centers()
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    return Tensor(np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1))


def metric_to_index(grid: BevGrid, points: Tensor | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Integer (i, j, k) cell indices of metric points and an in-grid mask.

    Cells are half-open ``[lo, lo + cell)``. Out-of-grid rows keep their
    (out-of-range) indices and are flagged False.
    """
    arr = _points_array(points, "metric_to_index")
    idx = np.stack(
        [
            np.floor((arr[:, 0] - grid.x_range[0]) / grid.cell_x),
            np.floor((arr[:, 1] - grid.y_range[0]) / grid.cell_y),
            np.floor((arr[:, 2] - grid.z_range[0]) / grid.cell_z),
        ],
        axis=1,
    ).astype(np.int64)
    inside = (
        (idx[:, 0] >= 0)
        & (idx[:, 0] < grid.nx)
        & (idx[:, 1] >= 0)
        & (idx[:, 1] < grid.ny)
        & (idx[:, 2] >= 0)
        & (idx[:, 2] < grid.nz)
    )
    return idx, inside


def cell_centers_xz(grid: BevGrid) -> np.ndarray:
    """[nx, nz, 2] metric (x, z) of every ground-plane cell center."""
    xs, _, zs = grid.axis_centers()
    gx, gz = np.meshgrid(xs, zs, indexing="ij")
    return np.stack([gx, gz], axis=-1)


def cell_distance_map(grid: BevGrid) -> np.ndarray:
    """[nx, nz] ground-plane distance of each cell center from the reference origin."""
    centers = cell_centers_xz(grid)
    return np.hypot(centers[..., 0], centers[..., 1])


@dataclass(frozen=True, eq=False)
class EgoPose:
    """World -> reference rigid transform: p_ref = rotation @ p_world + translation."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    timestamp_us: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "rotation", _check_rotation("EgoPose.rotation", self.rotation))
        object.__setattr__(
            self, "translation", _check_translation("EgoPose.translation", self.translation)
        )
        object.__setattr__(self, "timestamp_us", int(self.timestamp_us))

    @classmethod
    def identity(cls, timestamp_us: int = 0) -> EgoPose:
        return cls(timestamp_us=timestamp_us)

    @classmethod
    def from_yaw_position(
        cls,
        yaw: float,
        x: float,
        z: float,
        height: float = 1.5,
        timestamp_us: int = 0,
    ) -> EgoPose:
        """Pose of a reference frame at world (x, height, z), heading ``yaw`` about +Y."""
        r = rot_y(yaw).T
        origin = np.array([x, height, z])
        return cls(r, -r @ origin, timestamp_us)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, timestamp_us: int = 0) -> EgoPose:
        m = ensure_finite("EgoPose matrix", matrix)
        if m.shape != (4, 4):
            raise ShapeError(op="EgoPose.from_matrix", expected="(4, 4)", got=str(m.shape))
        return cls(m[:3, :3], m[:3, 3], timestamp_us)

    def to_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def inverse(self) -> EgoPose:
        rt = self.rotation.T
        return EgoPose(rt, -rt @ self.translation, self.timestamp_us)

    def compose(self, other: EgoPose) -> EgoPose:
        """Transform applying ``other`` first, then ``self``."""
        return EgoPose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
            self.timestamp_us,
        )

    def relative_to(self, other: EgoPose) -> EgoPose:
        """Map points from ``other``'s reference frame into this pose's reference frame."""
        return self.compose(other.inverse())

    def transform_points(self, points: Tensor | np.ndarray) -> np.ndarray:
        arr = _points_array(points, "EgoPose.transform_points")
        return arr @ self.rotation.T + self.translation

    def transform_vectors(self, vectors: np.ndarray) -> np.ndarray:
        """Rotate direction vectors (no translation)."""
        return np.asarray(vectors, dtype=np.float64) @ self.rotation.T


@dataclass(frozen=True, eq=False)
class CameraCalib:
    """
    Pinhole camera: intrinsics K (3x3, zero skew), reference->camera extrinsics
    (rotation, translation) and image size (H, W).
    """

    intrinsics: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray
    image_size: tuple[int, int]

    def __post_init__(self) -> None:
        k = ensure_finite("CameraCalib.intrinsics", self.intrinsics)
        if k.shape != (3, 3):
            raise ShapeError(op="CameraCalib", expected="(3, 3) intrinsics", got=str(k.shape))
        if k[0, 0] <= 0.0 or k[1, 1] <= 0.0:
            raise ValidationError("CameraCalib focal lengths fx, fy must be > 0.")
        if k[0, 1] != 0.0 or np.any(k[2] != (0.0, 0.0, 1.0)) or k[1, 0] != 0.0:
            raise ValidationError("CameraCalib intrinsics must be [[fx,0,cx],[0,fy,cy],[0,0,1]].")
        h, w = self.image_size
        object.__setattr__(self, "intrinsics", k)
        object.__setattr__(self, "rotation", _check_rotation("CameraCalib.rotation", self.rotation))
        object.__setattr__(
            self, "translation", _check_translation("CameraCalib.translation", self.translation)
        )
        object.__setattr__(
            self,
            "image_size",
            (validate_positive_int("image height", h), validate_positive_int("image width", w)),
        )

    @classmethod
    def from_params(
        cls,
        fx: float,
        fy: float,
        cx: float,
        cy: float,
        image_size: tuple[int, int],
        rotation: np.ndarray | None = None,
        translation: np.ndarray | None = None,
    ) -> CameraCalib:
        k = np.array([[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])
        return cls(
            k,
            np.eye(3) if rotation is None else rotation,
            np.zeros(3) if translation is None else translation,
            image_size,
        )

    @classmethod
    def from_matrix(
        cls, intrinsics: np.ndarray, extrinsics: np.ndarray, image_size: tuple[int, int]
    ) -> CameraCalib:
        """Build from K and a 4x4 reference->camera matrix."""
        e = ensure_finite("CameraCalib extrinsics", extrinsics)
        if e.shape != (4, 4):
            raise ShapeError(op="CameraCalib.from_matrix", expected="(4, 4)", got=str(e.shape))
        return cls(intrinsics, e[:3, :3], e[:3, 3], image_size)

    @property
    def fx(self) -> float:
        return float(self.intrinsics[0, 0])

    @property
    def fy(self) -> float:
        return float(self.intrinsics[1, 1])

    @property
    def cx(self) -> float:
        return float(self.intrinsics[0, 2])

    @property
    def cy(self) -> float:
        return float(self.intrinsics[1, 2])

    def extrinsics_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def scaled(self, factor: float) -> CameraCalib:
        """Calibration for a feature map downsampled by 1/factor (e.g. factor=1/8)."""
        k = self.intrinsics.copy()
        k[0] *= factor
        k[1] *= factor
        h, w = self.image_size
        return CameraCalib(
            k,
            self.rotation,
            self.translation,
            (max(1, int(round(h * factor))), max(1, int(round(w * factor)))),
        )


def project_to_image(
    points_ref: Tensor | np.ndarray, calib: CameraCalib
) -> tuple[Tensor, np.ndarray]:
    """
    Pinhole projection of reference-frame points.

    Returns pixels [N, 2] as (u, v) and a validity mask. A row is valid when
    its camera depth is > 0 and the pixel lies in [0, W-1] x [0, H-1];
    invalid rows carry pixel (0, 0).
    """
    arr = _points_array(points_ref, "project_to_image")
    cam = arr @ calib.rotation.T + calib.translation
    depth = cam[:, 2]
    in_front = depth > 0.0
    safe = np.where(in_front, depth, 1.0)
    u = calib.cx + calib.fx * cam[:, 0] / safe
    v = calib.cy - calib.fy * cam[:, 1] / safe
    h, w = calib.image_size
    valid = in_front & (u >= 0.0) & (u <= w - 1) & (v >= 0.0) & (v <= h - 1)
    pixels = np.where(valid[:, None], np.stack([u, v], axis=1), 0.0)
    return Tensor(pixels), valid


def _snap(values: np.ndarray) -> np.ndarray:
    nearest = np.round(values)
    return np.where(np.abs(values - nearest) < SNAP_TOL, nearest, values)


def warp_bev(prev_feat: Tensor, pose_prev: EgoPose, pose_curr: EgoPose, grid: BevGrid) -> Tensor:
    """
    Resample a previous-frame BEV map [C, nx, nz] into the current frame.

    Current cell centers (on y = 0) are mapped into the previous reference
    frame and bilinearly sampled; samples off the grid are zero.
    """
    if prev_feat.ndim != 3 or prev_feat.shape[1:] != (grid.nx, grid.nz):
        raise ShapeError(
            op="warp_bev", expected=f"[C, {grid.nx}, {grid.nz}]", got=str(prev_feat.shape)
        )
    centers = cell_centers_xz(grid).reshape(-1, 2)
    pts = np.stack([centers[:, 0], np.zeros(len(centers)), centers[:, 1]], axis=1)
    in_prev = pose_prev.relative_to(pose_curr).transform_points(pts)
    row = _snap((in_prev[:, 0] - grid.x_range[0]) / grid.cell_x - 0.5)
    col = _snap((in_prev[:, 2] - grid.z_range[0]) / grid.cell_z - 0.5)
    sampled = ops.bilinear_sample(prev_feat, lift(np.stack([col, row], axis=1)))
    c = prev_feat.shape[0]
    return ops.reshape(ops.transpose(sampled, (1, 0)), (c, grid.nx, grid.nz))
