"""
Deterministic synthetic driving scenes.

World frame: ground plane y = 0, ego starts at the origin heading +Z. The
ego reference frame sits ``camera_height`` above the ground, so the ground
is at y = -camera_height in reference coordinates. Keyframes are
``frame_interval_s`` apart; each carries ``sweeps_per_frame`` LiDAR and radar
sweeps captured ``sweep_interval_s`` apart, each in its own capture frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..boxes import Box3D
from ..encoders.camera import CameraBundle
from ..encoders.lidar import LidarSweep
from ..encoders.radar import RADAR_WIDTH, RadarSweep
from ..exceptions import SceneGenerationError, ValidationError
from ..geometry import CameraCalib, EgoPose, rot_y
from ..tensor import Tensor, make_rng
from ..validators import (
    validate_condition,
    validate_non_negative,
    validate_positive_int,
    validate_threshold,
)

PLACEMENT_TRIES = 200
# clearance around the ego vehicle and between boxes (m)
EGO_CLEARANCE = 3.0
BOX_GAP = 0.5
STATIC_RADAR_NOISE = 0.02
# height of LiDAR ground returns above the road (m)
LIDAR_GROUND_CLEARANCE = 0.25

_STREAM_LAYOUT = 0
_STREAM_FRAME = 1


@dataclass(frozen=True)
class SceneSpec:
    seed: int = 0
    num_frames: int = 4
    num_boxes: int = 6
    moving_fraction: float = 0.5
    ego_speed_mps: float = 5.0
    condition: str = "day"
    num_cams: int = 2
    image_size: tuple[int, int] = (64, 112)
    lidar_points_per_box: int = 64
    radar_points_per_box: int = 4
    ego_yaw_rate: float = 0.0
    lidar_ground_points: int = 256
    placement_extent: float = 40.0
    box_speed_range: tuple[float, float] = (3.0, 10.0)
    axis_aligned: bool = True
    frame_interval_s: float = 0.5
    sweep_interval_s: float = 0.1
    sweeps_per_frame: int = 5
    camera_height: float = 1.5

    def __post_init__(self) -> None:
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed!r}.")
        validate_positive_int("num_frames", self.num_frames, minv=2)
        validate_positive_int("num_boxes", self.num_boxes, minv=0)
        validate_threshold("moving_fraction", self.moving_fraction)
        validate_non_negative("ego_speed_mps", self.ego_speed_mps)
        object.__setattr__(self, "condition", validate_condition(self.condition))
        validate_positive_int("num_cams", self.num_cams)
        h, w = self.image_size
        if validate_positive_int("image height", h) % 16 or validate_positive_int("image width", w) % 16:
            raise ValidationError(f"image_size must be divisible by 16, got {self.image_size}.")
        validate_positive_int("lidar_points_per_box", self.lidar_points_per_box, minv=0)
        validate_positive_int("radar_points_per_box", self.radar_points_per_box, minv=0)
        validate_positive_int("lidar_ground_points", self.lidar_ground_points, minv=0)
        validate_positive_int("sweeps_per_frame", self.sweeps_per_frame)
        lo, hi = self.box_speed_range
        if validate_non_negative("box speed", lo) > validate_non_negative("box speed", hi):
            raise ValidationError(f"box_speed_range must be ordered, got {self.box_speed_range}.")
        for name in ("placement_extent", "frame_interval_s", "sweep_interval_s", "camera_height"):
            if validate_non_negative(name, getattr(self, name)) == 0.0:
                raise ValidationError(f"{name} must be > 0.")
        if not math.isfinite(self.ego_yaw_rate):
            raise ValidationError("ego_yaw_rate must be finite.")

    def keyframe_time(self, frame_index: int) -> float:
        return frame_index * self.frame_interval_s


@dataclass(frozen=True, eq=False)
class SceneFrame:
    """One keyframe: sensors, pose, and GT boxes in the keyframe reference frame."""

    scene_id: str
    frame_index: int
    timestamp_us: int
    cameras: CameraBundle
    lidar: tuple[LidarSweep, ...]
    radar: tuple[RadarSweep, ...]
    pose: EgoPose
    boxes: tuple[Box3D, ...]
    condition: str = "day"

    @property
    def key(self) -> str:
        return f"{self.scene_id}_{self.frame_index:04d}"


@dataclass(frozen=True)
class _BoxTrack:
    origin: np.ndarray  # world (x, z) at t = 0
    size: np.ndarray
    yaw: float
    speed: float
    moving: bool
    color: np.ndarray

    def center_at(self, t: float) -> np.ndarray:
        step = self.speed * t if self.moving else 0.0
        return self.origin + step * np.array([math.sin(self.yaw), math.cos(self.yaw)])

    def velocity(self) -> np.ndarray:
        if not self.moving:
            return np.zeros(2)
        return self.speed * np.array([math.sin(self.yaw), math.cos(self.yaw)])

    @property
    def radius(self) -> float:
        return 0.5 * math.hypot(self.size[0], self.size[1])


def _ego_xz(spec: SceneSpec, t: float) -> tuple[float, float, float]:
    """World (x, z, yaw) of the ego on its constant-speed, constant-yaw-rate arc."""
    v, w = spec.ego_speed_mps, spec.ego_yaw_rate
    if abs(w) < 1e-12:
        return 0.0, v * t, 0.0
    return (v / w) * (1.0 - math.cos(w * t)), (v / w) * math.sin(w * t), w * t


def ego_pose_at(spec: SceneSpec, t: float) -> EgoPose:
    x, z, yaw = _ego_xz(spec, t)
    return EgoPose.from_yaw_position(yaw, x, z, spec.camera_height, int(round(t * 1e6)))


def ego_velocity_at(spec: SceneSpec, t: float) -> np.ndarray:
    """World (vx, vz) of the ego."""
    yaw = spec.ego_yaw_rate * t
    return spec.ego_speed_mps * np.array([math.sin(yaw), math.cos(yaw)])


def _layout(spec: SceneSpec) -> list[_BoxTrack]:
    rng = make_rng(spec.seed, _STREAM_LAYOUT)
    n_moving = int(round(spec.moving_fraction * spec.num_boxes))
    moving_flags = np.zeros(spec.num_boxes, dtype=bool)
    moving_flags[rng.permutation(spec.num_boxes)[:n_moving]] = True
    times = [spec.keyframe_time(f) for f in range(spec.num_frames)]
    ego_positions = [np.array(_ego_xz(spec, t)[:2]) for t in times]

    tracks: list[_BoxTrack] = []
    for i in range(spec.num_boxes):
        for _ in range(PLACEMENT_TRIES):
            if spec.axis_aligned:
                yaw = float(rng.integers(4)) * math.pi / 2.0
            else:
                yaw = float(rng.uniform(-math.pi, math.pi))
            candidate = _BoxTrack(
                origin=rng.uniform(-spec.placement_extent, spec.placement_extent, size=2),
                size=np.array(
                    [rng.uniform(3.8, 5.0), rng.uniform(1.7, 2.1), rng.uniform(1.4, 1.9)]
                ),
                yaw=yaw,
                speed=float(rng.uniform(*spec.box_speed_range)) if moving_flags[i] else 0.0,
                moving=bool(moving_flags[i]),
                color=rng.uniform(0.2, 0.9, size=3),
            )
            if _is_clear(candidate, tracks, times, ego_positions):
                tracks.append(candidate)
                break
        else:
            raise SceneGenerationError(
                f"Could not place box {i + 1} of {spec.num_boxes} without overlap "
                f"after {PLACEMENT_TRIES} tries; reduce num_boxes or enlarge placement_extent."
            )
    return tracks


def _is_clear(
    candidate: _BoxTrack,
    placed: list[_BoxTrack],
    times: list[float],
    ego_positions: list[np.ndarray],
) -> bool:
    for t, ego in zip(times, ego_positions):
        center = candidate.center_at(t)
        if np.linalg.norm(center - ego) < candidate.radius + EGO_CLEARANCE:
            return False
        for other in placed:
            gap = np.linalg.norm(center - other.center_at(t))
            if gap < candidate.radius + other.radius + BOX_GAP:
                return False
    return True


def box_states_at(spec: SceneSpec, t: float) -> list[Box3D]:
    """World-frame boxes at time ``t`` (bottom-face centers on y = 0)."""
    return [_box_from_track(track, t) for track in _layout(spec)]


def _box_from_track(track: _BoxTrack, t: float) -> Box3D:
    x, z = track.center_at(t)
    return Box3D(
        center=np.array([x, 0.0, z]),
        size=track.size,
        yaw=track.yaw,
        velocity=track.velocity(),
        moving=track.moving,
        color=track.color,
    )


def boxes_in_frame(boxes: list[Box3D], pose: EgoPose, ego_yaw: float) -> list[Box3D]:
    """Express world boxes in the reference frame of ``pose`` (heading ``ego_yaw``)."""
    out = []
    for box in boxes:
        vel = pose.transform_vectors(np.array([box.velocity[0], 0.0, box.velocity[1]]))
        out.append(
            Box3D(
                center=pose.transform_points(box.center[None])[0],
                size=box.size,
                yaw=box.yaw - ego_yaw,
                velocity=np.array([vel[0], vel[2]]),
                moving=box.moving,
                color=box.color,
            )
        )
    return out


def reference_boxes_at(spec: SceneSpec, t: float) -> list[Box3D]:
    """Boxes at ``t`` in the ego reference frame at ``t``."""
    return boxes_in_frame(box_states_at(spec, t), ego_pose_at(spec, t), _ego_xz(spec, t)[2])


def camera_rig(spec: SceneSpec) -> list[CameraCalib]:
    """
    ``num_cams`` cameras at the reference origin, evenly spaced in yaw,
    horizontal field of view min(360/n, 120) degrees, square pixels.
    """
    h, w = spec.image_size
    fov = math.radians(min(360.0 / spec.num_cams, 120.0))
    f = w / (2.0 * math.tan(fov / 2.0))
    rig = []
    for c in range(spec.num_cams):
        yaw = 2.0 * math.pi * c / spec.num_cams
        rig.append(CameraCalib.from_params(f, f, w / 2.0, h / 2.0, (h, w), rotation=rot_y(yaw).T))
    return rig


def _face_frames(box: Box3D) -> list[tuple[np.ndarray, np.ndarray, np.ndarray, float]]:
    """(origin, axis_u, axis_v, area) for the top and four side faces."""
    length, width, height = box.size
    s, c = math.sin(box.yaw), math.cos(box.yaw)
    fwd = np.array([s, 0.0, c])
    side = np.array([c, 0.0, -s])
    up = np.array([0.0, 1.0, 0.0])
    base = box.center
    faces = [
        (base + up * height - fwd * length / 2 - side * width / 2, fwd * length, side * width),
        (base + fwd * length / 2 - side * width / 2, side * width, up * height),
        (base - fwd * length / 2 - side * width / 2, side * width, up * height),
        (base + side * width / 2 - fwd * length / 2, fwd * length, up * height),
        (base - side * width / 2 - fwd * length / 2, fwd * length, up * height),
    ]
    return [(o, u, v, float(np.linalg.norm(u) * np.linalg.norm(v))) for o, u, v in faces]


def sample_box_surface(
    box: Box3D, count: int, rng: np.random.Generator, sides_only: bool = False
) -> np.ndarray:
    """Uniform area-weighted samples on the top and side faces (sides only for radar)."""
    faces = _face_frames(box)[1:] if sides_only else _face_frames(box)
    if count == 0:
        return np.zeros((0, 3))
    areas = np.array([f[3] for f in faces])
    choice = rng.choice(len(faces), size=count, p=areas / areas.sum())
    uv = rng.uniform(0.0, 1.0, size=(count, 2))
    if sides_only:
        uv[:, 1] = 0.3 + 0.4 * uv[:, 1]
    origins = np.array([faces[j][0] for j in choice])
    us = np.array([faces[j][1] for j in choice])
    vs = np.array([faces[j][2] for j in choice])
    return origins + us * uv[:, :1] + vs * uv[:, 1:]


def _lidar_sweep(
    spec: SceneSpec, boxes: list[Box3D], pose: EgoPose, index: int, rng: np.random.Generator
) -> LidarSweep:
    clouds = [sample_box_surface(b, spec.lidar_points_per_box, rng) for b in boxes]
    n = spec.lidar_ground_points
    radius = (spec.placement_extent + 10.0) * np.sqrt(rng.uniform(0.0, 1.0, n))
    theta = rng.uniform(0.0, 2.0 * math.pi, n)
    ground_y = np.full(n, LIDAR_GROUND_CLEARANCE - spec.camera_height)
    ground = np.stack([radius * np.sin(theta), ground_y, radius * np.cos(theta)], axis=1)
    return LidarSweep(np.concatenate([*clouds, ground], axis=0), sweep_index=index, pose=pose)


def _radar_sweep(
    spec: SceneSpec,
    boxes: list[Box3D],
    pose: EgoPose,
    ego_velocity: np.ndarray,
    index: int,
    rng: np.random.Generator,
) -> RadarSweep:
    """
    Radar points on box sides. Columns 3-4 carry the radial velocity relative
    to the ego, 5-6 the ground-relative (compensated) radial velocity, 7 the
    footprint area as a cross-section proxy. Radial means along the ground
    plane direction from the sensor to the point.
    """
    rows = []
    for box in boxes:
        pts = sample_box_surface(box, spec.radar_points_per_box, rng, sides_only=True)
        if len(pts) == 0:
            continue
        radial = pts[:, [0, 2]]
        norm = np.linalg.norm(radial, axis=1, keepdims=True)
        radial = np.where(norm > 0.0, radial / np.where(norm > 0.0, norm, 1.0), [0.0, 1.0])
        comp = (radial @ box.velocity)[:, None] * radial
        raw = (radial @ (box.velocity - ego_velocity))[:, None] * radial
        if not box.moving:
            noise = rng.normal(0.0, STATIC_RADAR_NOISE, size=comp.shape)
            comp = comp + noise
            raw = raw + noise
        block = np.zeros((len(pts), RADAR_WIDTH))
        block[:, 0:3] = pts
        block[:, 3:5] = raw
        block[:, 5:7] = comp
        block[:, 7] = box.size[0] * box.size[1]
        rows.append(block)
    points = np.concatenate(rows, axis=0) if rows else np.zeros((0, RADAR_WIDTH))
    return RadarSweep(points, sweep_index=index, pose=pose)


def generate_scene(spec: SceneSpec, scene_id: str = "scene0000") -> list[SceneFrame]:
    """
    Render every keyframe of ``spec``.

    Each frame draws from its own (seed, frame) random stream, so frames are
    independent of generation order.
    """
    from .conditions import apply_condition
    from .render import render_camera

    tracks = _layout(spec)
    rig = camera_rig(spec)
    frames = []
    for f in range(spec.num_frames):
        rng = make_rng(spec.seed, _STREAM_FRAME, f)
        t = spec.keyframe_time(f)
        lidar, radar = [], []
        for j in range(spec.sweeps_per_frame):
            ts = t - j * spec.sweep_interval_s
            pose_s = ego_pose_at(spec, ts)
            yaw_s = _ego_xz(spec, ts)[2]
            world = [_box_from_track(track, ts) for track in tracks]
            local = boxes_in_frame(world, pose_s, yaw_s)
            ev = ego_velocity_at(spec, ts)
            ego_v = pose_s.transform_vectors(np.array([ev[0], 0.0, ev[1]]))
            lidar.append(_lidar_sweep(spec, local, pose_s, j, rng))
            radar.append(_radar_sweep(spec, local, pose_s, ego_v[[0, 2]], j, rng))

        pose = ego_pose_at(spec, t)
        boxes = boxes_in_frame([_box_from_track(track, t) for track in tracks], pose, _ego_xz(spec, t)[2])
        images = [Tensor(render_camera(calib, boxes, pose, spec.camera_height)) for calib in rig]
        frame = SceneFrame(
            scene_id=scene_id,
            frame_index=f,
            timestamp_us=pose.timestamp_us,
            cameras=CameraBundle(images, rig),
            lidar=tuple(lidar),
            radar=tuple(radar),
            pose=pose,
            boxes=tuple(boxes),
            condition="day",
        )
        frames.append(apply_condition(frame, spec.condition, seed=spec.seed))
    return frames
