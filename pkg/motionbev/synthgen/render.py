"""Flat-shaded box rasterizer over a checkered ground plane."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from ..boxes import Box3D
from ..geometry import CameraCalib, EgoPose

SKY = np.array([0.55, 0.70, 0.90])
GROUND_DARK = np.array([0.33, 0.33, 0.31])
GROUND_LIGHT = np.array([0.45, 0.45, 0.43])
CHECKER_M = 2.0
NEAR_PLANE = 0.05

# corner quads of Box3D.corners() and their flat shade factor
_FACES: tuple[tuple[tuple[int, int, int, int], float], ...] = (
    ((4, 5, 6, 7), 1.0),
    ((0, 1, 2, 3), 0.4),
    ((0, 1, 5, 4), 0.75),
    ((2, 3, 7, 6), 0.75),
    ((1, 2, 6, 5), 0.6),
    ((3, 0, 4, 7), 0.6),
)


def _background(calib: CameraCalib, pose: EgoPose, camera_height: float) -> np.ndarray:
    h, w = calib.image_size
    v, u = np.mgrid[0:h, 0:w].astype(np.float64)
    d_cam = np.stack(
        [(u - calib.cx) / calib.fx, -(v - calib.cy) / calib.fy, np.ones_like(u)], axis=-1
    )
    d_ref = d_cam @ calib.rotation  # R^T d for row vectors
    origin = -calib.rotation.T @ calib.translation

    image = np.broadcast_to(SKY, (h, w, 3)).copy()
    down = d_ref[..., 1] < 0.0
    dist = np.where(down, (-camera_height - origin[1]) / np.where(down, d_ref[..., 1], -1.0), 0.0)
    hit = origin + d_ref * dist[..., None]
    ground = down & (dist > 0.0)
    if np.any(ground):
        world = pose.inverse().transform_points(hit[ground])
        parity = (np.floor(world[:, 0] / CHECKER_M) + np.floor(world[:, 2] / CHECKER_M)) % 2
        image[ground] = np.where(parity[:, None] > 0.5, GROUND_LIGHT, GROUND_DARK)
    return image


def _fill_convex(image: np.ndarray, poly: np.ndarray, color: np.ndarray) -> None:
    h, w = image.shape[:2]
    x0 = max(int(np.floor(poly[:, 0].min())), 0)
    x1 = min(int(np.ceil(poly[:, 0].max())), w - 1)
    y0 = max(int(np.floor(poly[:, 1].min())), 0)
    y1 = min(int(np.ceil(poly[:, 1].max())), h - 1)
    if x0 > x1 or y0 > y1:
        return
    ys, xs = np.mgrid[y0 : y1 + 1, x0 : x1 + 1].astype(np.float64)
    nxt = np.roll(poly, -1, axis=0)
    area = np.sum(poly[:, 0] * nxt[:, 1] - nxt[:, 0] * poly[:, 1])
    if area == 0.0:
        return
    inside = np.ones_like(xs, dtype=bool)
    for (ax, ay), (bx, by) in zip(poly, nxt):
        cross = (bx - ax) * (ys - ay) - (by - ay) * (xs - ax)
        inside &= cross * np.sign(area) >= 0.0
    image[y0 : y1 + 1, x0 : x1 + 1][inside] = color


def render_camera(
    calib: CameraCalib,
    boxes: Sequence[Box3D],
    pose: EgoPose,
    camera_height: float = 1.5,
) -> np.ndarray:
    """
    Render reference-frame ``boxes`` as seen by ``calib``; returns [3, H, W] in [0, 1].

    Boxes are drawn far to near, back faces culled, faces touching the near
    plane skipped.
    """
    image = _background(calib, pose, camera_height)
    origin = -calib.rotation.T @ calib.translation
    order = sorted(
        range(len(boxes)),
        key=lambda i: -float(np.linalg.norm(boxes[i].center - origin)),
    )
    for i in order:
        box = boxes[i]
        corners = box.corners()
        centroid = corners.mean(axis=0)
        cam = corners @ calib.rotation.T + calib.translation
        for quad, shade in _FACES:
            idx = list(quad)
            face_center = corners[idx].mean(axis=0)
            if np.dot(face_center - centroid, face_center - origin) >= 0.0:
                continue
            if np.any(cam[idx, 2] <= NEAR_PLANE):
                continue
            z = cam[idx, 2]
            poly = np.stack(
                [calib.cx + calib.fx * cam[idx, 0] / z, calib.cy - calib.fy * cam[idx, 1] / z],
                axis=1,
            )
            _fill_convex(image, poly, np.clip(box.color * shade, 0.0, 1.0))
    return np.ascontiguousarray(image.transpose(2, 0, 1))
