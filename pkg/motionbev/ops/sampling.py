from __future__ import annotations

import numpy as np

from ..exceptions import ShapeError
from ..tensor import Tensor, record

# corner offsets (dx, dy) in the order 00, 10, 01, 11
_CORNERS: tuple[tuple[int, int], ...] = ((0, 0), (1, 0), (0, 1), (1, 1))


def bilinear_sample(feature: Tensor, points: Tensor) -> Tensor:
    """
    Sample a [C, H, W] map at continuous pixel positions.

    ``points`` is [N, 2] holding (x, y) with x along W (columns) and y along H
    (rows). Corners outside the map read as zero. Returns [N, C].
    """
    if feature.ndim != 3:
        raise ShapeError(op="bilinear_sample", expected="feature [C, H, W]", got=str(feature.shape))
    if points.ndim != 2 or points.shape[1] != 2:
        raise ShapeError(op="bilinear_sample", expected="points [N, 2]", got=str(points.shape))

    c, h, w = feature.shape
    px = points.data[:, 0]
    py = points.data[:, 1]
    x0 = np.floor(px)
    y0 = np.floor(py)
    fx = px - x0
    fy = py - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    flat = feature.data.reshape(c, h * w)

    indices: list[np.ndarray] = []
    inside: list[np.ndarray] = []
    values: list[np.ndarray] = []
    for dx, dy in _CORNERS:
        xc = x0 + dx
        yc = y0 + dy
        ok = (xc >= 0) & (xc <= w - 1) & (yc >= 0) & (yc <= h - 1)
        idx = np.where(ok, yc * w + xc, 0)
        indices.append(idx)
        inside.append(ok)
        values.append(flat[:, idx].T * ok[:, None])

    weights = (
        (1.0 - fx) * (1.0 - fy),
        fx * (1.0 - fy),
        (1.0 - fx) * fy,
        fx * fy,
    )
    out = np.zeros((points.shape[0], c))
    for wgt, val in zip(weights, values):
        out += wgt[:, None] * val

    def backward(g: np.ndarray):
        gflat = np.zeros((h * w, c))
        for wgt, idx, ok in zip(weights, indices, inside):
            np.add.at(gflat, idx[ok], g[ok] * wgt[ok, None])
        gfeat = gflat.T.reshape(c, h, w)

        v00, v10, v01, v11 = values
        d_dx = (1.0 - fy)[:, None] * (v10 - v00) + fy[:, None] * (v11 - v01)
        d_dy = (1.0 - fx)[:, None] * (v01 - v00) + fx[:, None] * (v11 - v10)
        gpts = np.stack([(g * d_dx).sum(axis=1), (g * d_dy).sum(axis=1)], axis=1)
        return gfeat, gpts

    return record(out, (feature, points), backward, "bilinear_sample")
