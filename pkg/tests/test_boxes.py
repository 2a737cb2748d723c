from __future__ import annotations

import math

import numpy as np
import pytest

from motionbev.boxes import (
    BOX_COLUMNS,
    Box3D,
    boxes_from_array,
    boxes_to_array,
    boxes_to_mask,
)
from motionbev.exceptions import NonFiniteError, ShapeError
from motionbev.geometry import BevGrid

GRID = BevGrid(x_range=(-5.0, 5.0), y_range=(-1.5, 2.5), z_range=(-5.0, 5.0), nx=10, ny=1, nz=10)


def _box(**kwargs) -> Box3D:
    defaults = {"center": np.zeros(3), "size": np.array([2.0, 2.0, 1.5]), "moving": True}
    defaults.update(kwargs)
    return Box3D(**defaults)


def test_axis_aligned_box_covers_expected_cells() -> None:
    gt = boxes_to_mask([_box()], GRID)
    expected = np.zeros((10, 10))
    expected[4:6, 4:6] = 1.0
    np.testing.assert_array_equal(gt.mask, expected)
    assert gt.distance.shape == (10, 10)
    assert gt.distance[4, 4] == pytest.approx(math.hypot(0.5, 0.5))


def test_rotated_box_follows_heading() -> None:
    box = _box(size=np.array([4.0, 2.0, 1.5]), yaw=math.pi / 2)
    np.testing.assert_allclose(box.heading, [1.0, 0.0], atol=1e-12)
    gt = boxes_to_mask([box], GRID)
    expected = np.zeros((10, 10))
    expected[3:7, 4:6] = 1.0
    np.testing.assert_array_equal(gt.mask, expected)


def test_footprint_is_half_open() -> None:
    box = _box(size=np.array([2.0, 2.0, 1.0]))
    # a = dz, b = dx at yaw 0
    pts = np.array([[0.0, -1.0], [0.0, 1.0], [-1.0, 0.0], [1.0, 0.0]])
    assert box.footprint_contains(pts).tolist() == [True, False, True, False]


def test_static_boxes_are_not_marked() -> None:
    gt = boxes_to_mask([_box(moving=False)], GRID)
    assert not gt.mask.any()


def test_degenerate_box_warns_and_is_skipped() -> None:
    with pytest.warns(RuntimeWarning, match="degenerate"):
        gt = boxes_to_mask([_box(size=np.array([0.0, 2.0, 1.0])), _box()], GRID)
    assert gt.mask.sum() == 4


def test_corners_bottom_then_top() -> None:
    box = _box(center=np.array([1.0, -1.5, 2.0]), size=np.array([4.0, 2.0, 1.5]))
    corners = box.corners()
    assert corners.shape == (8, 3)
    np.testing.assert_allclose(corners[:4, 1], -1.5)
    np.testing.assert_allclose(corners[4:, 1], 0.0)
    np.testing.assert_allclose(corners[0], [2.0, -1.5, 4.0])
    np.testing.assert_allclose(corners[2], [0.0, -1.5, 0.0])


def test_array_round_trip_keeps_fields() -> None:
    box = _box(
        center=np.array([1.0, -1.5, 3.0]),
        yaw=0.3,
        velocity=np.array([2.0, -1.0]),
        color=np.array([0.1, 0.2, 0.3]),
    )
    arr = boxes_to_array([box, _box(moving=False)])
    assert arr.shape == (2, len(BOX_COLUMNS))
    back = boxes_from_array(arr)
    assert back[0].moving and not back[1].moving
    np.testing.assert_array_equal(back[0].to_array(), box.to_array())
    assert boxes_to_array([]).shape == (0, len(BOX_COLUMNS))


def test_box_validation() -> None:
    with pytest.raises(NonFiniteError):
        _box(center=np.array([np.nan, 0.0, 0.0]))
    with pytest.raises(ShapeError):
        Box3D.from_array(np.zeros(5))
