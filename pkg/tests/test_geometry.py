from __future__ import annotations

import math

import numpy as np
import pytest

from motionbev.exceptions import ShapeError, ValidationError
from motionbev.geometry import (
    BevGrid,
    CameraCalib,
    EgoPose,
    cell_centers_xz,
    cell_distance_map,
    metric_to_index,
    project_to_image,
    rot_y,
    voxel_centers,
    warp_bev,
)
from motionbev.gradcheck import check_gradients
from motionbev.tensor import Tensor, make_rng

SMALL = BevGrid(x_range=(-5.0, 5.0), y_range=(-1.5, 0.5), z_range=(-5.0, 5.0), nx=10, ny=2, nz=10)


def _calib() -> CameraCalib:
    return CameraCalib.from_params(100.0, 100.0, 50.0, 40.0, (80, 100))


def test_default_and_desk_grids() -> None:
    grid = BevGrid()
    assert (grid.nx, grid.ny, grid.nz) == (200, 8, 200)
    assert grid.cell_xz == pytest.approx(0.5)
    assert grid.cell_y == pytest.approx(1.25)
    desk = BevGrid.desk()
    assert (desk.nx, desk.ny, desk.nz) == (100, 4, 100)
    assert desk.cell_xz == pytest.approx(1.0)


def test_grid_validation() -> None:
    with pytest.raises(ValidationError):
        BevGrid(nx=100, nz=200)
    with pytest.raises(ValidationError):
        BevGrid(x_range=(1.0, -1.0))
    with pytest.raises(ValidationError):
        BevGrid(ny=0)


def test_voxel_centers_row_order() -> None:
    centers = voxel_centers(SMALL).data
    assert centers.shape == (SMALL.num_voxels, 3)
    i, j, k = 7, 1, 3
    row = (i * SMALL.ny + j) * SMALL.nz + k
    np.testing.assert_allclose(centers[row], [-5.0 + 7.5, -1.5 + 1.5, -5.0 + 3.5])


def test_metric_to_index_is_half_open() -> None:
    pts = np.array([[-5.0, -1.5, -5.0], [4.999, 0.0, 0.0], [5.0, 0.0, 0.0], [0.0, 0.5, 0.0]])
    idx, inside = metric_to_index(SMALL, pts)
    assert idx[0].tolist() == [0, 0, 0]
    assert idx[1, 0] == 9
    assert inside.tolist() == [True, True, False, False]


def test_cell_centers_and_distance() -> None:
    centers = cell_centers_xz(SMALL)
    assert centers.shape == (10, 10, 2)
    np.testing.assert_allclose(centers[0, 9], [-4.5, 4.5])
    assert cell_distance_map(SMALL)[5, 5] == pytest.approx(math.hypot(0.5, 0.5))


def test_project_to_image_examples() -> None:
    pts = np.array([[0.0, 0.0, 10.0], [1.0, 1.0, 10.0], [0.0, 0.0, -5.0], [-10.0, 0.0, 1.0]])
    pixels, valid = project_to_image(pts, _calib())
    assert valid.tolist() == [True, True, False, False]
    np.testing.assert_allclose(pixels.data[0], [50.0, 40.0])
    np.testing.assert_allclose(pixels.data[1], [60.0, 30.0])
    np.testing.assert_array_equal(pixels.data[2:], 0.0)


def test_project_to_image_edges_are_inclusive() -> None:
    pts = np.array([[49.0, -39.0, 100.0], [50.0, 0.0, 100.0]])
    _, valid = project_to_image(pts, _calib())
    assert valid.tolist() == [True, False]


def test_camera_calib_scaled_and_matrix() -> None:
    calib = CameraCalib.from_params(80.0, 64.0, 56.0, 32.0, (64, 112), rotation=rot_y(0.3).T)
    small = calib.scaled(1.0 / 8.0)
    assert small.image_size == (8, 14)
    assert small.fx == pytest.approx(10.0)
    assert small.cy == pytest.approx(4.0)
    rebuilt = CameraCalib.from_matrix(calib.intrinsics, calib.extrinsics_matrix(), (64, 112))
    np.testing.assert_allclose(rebuilt.rotation, calib.rotation)


def test_camera_calib_rejects_bad_input() -> None:
    with pytest.raises(ValidationError):
        CameraCalib.from_params(-1.0, 1.0, 0.0, 0.0, (4, 4))
    with pytest.raises(ValidationError):
        CameraCalib.from_params(1.0, 1.0, 0.0, 0.0, (4, 4), rotation=np.diag([1.0, 1.0, 2.0]))
    with pytest.raises(ShapeError):
        CameraCalib.from_matrix(np.eye(3), np.eye(3), (4, 4))


def test_ego_pose_inverse_and_relative() -> None:
    a = EgoPose.from_yaw_position(0.4, 3.0, -2.0)
    b = EgoPose.from_yaw_position(-1.1, -7.0, 5.0)
    pts = make_rng(0).standard_normal((5, 3))
    np.testing.assert_allclose(a.inverse().transform_points(a.transform_points(pts)), pts, atol=1e-12)
    world = b.inverse().transform_points(pts)
    np.testing.assert_allclose(a.relative_to(b).transform_points(pts), a.transform_points(world), atol=1e-12)
    np.testing.assert_allclose(EgoPose.from_matrix(a.to_matrix()).translation, a.translation)


def test_ego_pose_places_reference_origin() -> None:
    pose = EgoPose.from_yaw_position(0.0, 2.0, 3.0, height=1.5)
    np.testing.assert_allclose(pose.transform_points(np.array([[2.0, 1.5, 3.0]])), [[0.0, 0.0, 0.0]])
    # ground sits 1.5 m below the reference origin
    assert pose.transform_points(np.array([[2.0, 0.0, 10.0]]))[0, 1] == pytest.approx(-1.5)


def test_warp_identity_is_exact() -> None:
    feat = Tensor(make_rng(1).standard_normal((3, 10, 10)))
    pose = EgoPose.from_yaw_position(0.7, 4.0, 1.0)
    np.testing.assert_array_equal(warp_bev(feat, pose, pose, SMALL).data, feat.data)


def test_warp_integer_forward_shift() -> None:
    prev = make_rng(2).standard_normal((2, 10, 10))
    pose_prev = EgoPose.from_yaw_position(0.0, 0.0, 0.0)
    pose_curr = EgoPose.from_yaw_position(0.0, 0.0, 2.0)
    out = warp_bev(Tensor(prev), pose_prev, pose_curr, SMALL).data
    np.testing.assert_allclose(out[:, :, :8], prev[:, :, 2:], atol=1e-12)
    np.testing.assert_array_equal(out[:, :, 8:], 0.0)


def test_warp_quarter_turn_is_a_permutation() -> None:
    prev = make_rng(3).standard_normal((1, 10, 10))
    pose_prev = EgoPose.from_yaw_position(0.0, 0.0, 0.0)
    pose_curr = EgoPose.from_yaw_position(math.pi / 2, 0.0, 0.0)
    out = warp_bev(Tensor(prev), pose_prev, pose_curr, SMALL).data
    expected = np.empty_like(prev)
    for i in range(10):
        for k in range(10):
            expected[0, i, k] = prev[0, k, 9 - i]
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_warp_rejects_wrong_extent() -> None:
    with pytest.raises(ShapeError):
        warp_bev(Tensor(np.zeros((1, 9, 10))), EgoPose(), EgoPose(), SMALL)


@pytest.mark.parametrize("seed", range(3))
def test_warp_gradients(seed: int) -> None:
    feat = Tensor(make_rng(seed, 5).standard_normal((2, 10, 10)), requires_grad=True)
    pose_prev = EgoPose.from_yaw_position(0.1, 0.3, 0.0)
    pose_curr = EgoPose.from_yaw_position(0.0, 0.0, 1.37)
    report = check_gradients(lambda: warp_bev(feat, pose_prev, pose_curr, SMALL), [feat], seed=seed)
    assert report.passed(1e-4), report
