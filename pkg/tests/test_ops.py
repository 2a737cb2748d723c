from __future__ import annotations

import numpy as np
import pytest

from motionbev import ops
from motionbev.exceptions import ShapeError, ValidationError
from motionbev.gradcheck import check_gradients
from motionbev.tensor import Tensor, make_rng

SEEDS = range(20)
TOL = 1e-4


def _leaf(rng: np.random.Generator, *shape: int) -> Tensor:
    return Tensor(rng.standard_normal(shape), requires_grad=True)


def _naive_conv(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, pad: int) -> np.ndarray:
    c_in, h, wd = x.shape
    c_out, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((c_out, ho, wo))
    for o in range(c_out):
        for r in range(ho):
            for c in range(wo):
                patch = xp[:, r * stride : r * stride + kh, c * stride : c * stride + kw]
                out[o, r, c] = np.sum(patch * w[o]) + b[o]
    return out


@pytest.mark.parametrize("stride,pad", [(1, 1), (2, 1), (1, 0), (2, 0)])
def test_conv2d_matches_naive_loop(stride: int, pad: int) -> None:
    rng = make_rng(0)
    x = rng.standard_normal((3, 7, 6))
    w = rng.standard_normal((4, 3, 3, 3))
    b = rng.standard_normal(4)
    out = ops.conv2d(Tensor(x), Tensor(w), Tensor(b), stride=stride, padding=pad)
    np.testing.assert_allclose(out.data, _naive_conv(x, w, b, stride, pad), atol=1e-12)


def test_conv2d_rejects_bad_shapes() -> None:
    with pytest.raises(ShapeError):
        ops.conv2d(Tensor(np.zeros((2, 4, 4))), Tensor(np.zeros((1, 3, 3, 3))))
    with pytest.raises(ValidationError):
        ops.conv2d(Tensor(np.zeros((1, 4, 4))), Tensor(np.zeros((1, 1, 2, 2))))
    with pytest.raises(ShapeError):
        ops.conv2d(Tensor(np.zeros((1, 2, 2))), Tensor(np.zeros((1, 1, 3, 3))))


@pytest.mark.parametrize("seed", SEEDS)
def test_conv2d_gradients(seed: int) -> None:
    rng = make_rng(seed, 1)
    x, w, b = _leaf(rng, 2, 5, 6), _leaf(rng, 3, 2, 3, 3), _leaf(rng, 3)
    stride = 1 + seed % 2
    report = check_gradients(lambda: ops.conv2d(x, w, b, stride=stride, padding=1), [x, w, b], seed=seed)
    assert report.passed(TOL), report


@pytest.mark.parametrize("seed", SEEDS)
def test_instance_norm_gradients(seed: int) -> None:
    rng = make_rng(seed, 2)
    x = _leaf(rng, 3, 4, 5)
    report = check_gradients(lambda: ops.instance_norm(x), [x], seed=seed)
    assert report.passed(TOL), report


def test_instance_norm_statistics() -> None:
    x = Tensor(make_rng(3).standard_normal((2, 6, 6)) * 5.0 + 2.0)
    out = ops.instance_norm(x, eps=0.0).data
    np.testing.assert_allclose(out.mean(axis=(1, 2)), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.var(axis=(1, 2)), 1.0, atol=1e-12)
    with pytest.raises(ShapeError):
        ops.instance_norm(Tensor(np.zeros((2, 1, 1))))


def test_bilinear_sample_values() -> None:
    feat = Tensor(np.arange(12, dtype=np.float64).reshape(1, 3, 4))
    pts = Tensor(np.array([[1.0, 2.0], [0.5, 0.0], [1.5, 1.5], [-1.0, 0.0], [3.5, 0.0]]))
    out = ops.bilinear_sample(feat, pts).data[:, 0]
    assert out[0] == pytest.approx(9.0)  # row 2, col 1
    assert out[1] == pytest.approx(0.5)
    assert out[2] == pytest.approx((5 + 6 + 9 + 10) / 4)
    assert out[3] == pytest.approx(0.0)
    # half the stencil falls off the right edge and reads zero
    assert out[4] == pytest.approx(1.5)


@pytest.mark.parametrize("seed", SEEDS)
def test_bilinear_sample_gradients(seed: int) -> None:
    rng = make_rng(seed, 3)
    feat = _leaf(rng, 2, 4, 5)
    pts = Tensor(
        np.stack([rng.uniform(-0.8, 4.8, 12), rng.uniform(-0.8, 3.8, 12)], axis=1),
        requires_grad=True,
    )
    report = check_gradients(lambda: ops.bilinear_sample(feat, pts), [feat, pts], seed=seed)
    assert report.passed(TOL), report


@pytest.mark.parametrize("seed", SEEDS)
def test_linear_softmax_sigmoid_gradients(seed: int) -> None:
    rng = make_rng(seed, 4)
    x, w, b = _leaf(rng, 4, 3), _leaf(rng, 5, 3), _leaf(rng, 5)

    def fn() -> Tensor:
        h = ops.linear(x, w, b)
        return ops.sigmoid(h) * ops.softmax(h, axis=1)

    report = check_gradients(fn, [x, w, b], seed=seed)
    assert report.passed(TOL), report


def test_sigmoid_is_stable_for_large_inputs() -> None:
    out = ops.sigmoid(Tensor(np.array([-1000.0, 0.0, 1000.0]))).data
    np.testing.assert_allclose(out, [0.0, 0.5, 1.0])


def test_softmax_rows_sum_to_one() -> None:
    out = ops.softmax(Tensor(make_rng(1).standard_normal((3, 4)) * 50.0), axis=1).data
    np.testing.assert_allclose(out.sum(axis=1), 1.0)


def test_getitem_fancy_index_accumulates_duplicates() -> None:
    x = Tensor(np.arange(4, dtype=np.float64), requires_grad=True)
    ops.sum(x[np.array([0, 0, 3])]).backward()
    np.testing.assert_allclose(x.grad, [2.0, 0.0, 0.0, 1.0])


def test_shape_ops_gradients() -> None:
    rng = make_rng(5)
    a, b = _leaf(rng, 2, 3, 4), _leaf(rng, 1, 3, 4)

    def fn() -> Tensor:
        cat = ops.concat_channels([a, b])
        moved = ops.transpose(ops.reshape(cat, (3, 12)), (1, 0))
        return ops.mean(ops.pad2d(cat, 1)[:, 1:3, :], axis=1) + ops.sum(moved, axis=0)[:, None]

    report = check_gradients(fn, [a, b], seed=5)
    assert report.passed(TOL), report


def test_concat_channels_rejects_mismatched_extents() -> None:
    with pytest.raises(ShapeError):
        ops.concat_channels([Tensor(np.zeros((1, 2, 2))), Tensor(np.zeros((1, 3, 2)))])


def test_upsample_nearest2x_roundtrip_gradient() -> None:
    x = Tensor(np.arange(4, dtype=np.float64).reshape(1, 2, 2), requires_grad=True)
    up = ops.upsample_nearest2x(x)
    assert up.shape == (1, 4, 4)
    assert up.data[0, 3, 3] == 3.0
    ops.sum(up).backward()
    np.testing.assert_allclose(x.grad, np.full((1, 2, 2), 4.0))
