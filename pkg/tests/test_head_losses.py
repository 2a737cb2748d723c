from __future__ import annotations

import math

import numpy as np
import pytest

from motionbev.boxes import GtMask
from motionbev.exceptions import ShapeError
from motionbev.gradcheck import check_gradients
from motionbev.head import Decoder, SegmentationOutput, decode
from motionbev.losses import PROB_EPS, bce_loss
from motionbev.tensor import Tensor, make_rng

SEEDS = range(20)


def test_decode_shapes_and_probabilities() -> None:
    rng = make_rng(0)
    decoder = Decoder(5, 3, rng)
    out = decoder(Tensor(rng.standard_normal((5, 6, 4))))
    assert isinstance(out, SegmentationOutput)
    assert out.logits.shape == (1, 6, 4)
    assert out.probs.shape == (1, 6, 4)
    np.testing.assert_allclose(out.probs.data, 1.0 / (1.0 + np.exp(-out.logits.data)))


def test_decode_rejects_flat_input() -> None:
    decoder = Decoder(2, 2, make_rng(0))
    with pytest.raises(ShapeError):
        decode(Tensor(np.zeros((2, 4))), decoder)


def test_bce_value_at_half() -> None:
    probs = Tensor(np.full((1, 3, 2), 0.5))
    gt = np.array([[1, 0], [0, 1], [1, 1]], dtype=np.float64)
    assert bce_loss(probs, gt).item() == pytest.approx(math.log(2.0))


def test_bce_accepts_gt_mask() -> None:
    mask = np.zeros((2, 2))
    mask[0, 0] = 1.0
    gt = GtMask(mask=mask, distance=np.zeros((2, 2)))
    probs = Tensor(np.array([[[0.9, 0.2], [0.1, 0.3]]]))
    expected = -(math.log(0.9) + math.log(0.8) + math.log(0.9) + math.log(0.7)) / 4
    assert bce_loss(probs, gt).item() == pytest.approx(expected)


def test_bce_clamps_saturated_probabilities() -> None:
    probs = Tensor(np.array([[[0.0, 1.0, 0.5]]]), requires_grad=True)
    gt = np.array([[1.0, 0.0, 1.0]])
    loss = bce_loss(probs, gt)
    expected = (-2.0 * math.log(PROB_EPS) - math.log(0.5)) / 3
    assert loss.item() == pytest.approx(expected)
    loss.backward()
    assert probs.grad[0, 0, 0] == 0.0
    assert probs.grad[0, 0, 1] == 0.0
    assert probs.grad[0, 0, 2] == pytest.approx(-2.0 / 3)


def test_bce_shape_mismatch() -> None:
    with pytest.raises(ShapeError):
        bce_loss(Tensor(np.full((1, 2, 2), 0.5)), np.zeros((2, 3)))
    with pytest.raises(ShapeError):
        bce_loss(Tensor(np.full((2, 2, 2), 0.5)), np.zeros((2, 2)))


@pytest.mark.parametrize("seed", SEEDS)
def test_bce_gradients(seed: int) -> None:
    rng = make_rng(seed, 8)
    probs = Tensor(rng.uniform(0.05, 0.95, size=(1, 4, 3)), requires_grad=True)
    gt = (rng.uniform(size=(4, 3)) > 0.5).astype(np.float64)
    report = check_gradients(lambda: bce_loss(probs, gt), [probs], seed=seed)
    assert report.passed(1e-5), report


@pytest.mark.parametrize("seed", SEEDS)
def test_decoder_loss_gradients(seed: int) -> None:
    rng = make_rng(seed, 9)
    decoder = Decoder(3, 2, rng)
    feat = Tensor(rng.standard_normal((3, 4, 4)), requires_grad=True)
    gt = (rng.uniform(size=(4, 4)) > 0.5).astype(np.float64)
    inputs = [feat, *decoder.parameters()]
    report = check_gradients(lambda: bce_loss(decoder(feat).probs, gt), inputs, seed=seed, probes=40)
    assert report.passed(1e-4), report
