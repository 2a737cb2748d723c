from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops
from .exceptions import ShapeError
from .nn import Conv2d, Module
from .tensor import Tensor


@dataclass(frozen=True)
class SegmentationOutput:
    logits: Tensor
    probs: Tensor


class Decoder(Module):
    """3x3 conv (padding 1) + relu, then 1x1 conv to a single logit channel."""

    def __init__(self, in_channels: int, hidden: int, rng: np.random.Generator) -> None:
        self.conv1 = Conv2d(in_channels, hidden, 3, rng)
        self.conv2 = Conv2d(hidden, 1, 1, rng)

    def forward(self, motion_feat: Tensor) -> SegmentationOutput:
        return decode(motion_feat, self)


def decode(motion_feat: Tensor, decoder: Decoder) -> SegmentationOutput:
    if motion_feat.ndim != 3:
        raise ShapeError(op="decode", expected="[C, nx, nz]", got=str(motion_feat.shape))
    logits = decoder.conv2(ops.relu(decoder.conv1(motion_feat)))
    return SegmentationOutput(logits=logits, probs=ops.sigmoid(logits))
