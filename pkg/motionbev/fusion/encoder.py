from __future__ import annotations

import numpy as np

from .. import ops
from ..nn import Conv2d, ConvNormReLU, Module, ResidualBlock
from ..tensor import Tensor


class BevEncoder(Module):
    """
    Residual BEV stack at constant resolution: residual block, stride-2
    conv, residual block, 2x upsample cropped back onto the input extent,
    skip add, 1x1 projection.
    """

    def __init__(self, channels: int, rng: np.random.Generator) -> None:
        self.stem = ResidualBlock(channels, rng)
        self.down = ConvNormReLU(channels, channels, rng, stride=2)
        self.mid = ResidualBlock(channels, rng)
        self.head = Conv2d(channels, channels, 1, rng)

    def forward(self, fused: Tensor) -> Tensor:
        return bev_encoder(fused, self)


def bev_encoder(fused: Tensor, encoder: BevEncoder) -> Tensor:
    skip = encoder.stem(fused)
    h, w = skip.shape[1:]
    up = ops.upsample_nearest2x(encoder.mid(encoder.down(skip)))
    up = up[:, :h, :w]
    return encoder.head(ops.add(up, skip))
