from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .. import ops
from ..nn import ConvNormReLU, Module
from ..tensor import Tensor


class ConcatCompressor(Module):
    """1x1 conv + instance norm + relu squeezing concatenated maps to ``out_channels``."""

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator) -> None:
        self.compress = ConvNormReLU(in_channels, out_channels, rng, kernel_size=1)

    def forward(self, maps: Sequence[Tensor]) -> Tensor:
        return fuse_concat(maps, self)


def fuse_concat(maps: Sequence[Tensor], compressor: ConcatCompressor) -> Tensor:
    return compressor.compress(ops.concat_channels(list(maps)))
