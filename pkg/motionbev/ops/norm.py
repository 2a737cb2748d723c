from __future__ import annotations

import numpy as np

from ..exceptions import ShapeError
from ..tensor import Tensor, record


def instance_norm(input: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalise each channel of a [C, H, W] map to zero mean, unit (population) variance."""
    if input.ndim != 3:
        raise ShapeError(op="instance_norm", expected="[C, H, W]", got=str(input.shape))
    n = input.shape[1] * input.shape[2]
    if n < 2:
        raise ShapeError(op="instance_norm", expected="H*W >= 2", got=str(input.shape))

    x = input.data
    centered = x - x.mean(axis=(1, 2), keepdims=True)
    var = (centered**2).mean(axis=(1, 2), keepdims=True)
    denom = var + eps
    # a constant channel with eps == 0 maps to zeros instead of NaN
    inv = np.where(denom > 0.0, 1.0 / np.sqrt(np.where(denom > 0.0, denom, 1.0)), 0.0)
    out = centered * inv

    def backward(g: np.ndarray):
        g_sum = g.sum(axis=(1, 2), keepdims=True)
        gy_sum = (g * out).sum(axis=(1, 2), keepdims=True)
        return (inv / n * (n * g - g_sum - out * gy_sum),)

    return record(out, (input,), backward, "instance_norm")
