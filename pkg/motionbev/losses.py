from __future__ import annotations

import numpy as np

from .boxes import GtMask
from .exceptions import ShapeError
from .tensor import Tensor, record

PROB_EPS = 1e-7


def bce_loss(probs: Tensor, gt: GtMask | np.ndarray, eps: float = PROB_EPS) -> Tensor:
    """
    Mean binary cross-entropy over all cells of a [1, nx, nz] probability map.

    Probabilities are clamped to [eps, 1 - eps]; clamped cells pass no gradient.
    """
    target = gt.mask if isinstance(gt, GtMask) else np.asarray(gt, dtype=np.float64)
    if probs.ndim != 3 or probs.shape[0] != 1 or probs.shape[1:] != target.shape:
        raise ShapeError(
            op="bce_loss",
            expected=f"probs [1, nx, nz] matching mask {target.shape}",
            got=str(probs.shape),
        )
    y = target[None].astype(np.float64)
    p = np.clip(probs.data, eps, 1.0 - eps)
    n = p.size
    value = -np.sum(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)) / n
    unclamped = (probs.data >= eps) & (probs.data <= 1.0 - eps)

    def backward(g: np.ndarray):
        grad = (-y / p + (1.0 - y) / (1.0 - p)) / n
        return (g * grad * unclamped,)

    return record(np.asarray(value), (probs,), backward, "bce_loss")
