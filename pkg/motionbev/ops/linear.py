from __future__ import annotations

import numpy as np

from ..exceptions import ShapeError
from ..tensor import Tensor, record


def linear(input: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Row-wise affine map: [N, C_in] x [C_out, C_in]^T + [C_out] -> [N, C_out]."""
    if input.ndim != 2 or weight.ndim != 2 or input.shape[1] != weight.shape[1]:
        raise ShapeError(
            op="linear",
            expected="input [N, C_in] and weight [C_out, C_in]",
            got=f"{input.shape} and {weight.shape}",
        )
    if bias is not None and bias.shape != (weight.shape[0],):
        raise ShapeError(op="linear", expected=f"bias ({weight.shape[0]},)", got=str(bias.shape))

    out = input.data @ weight.data.T
    if bias is not None:
        out = out + bias.data

    def backward(g: np.ndarray):
        gx = g @ weight.data
        gw = g.T @ input.data
        if bias is None:
            return gx, gw
        return gx, gw, g.sum(axis=0)

    parents = (input, weight) if bias is None else (input, weight, bias)
    return record(out, parents, backward, "linear")
