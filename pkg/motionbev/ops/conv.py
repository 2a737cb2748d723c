from __future__ import annotations

import numpy as np

from ..exceptions import ShapeError, ValidationError
from ..tensor import Tensor, record


def conv2d(
    input: Tensor,
    weight: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """
    2D cross-correlation of a [C_in, H, W] map with [C_out, C_in, kH, kW] weights.

    Output extent: floor((H + 2*padding - kH) / stride) + 1 (same for W).
    """
    if input.ndim != 3 or weight.ndim != 4:
        raise ShapeError(
            op="conv2d",
            expected="input [C_in, H, W] and weight [C_out, C_in, kH, kW]",
            got=f"{input.shape} and {weight.shape}",
        )
    c_in, h, w = input.shape
    c_out, w_in, kh, kw = weight.shape
    if w_in != c_in:
        raise ShapeError(
            op="conv2d",
            expected=f"weight C_in == {c_in}",
            got=str(weight.shape),
            message="input channels do not match weight",
        )
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValidationError(f"conv2d kernel extents must be odd, got {kh}x{kw}.")
    if stride < 1 or padding < 0:
        raise ValidationError(f"conv2d needs stride >= 1 and padding >= 0, got {stride}, {padding}.")
    if bias is not None and bias.shape != (c_out,):
        raise ShapeError(op="conv2d", expected=f"bias ({c_out},)", got=str(bias.shape))

    ho = (h + 2 * padding - kh) // stride + 1
    wo = (w + 2 * padding - kw) // stride + 1
    if ho < 1 or wo < 1:
        raise ShapeError(op="conv2d", expected="kernel no larger than padded input", got=f"{(h, w)}")

    xp = np.pad(input.data, ((0, 0), (padding, padding), (padding, padding)))
    wd = weight.data

    def window(i: int, j: int) -> tuple[slice, slice, slice]:
        return (
            slice(None),
            slice(i, i + stride * (ho - 1) + 1, stride),
            slice(j, j + stride * (wo - 1) + 1, stride),
        )

    out = np.zeros((c_out, ho, wo))
    for i in range(kh):
        for j in range(kw):
            out += np.tensordot(wd[:, :, i, j], xp[window(i, j)], axes=(1, 0))
    if bias is not None:
        out += bias.data[:, None, None]

    def backward(g: np.ndarray):
        gxp = np.zeros_like(xp)
        gw = np.empty_like(wd)
        for i in range(kh):
            for j in range(kw):
                win = window(i, j)
                gw[:, :, i, j] = np.tensordot(g, xp[win], axes=((1, 2), (1, 2)))
                gxp[win] += np.tensordot(wd[:, :, i, j], g, axes=(0, 0))
        gx = gxp[:, padding : padding + h, padding : padding + w]
        if bias is None:
            return gx, gw
        return gx, gw, g.sum(axis=(1, 2))

    parents = (input, weight) if bias is None else (input, weight, bias)
    return record(out, parents, backward, "conv2d")


def upsample_nearest2x(x: Tensor) -> Tensor:
    """Nearest-neighbour 2x upsampling of a [C, H, W] map."""
    if x.ndim != 3:
        raise ShapeError(op="upsample_nearest2x", expected="[C, H, W]", got=str(x.shape))
    c, h, w = x.shape
    out = x.data.repeat(2, axis=1).repeat(2, axis=2)

    def backward(g: np.ndarray):
        return (g.reshape(c, h, 2, w, 2).sum(axis=(2, 4)),)

    return record(out, (x,), backward, "upsample_nearest2x")
