"""Differentiable primitives. Every op has an analytic backward."""

from __future__ import annotations

from .conv import conv2d, upsample_nearest2x
from .elementwise import add, mul, relu, scale, sigmoid, softmax, sub
from .linear import linear
from .norm import instance_norm
from .sampling import bilinear_sample
from .shape import (
    concat,
    concat_channels,
    getitem,
    mean,
    pad2d,
    reshape,
    sum,
    transpose,
)

__all__ = [
    "add",
    "bilinear_sample",
    "concat",
    "concat_channels",
    "conv2d",
    "getitem",
    "instance_norm",
    "linear",
    "mean",
    "mul",
    "pad2d",
    "relu",
    "reshape",
    "scale",
    "sigmoid",
    "softmax",
    "sub",
    "sum",
    "transpose",
    "upsample_nearest2x",
]
