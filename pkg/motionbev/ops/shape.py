from __future__ import annotations

import builtins
from collections.abc import Sequence
from typing import Any

import numpy as np

from ..exceptions import ShapeError
from ..tensor import Tensor, record


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(s) for s in shape)
    try:
        out = x.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(op="reshape", expected=f"{x.size} elements", got=str(shape)) from e

    def backward(g: np.ndarray):
        return (g.reshape(x.shape),)

    return record(out, (x,), backward, "reshape")


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(int(a) for a in axes)
    if sorted(axes) != list(range(x.ndim)):
        raise ShapeError(op="transpose", expected=f"a permutation of {x.ndim} axes", got=str(axes))
    inverse = tuple(np.argsort(axes))

    def backward(g: np.ndarray):
        return (g.transpose(inverse),)

    return record(x.data.transpose(axes), (x,), backward, "transpose")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError(op="concat", expected="at least one tensor", got="0")
    ref = tensors[0].shape
    axis = axis % len(ref)
    for t in tensors[1:]:
        if t.ndim != len(ref) or any(
            t.shape[i] != ref[i] for i in range(len(ref)) if i != axis
        ):
            raise ShapeError(
                op="concat",
                expected=f"shapes matching {ref} except on axis {axis}",
                got=str([u.shape for u in tensors]),
            )
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0, *sizes])

    def backward(g: np.ndarray):
        return tuple(
            np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis)
            for i in range(len(tensors))
        )

    out = np.concatenate([t.data for t in tensors], axis=axis)
    return record(out, tuple(tensors), backward, "concat")


def concat_channels(tensors: Sequence[Tensor]) -> Tensor:
    """Concatenate [C_i, H, W] maps along channels; spatial extents must agree."""
    for t in tensors:
        if t.ndim != 3:
            raise ShapeError(op="concat_channels", expected="[C, H, W] tensors", got=str(t.shape))
    spatial = {t.shape[1:] for t in tensors}
    if len(spatial) > 1:
        raise ShapeError(
            op="concat_channels",
            expected="identical spatial extents",
            got=str([t.shape for t in tensors]),
        )
    return concat(tensors, axis=0)


def _is_basic_index(key: Any) -> bool:
    parts = key if isinstance(key, tuple) else (key,)
    return all(
        isinstance(p, (int, np.integer, slice)) or p is None or p is Ellipsis
        for p in parts
    )


def getitem(x: Tensor, key: Any) -> Tensor:
    out = x.data[key]
    basic = _is_basic_index(key)

    def backward(g: np.ndarray):
        full = np.zeros_like(x.data)
        if basic:
            full[key] += g
        else:
            np.add.at(full, key, g)
        return (full,)

    return record(np.array(out, dtype=np.float64), (x,), backward, "getitem")


def sum(x: Tensor, axis: int | tuple[int, ...] | None = None) -> Tensor:  # noqa: A001
    out = x.data.sum(axis=axis)

    def backward(g: np.ndarray):
        if axis is None:
            return (np.broadcast_to(g, x.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), x.shape).copy(),)

    return record(np.asarray(out), (x,), backward, "sum")


def mean(x: Tensor, axis: int | tuple[int, ...] | None = None) -> Tensor:
    if axis is None:
        count = x.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([x.shape[a] for a in axes]))
    total = sum(x, axis=axis)
    factor = 1.0 / builtins.max(count, 1)

    def backward(g: np.ndarray):
        return (g * factor,)

    return record(total.data * factor, (total,), backward, "mean")


def pad2d(x: Tensor, pad: int) -> Tensor:
    """Zero-pad the last two axes of a [C, H, W] tensor by ``pad`` on every side."""
    if pad < 0:
        raise ShapeError(op="pad2d", expected="pad >= 0", got=str(pad))
    if pad == 0:
        return x
    out = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad)))
    h, w = x.shape[1], x.shape[2]

    def backward(g: np.ndarray):
        return (g[:, pad : pad + h, pad : pad + w],)

    return record(out, (x,), backward, "pad2d")
