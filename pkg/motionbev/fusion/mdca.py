"""
Multimodal deformable cross-attention over BEV maps.

For a query cell q with reference point p_q, head h, modality m and key k::

    out(q) = sum_h W_h sum_m sum_k A[q,h,m,k] * (W_m X_m)(p_q + dP[q,h,m,k])

Queries come from a linear projection of two concatenated source maps.
Attention logits are softmax-normalised jointly over the M*K keys of a head.
Offsets are in cell units, (d_row, d_col) = (dX, dZ), and start at zero.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .. import ops
from ..exceptions import ShapeError
from ..nn import Linear, Module
from ..tensor import Parameter, Tensor, lift


class MdcaWeights(Module):
    def __init__(
        self,
        query_channels: int,
        value_channels: Sequence[int],
        model_dim: int,
        heads: int,
        points: int,
        rng: np.random.Generator,
    ) -> None:
        if model_dim % heads:
            raise ShapeError(
                op="mdca",
                expected=f"model_dim divisible by heads ({heads})",
                got=str(model_dim),
            )
        self.model_dim = model_dim
        self.heads = heads
        self.points = points
        self.num_values = len(value_channels)
        self.head_dim = model_dim // heads
        self.query = Linear(query_channels, model_dim, rng)
        self.values = [Linear(c, self.head_dim, rng, bias=False) for c in value_channels]
        self.offsets = Linear(model_dim, heads * self.num_values * points * 2, rng)
        self.offsets.weight = Parameter(np.zeros_like(self.offsets.weight.data))
        self.attention = Linear(model_dim, heads * self.num_values * points, rng)
        self.heads_out = [Linear(self.head_dim, model_dim, rng, bias=False) for _ in range(heads)]


def reference_points(nx: int, nz: int) -> np.ndarray:
    """[nx*nz, 2] normalised (x, z) cell centers in [0, 1]^2, row-major over (i, k)."""
    gi, gk = np.meshgrid(np.arange(nx), np.arange(nz), indexing="ij")
    return np.stack([(gi.ravel() + 0.5) / nx, (gk.ravel() + 0.5) / nz], axis=1)


def _flatten(x: Tensor) -> Tensor:
    c = x.shape[0]
    return ops.transpose(ops.reshape(x, (c, -1)), (1, 0))


def mdca(
    query_src_a: Tensor,
    query_src_b: Tensor,
    values: Sequence[Tensor],
    weights: MdcaWeights,
    residual: bool = True,
) -> Tensor:
    """
    Deformable cross-attention of ``values`` (M maps) at every cell.

    Returns [C, nx, nz]. ``query_src_a`` (the camera map) is added back when
    its channel count equals C and ``residual`` is set.
    """
    maps = [query_src_a, query_src_b, *values]
    if any(m.ndim != 3 for m in maps) or len({m.shape[1:] for m in maps}) != 1:
        raise ShapeError(
            op="mdca",
            expected="[C_i, nx, nz] maps sharing nx, nz",
            got=str([m.shape for m in maps]),
        )
    if len(values) != weights.num_values:
        raise ShapeError(
            op="mdca", expected=f"{weights.num_values} value maps", got=str(len(values))
        )
    nx, nz = query_src_a.shape[1:]
    n = nx * nz
    h, k, m_count, cv = weights.heads, weights.points, weights.num_values, weights.head_dim

    zq = weights.query(_flatten(ops.concat_channels([query_src_a, query_src_b])))
    offsets = ops.reshape(weights.offsets(zq), (n, h, m_count, k, 2))
    logits = ops.reshape(weights.attention(zq), (n, h, m_count * k))
    attn = ops.reshape(ops.softmax(logits, axis=2), (n, h, m_count, k))

    ref = reference_points(nx, nz)
    # reference point in pixel units as (col, row) for bilinear_sample
    base = np.stack([ref[:, 1] * nz - 0.5, ref[:, 0] * nx - 0.5], axis=1)
    base = lift(np.repeat(base, h * k, axis=0))

    acc: Tensor | None = None
    for m, (value, proj) in enumerate(zip(values, weights.values)):
        projected = ops.reshape(
            ops.transpose(proj(_flatten(value)), (1, 0)), (cv, nx, nz)
        )
        delta = ops.reshape(offsets[:, :, m, :, ::-1], (n * h * k, 2))
        sampled = ops.bilinear_sample(projected, ops.add(base, delta))
        sampled = ops.reshape(sampled, (n, h, k, cv))
        weight = ops.reshape(attn[:, :, m, :], (n, h, k, 1))
        term = ops.sum(ops.mul(sampled, weight), axis=2)
        acc = term if acc is None else ops.add(acc, term)

    out: Tensor | None = None
    for head, w_h in enumerate(weights.heads_out):
        y = w_h(acc[:, head, :])
        out = y if out is None else ops.add(out, y)

    result = ops.reshape(ops.transpose(out, (1, 0)), (weights.model_dim, nx, nz))
    if residual and query_src_a.shape[0] == weights.model_dim:
        result = ops.add(result, query_src_a)
    return result
