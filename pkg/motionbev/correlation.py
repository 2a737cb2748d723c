"""
Parameter-free correlation between two BEV maps.

For every cell x and displacement delta in a (2d+1)^2 window (strided)::

    c(x, delta) = sum_{o in [-k, k]^2} <f1(x + o), f2(x + delta + o)> / (C * K^2)

with K = 2k + 1 and zeros outside the maps. Channel ``ix * D + iz`` holds
delta = (-d + ix * stride, -d + iz * stride) along (X, Z).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops
from .exceptions import ShapeError, ValidationError
from .tensor import Tensor, record


@dataclass(frozen=True)
class CorrelationCfg:
    k: int = 3
    d: int = 4
    stride_disp: int = 1

    def __post_init__(self) -> None:
        if self.k < 0 or self.d < 0:
            raise ValidationError(f"correlation k and d must be >= 0, got k={self.k}, d={self.d}.")
        if self.stride_disp < 1 or self.d % self.stride_disp:
            raise ValidationError(
                f"correlation stride_disp must be >= 1 and divide d, got {self.stride_disp}."
            )

    @property
    def kernel(self) -> int:
        return 2 * self.k + 1

    @property
    def window(self) -> int:
        """D, the number of displacements per axis."""
        return 2 * self.d // self.stride_disp + 1

    @property
    def channels(self) -> int:
        return self.window**2

    def displacements(self) -> list[tuple[int, int]]:
        steps = [-self.d + i * self.stride_disp for i in range(self.window)]
        return [(dx, dz) for dx in steps for dz in steps]


def _box_sum(a: np.ndarray, size: int) -> np.ndarray:
    """Sum over every size x size window of the last two axes ('valid' extent)."""
    h = a.shape[-2] - size + 1
    w = a.shape[-1] - size + 1
    rows = sum(a[..., j : j + h, :] for j in range(size))
    return sum(rows[..., j : j + w] for j in range(size))


def correlate(f1: Tensor, f2: Tensor, cfg: CorrelationCfg) -> Tensor:
    """[D^2, nx, nz] correlation volume of ``f1`` (current) against ``f2`` (previous)."""
    if f1.ndim != 3 or f1.shape != f2.shape:
        raise ShapeError(
            op="correlate", expected="two [C, nx, nz] maps of equal shape", got=f"{f1.shape} and {f2.shape}"
        )
    c, nx, nz = f1.shape
    k, d, size = cfg.k, cfg.d, cfg.kernel
    span_x, span_z = nx + 2 * k, nz + 2 * k
    norm = 1.0 / (c * size * size)
    f1p = np.pad(f1.data, ((0, 0), (k, k), (k, k)))
    f2p = np.pad(f2.data, ((0, 0), (d + k, d + k), (d + k, d + k)))
    shifts = cfg.displacements()

    def window(dx: int, dz: int) -> tuple[slice, slice, slice]:
        return (
            slice(None),
            slice(d + dx, d + dx + span_x),
            slice(d + dz, d + dz + span_z),
        )

    out = np.empty((len(shifts), nx, nz))
    for ch, (dx, dz) in enumerate(shifts):
        prod = np.einsum("chw,chw->hw", f1p, f2p[window(dx, dz)])
        out[ch] = _box_sum(prod, size) * norm

    def backward(g: np.ndarray):
        g1p = np.zeros_like(f1p)
        g2p = np.zeros_like(f2p)
        gp = np.pad(g, ((0, 0), (2 * k, 2 * k), (2 * k, 2 * k)))
        for ch, (dx, dz) in enumerate(shifts):
            dprod = _box_sum(gp[ch], size) * norm
            win = window(dx, dz)
            g1p += dprod * f2p[win]
            g2p[win] += dprod * f1p
        return (
            g1p[:, k : k + nx, k : k + nz],
            g2p[:, d + k : d + k + nx, d + k : d + k + nz],
        )

    return record(out, (f1, f2), backward, "correlate")


def motion_features(corr: Tensor, curr_fused: Tensor) -> Tensor:
    """Correlation channels first, then the current fused map."""
    if corr.ndim != 3 or curr_fused.ndim != 3 or corr.shape[1:] != curr_fused.shape[1:]:
        raise ShapeError(
            op="motion_features",
            expected="maps sharing nx, nz",
            got=f"{corr.shape} and {curr_fused.shape}",
        )
    return ops.concat_channels([corr, curr_fused])
