"""
Central finite-difference checks for tape gradients.

Outputs are reduced to a scalar by a fixed random cotangent so every output
element contributes, then selected input elements are perturbed by +/-step.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .tensor import Tensor, make_rng, no_grad

DEFAULT_STEP = 1e-6
ERROR_FLOOR = 1e-3


@dataclass(frozen=True)
class GradCheckReport:
    max_relative_error: float
    checked: int
    worst_input: int
    worst_index: int

    def passed(self, tolerance: float) -> bool:
        return self.max_relative_error < tolerance


def max_relative_error(
    analytic: np.ndarray, numeric: np.ndarray, floor: float = ERROR_FLOOR
) -> float:
    """
    max |a - n| / max(|a|, |n|, floor) over all elements (0.0 when empty).

    Below ``floor`` the bound is effectively absolute: tolerance * floor.
    """
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    if a.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom))


def numerical_gradient(
    fn: Callable[[], Tensor],
    target: Tensor,
    cotangent: np.ndarray,
    indices: np.ndarray,
    step: float = DEFAULT_STEP,
) -> np.ndarray:
    """d<cotangent, fn()>/d target.flat[indices] by central differences."""
    target.data = np.ascontiguousarray(target.data)
    flat = target.data.reshape(-1)
    out = np.empty(len(indices))
    with no_grad():
        for j, idx in enumerate(indices):
            original = flat[idx]
            flat[idx] = original + step
            plus = float(np.sum(cotangent * fn().data))
            flat[idx] = original - step
            minus = float(np.sum(cotangent * fn().data))
            flat[idx] = original
            out[j] = (plus - minus) / (2.0 * step)
    return out


def check_gradients(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    seed: int = 0,
    step: float = DEFAULT_STEP,
    probes: int | None = None,
    floor: float = ERROR_FLOOR,
) -> GradCheckReport:
    """
    Compare tape gradients of ``fn()`` w.r.t. ``inputs`` with central differences.

    ``fn`` must read the current data of ``inputs`` on every call. With
    ``probes`` set, only that many randomly chosen elements (across all
    inputs) are perturbed. ``floor`` is the smallest denominator of the
    relative error; lower it to check tiny gradients relatively.
    """
    if not inputs:
        raise ValidationError("check_gradients needs at least one input tensor.")
    for t in inputs:
        if not t.requires_grad:
            raise ValidationError("check_gradients inputs must require grad.")
        t.zero_grad()

    rng = make_rng(seed, 0xC4EC)
    out = fn()
    cotangent = rng.standard_normal(out.shape)
    out.backward(cotangent)

    pool = [(i, j) for i, t in enumerate(inputs) for j in range(t.size)]
    if probes is not None and probes < len(pool):
        chosen = rng.choice(len(pool), size=probes, replace=False)
        pool = [pool[k] for k in sorted(chosen)]

    worst = (0.0, -1, -1)
    for i, t in enumerate(inputs):
        idx = np.array([j for (k, j) in pool if k == i], dtype=np.int64)
        if idx.size == 0:
            continue
        analytic = np.zeros(t.size) if t.grad is None else t.grad.reshape(-1)
        numeric = numerical_gradient(fn, t, cotangent, idx, step)
        for j, a, n in zip(idx, analytic[idx], numeric):
            err = max_relative_error(np.array([a]), np.array([n]), floor)
            if err > worst[0] or worst[1] < 0:
                worst = (err, i, int(j))
    return GradCheckReport(
        max_relative_error=worst[0],
        checked=len(pool),
        worst_input=worst[1],
        worst_index=worst[2],
    )
