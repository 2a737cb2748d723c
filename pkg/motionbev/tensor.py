"""
Dense float64 tensor with a recorded computation tape.

Each differentiable op in ``motionbev.ops`` computes its forward value with
numpy and registers an analytic backward closure through :func:`record`.
``Tensor.backward`` replays the tape in reverse topological order; gradients
of leaf tensors accumulate additively across calls.
"""

from __future__ import annotations

import threading
from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from typing import Any

import numpy as np

from .exceptions import ShapeError, ValidationError
from .validators import ensure_finite

BackwardFn = Callable[[np.ndarray], Sequence["np.ndarray | None"]]

_GRAD_STATE = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_GRAD_STATE, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable tape recording for the current thread."""
    previous = is_grad_enabled()
    _GRAD_STATE.enabled = False
    try:
        yield
    finally:
        _GRAD_STATE.enabled = previous


class Tensor:
    """N-dimensional float64 array with optional gradient tracking."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "_op")

    def __init__(
        self,
        data: np.ndarray,
        requires_grad: bool = False,
        *,
        _parents: tuple[Tensor, ...] = (),
        _backward: BackwardFn | None = None,
        _op: str = "",
    ) -> None:
        self.data: np.ndarray = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents = _parents
        self._backward = _backward
        self._op = _op

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        """Return a copy of the underlying data."""
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(op="item", expected="a single element", got=str(self.shape))
        return float(self.data.reshape(()))

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate d(self)/d(leaf) into ``leaf.grad`` for every tracked leaf."""
        if not self.requires_grad:
            raise ValidationError("backward() called on a tensor that does not require grad.")
        if grad is None:
            if self.data.size != 1:
                raise ShapeError(
                    op="backward",
                    expected="a scalar output or an explicit gradient",
                    got=str(self.shape),
                )
            seed = np.ones_like(self.data)
        else:
            seed = np.asarray(grad, dtype=np.float64)
            if seed.shape != self.data.shape:
                raise ShapeError(op="backward", expected=str(self.shape), got=str(seed.shape))

        pending: dict[int, np.ndarray] = {id(self): seed}
        for node in reversed(_topological_order(self)):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = pending[key] + pg if key in pending else pg

    # operator sugar; the implementations live in motionbev.ops
    def __add__(self, other: Any) -> Tensor:
        from .ops.elementwise import add

        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other: Any) -> Tensor:
        from .ops.elementwise import sub

        return sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        from .ops.elementwise import sub

        return sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        from .ops.elementwise import mul

        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> Tensor:
        from .ops.elementwise import scale

        return scale(self, -1.0)

    def __getitem__(self, key: Any) -> Tensor:
        from .ops.shape import getitem

        return getitem(self, key)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"


class Parameter(Tensor):
    """Trainable leaf tensor. ``name`` is its dotted checkpoint path."""

    __slots__ = ("name",)

    def __init__(self, data: np.ndarray, name: str = "") -> None:
        super().__init__(ensure_finite(name or "parameter", data), requires_grad=True)
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape})"


def as_tensor(data: Any, requires_grad: bool = False, name: str = "tensor") -> Tensor:
    """Ingest external data as a Tensor, rejecting NaN/Inf."""
    if isinstance(data, Tensor):
        return data
    return Tensor(ensure_finite(name, np.array(data, dtype=np.float64)), requires_grad)


def lift(value: Any) -> Tensor:
    """Wrap constants (scalars, arrays) as non-tracked tensors for internal use."""
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=np.float64))


def record(
    data: np.ndarray,
    parents: Sequence[Tensor],
    backward: BackwardFn,
    op: str,
) -> Tensor:
    """Create an op output, attaching it to the tape when any parent is tracked."""
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        return Tensor(
            data,
            requires_grad=True,
            _parents=tuple(parents),
            _backward=backward,
            _op=op,
        )
    return Tensor(data)


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """
    Counter-based (Philox) generator for ``seed`` and an optional stream path.

    Distinct stream paths, e.g. ``(seed, frame_index)``, give independent and
    schedule-independent random streams.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))
