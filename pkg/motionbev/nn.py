"""
Parameter containers and the small layer set the pipeline is built from.

A :class:`Module` discovers its parameters by walking its attributes
(including lists of sub-modules) in definition order, so the dotted names
("neck.blocks.0.conv.weight") are stable and double as checkpoint keys.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Mapping
from typing import Any

import numpy as np

from . import ops
from .exceptions import CheckpointError
from .tensor import Parameter, Tensor


class Module:
    """Base class for anything holding Parameters."""

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)

    def forward(self, *args: Any, **kwargs: Any) -> Any:  # pragma: no cover - abstract
        raise NotImplementedError

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        """Yield (dotted name, parameter) pairs and stamp each parameter's name."""
        for attr, value in vars(self).items():
            yield from _walk(value, f"{prefix}{attr}")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: Mapping[str, np.ndarray], path: str | None = None) -> None:
        """Copy arrays into parameters; names and shapes must match exactly."""
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        if missing:
            raise CheckpointError(path=path, record=missing[0], message="parameter missing from checkpoint")
        if unexpected:
            raise CheckpointError(path=path, record=unexpected[0], message="checkpoint holds an unknown parameter")
        for name, param in params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != param.shape:
                raise CheckpointError(
                    path=path,
                    record=name,
                    message=f"shape {value.shape} does not match model shape {param.shape}",
                )
            param.data = value.copy()
            param.grad = None


def _walk(value: Any, name: str) -> Iterator[tuple[str, Parameter]]:
    if isinstance(value, Parameter):
        value.name = name
        yield name, value
    elif isinstance(value, Module):
        yield from value.named_parameters(prefix=f"{name}.")
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            yield from _walk(item, f"{name}.{i}")


def kaiming_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = math.sqrt(6.0 / max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        bias: bool = True,
    ) -> None:
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = Parameter(
            kaiming_uniform(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in)
        )
        self.bias = Parameter(np.zeros(out_channels)) if bias else None
        self.stride = stride
        self.padding = kernel_size // 2

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class Linear(Module):
    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        bias: bool = True,
    ) -> None:
        self.weight = Parameter(kaiming_uniform(rng, (out_features, in_features), in_features))
        self.bias = Parameter(np.zeros(out_features)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return ops.linear(x, self.weight, self.bias)


class ConvNormReLU(Module):
    """conv -> instance norm -> relu, 'same' padding."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        rng: np.random.Generator,
        kernel_size: int = 3,
        stride: int = 1,
    ) -> None:
        self.conv = Conv2d(in_channels, out_channels, kernel_size, rng, stride=stride)

    def forward(self, x: Tensor) -> Tensor:
        return ops.relu(ops.instance_norm(self.conv(x)))


class ResidualBlock(Module):
    """
    Two 3x3 convolutions with an identity skip: relu(x + f(x)).

    ``norm=False`` drops the instance norms so the block also works on maps
    with a single cell (the deepest backbone stage at desk resolutions).
    """

    def __init__(self, channels: int, rng: np.random.Generator, norm: bool = True) -> None:
        self.conv1 = Conv2d(channels, channels, 3, rng)
        self.conv2 = Conv2d(channels, channels, 3, rng)
        self.norm = norm

    def forward(self, x: Tensor) -> Tensor:
        h = self.conv1(x)
        if self.norm:
            h = ops.instance_norm(h)
        h = self.conv2(ops.relu(h))
        if self.norm:
            h = ops.instance_norm(h)
        return ops.relu(ops.add(x, h))
