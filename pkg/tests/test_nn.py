from __future__ import annotations

import numpy as np
import pytest

from motionbev.exceptions import CheckpointError
from motionbev.nn import Conv2d, ConvNormReLU, Linear, Module, ResidualBlock
from motionbev.tensor import Tensor, make_rng


class _Toy(Module):
    def __init__(self) -> None:
        rng = make_rng(0)
        self.first = Linear(3, 2, rng)
        self.blocks = [Conv2d(1, 1, 3, rng, bias=False), ResidualBlock(1, rng)]
        self.skip = None

    def forward(self, x: Tensor) -> Tensor:
        return self.first(x)


def test_named_parameters_are_dotted_and_ordered() -> None:
    names = [name for name, _ in _Toy().named_parameters()]
    assert names == [
        "first.weight",
        "first.bias",
        "blocks.0.weight",
        "blocks.1.conv1.weight",
        "blocks.1.conv1.bias",
        "blocks.1.conv2.weight",
        "blocks.1.conv2.bias",
    ]


def test_parameters_carry_their_names() -> None:
    toy = _Toy()
    params = toy.parameters()
    assert params[2].name == "blocks.0.weight"


def test_state_dict_roundtrip() -> None:
    a, b = _Toy(), _Toy()
    for p in b.parameters():
        p.data = p.data + 1.0
    b.load_state_dict(a.state_dict())
    for (_, pa), (_, pb) in zip(a.named_parameters(), b.named_parameters()):
        np.testing.assert_array_equal(pa.data, pb.data)


def test_load_state_dict_reports_bad_records() -> None:
    toy = _Toy()
    state = toy.state_dict()

    missing = dict(state)
    del missing["first.bias"]
    with pytest.raises(CheckpointError) as info:
        toy.load_state_dict(missing)
    assert info.value.record == "first.bias"

    extra = {**state, "ghost.weight": np.zeros(1)}
    with pytest.raises(CheckpointError) as info:
        toy.load_state_dict(extra)
    assert info.value.record == "ghost.weight"

    wrong = {**state, "first.weight": np.zeros((3, 2))}
    with pytest.raises(CheckpointError, match="does not match"):
        toy.load_state_dict(wrong)


def test_layers_keep_spatial_extent() -> None:
    rng = make_rng(1)
    x = Tensor(rng.standard_normal((2, 6, 5)))
    assert ConvNormReLU(2, 4, rng)(x).shape == (4, 6, 5)
    assert ConvNormReLU(2, 4, rng, stride=2)(x).shape == (4, 3, 3)
    assert ResidualBlock(2, rng)(x).shape == (2, 6, 5)
    assert ResidualBlock(2, rng, norm=False)(Tensor(np.ones((2, 1, 1)))).shape == (2, 1, 1)


def test_zero_grad_clears_every_parameter() -> None:
    toy = _Toy()
    for p in toy.parameters():
        p.grad = np.ones_like(p.data)
    toy.zero_grad()
    assert all(p.grad is None for p in toy.parameters())
