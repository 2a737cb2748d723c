from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CheckpointError, GradientMissingError
from .tensor import Parameter


@dataclass
class AdamState:
    """First/second moment buffers keyed by parameter name, plus the step count."""

    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def sgd_adam_step(
    params: Sequence[Parameter],
    grads: Sequence[np.ndarray | None],
    lr: float,
    weight_decay: float = 0.0,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    state: AdamState | None = None,
) -> AdamState:
    """
    One Adam update with decoupled weight decay, in place.

    p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)

    Every parameter must have a gradient. Returns ``state`` (created when None)
    so moment buffers carry over to the next call.
    """
    for p, g in zip(params, grads):
        if g is None:
            raise GradientMissingError(p.name or "<unnamed>")

    state = state if state is not None else AdamState()
    state.step += 1
    b1, b2 = betas
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for i, (p, g) in enumerate(zip(params, grads)):
        key = p.name or str(i)
        m = state.m.get(key, np.zeros_like(p.data))
        v = state.v.get(key, np.zeros_like(p.data))
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.m[key] = m
        state.v[key] = v
        update = (m / c1) / (np.sqrt(v / c2) + eps)
        p.data = p.data - lr * (update + weight_decay * p.data)
    return state


class Adam:
    """Stateful wrapper that reads gradients from ``Parameter.grad``."""

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = 3e-4,
        weight_decay: float = 1e-7,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ) -> None:
        self.params = list(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.betas = betas
        self.eps = eps
        self.state = AdamState()

    def step(self) -> None:
        sgd_adam_step(
            self.params,
            [p.grad for p in self.params],
            self.lr,
            self.weight_decay,
            self.betas,
            self.eps,
            self.state,
        )

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def state_records(self) -> dict[str, np.ndarray]:
        """Moments as checkpoint records ("adam/m/<name>", "adam/v/<name>", "adam/step")."""
        records: dict[str, np.ndarray] = {"adam/step": np.array([float(self.state.step)])}
        for name, m in self.state.m.items():
            records[f"adam/m/{name}"] = m
            records[f"adam/v/{name}"] = self.state.v[name]
        return records

    def load_state_records(self, records: dict[str, np.ndarray], path: str | None = None) -> None:
        if "adam/step" not in records:
            raise CheckpointError(path=path, record="adam/step", message="optimizer step missing")
        state = AdamState(step=int(records["adam/step"].reshape(-1)[0]))
        shapes = {p.name: p.shape for p in self.params}
        for key, value in records.items():
            for prefix, target in (("adam/m/", state.m), ("adam/v/", state.v)):
                if key.startswith(prefix):
                    name = key[len(prefix) :]
                    if name not in shapes or shapes[name] != value.shape:
                        raise CheckpointError(
                            path=path, record=key, message="moment does not match any parameter"
                        )
                    target[name] = value.copy()
        self.state = state
