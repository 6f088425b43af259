"""Adam with bias correction over a named parameter dict."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import NumericError, Tensor


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: dict[str, Tensor], state: AdamState) -> None:
    """Apply one Adam update in place, using each parameter's ``.grad``.

    Parameters without a gradient (unused this step) keep their values and
    moments. All gradients are checked before anything is written, so a
    non-finite gradient leaves parameters and state untouched.
    """
    live = {k: p for k, p in params.items() if p.grad is not None}
    for name, p in live.items():
        if not np.all(np.isfinite(p.grad)):
            raise NumericError(f"non-finite gradient for parameter {name!r}; update aborted")
        if p.grad.shape != p.shape:
            raise ValueError(f"gradient shape {p.grad.shape} != parameter shape {p.shape} for {name!r}")

    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t
    for name, p in live.items():
        g = p.grad
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.first_moment[name] = m
        state.second_moment[name] = v
        p.data = p.data - state.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + state.epsilon)


def zero_grad(params: dict[str, Tensor]) -> None:
    for p in params.values():
        p.grad = None
