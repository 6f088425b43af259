"""Training loop: pair batches, MSE on the similarity, Adam."""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from ..features import Normalizer
from ..graphio import RoiGraph
from ..net import NetConfig, forward_batch
from ..numcore import AdamState, NumericError, Tensor, adam_step, zero_grad
from ..numcore import square, sum_
from .model import Model, derive_seed
from .sampling import sample_pair_batch

log = logging.getLogger(__name__)


class TrainingError(FloatingPointError):
    """Non-finite loss or gradient; carries the failing step and last finite loss."""

    def __init__(self, message: str, step: int, last_finite_loss: float | None):
        super().__init__(message)
        self.step = step
        self.last_finite_loss = last_finite_loss


@dataclass
class TrainConfig:
    steps: int = 2000
    batch_size: int = 64
    theta_test: float = 0.5
    theta_explain: float = 0.8
    seed: int = 0
    repeat_count: int = 10
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    net: NetConfig = field(default_factory=NetConfig)

    def __post_init__(self):
        if isinstance(self.net, dict):
            self.net = NetConfig(**self.net)
        self.validate()

    def validate(self) -> None:
        # steps == 0 is allowed programmatically: it returns the initial weights
        if self.steps < 0 or self.batch_size < 1:
            raise ValueError(f"need steps >= 0 and batch_size >= 1, got {self.steps}, {self.batch_size}")
        for name in ("theta_test", "theta_explain"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.repeat_count < 1:
            raise ValueError("repeat_count must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


def batch_loss(model: Model, graphs: list[RoiGraph], batch, inputs=None) -> Tensor:
    """(1/B) * sum of squared errors over the pairs in ``batch``.

    Pairs are grouped by node count so each group is one stacked forward.
    """
    groups = defaultdict(list)
    for i, j, y in batch:
        groups[graphs[i].n_nodes].append((i, j, y))
    inputs = inputs if inputs is not None else {}
    total = None
    for n in sorted(groups):
        rows = groups[n]

        def stack(k):
            xs, adjs = [], []
            for r in rows:
                g = r[k]
                if g not in inputs:
                    inputs[g] = (model.inputs(graphs[g]), graphs[g].adjacency())
                xs.append(inputs[g][0])
                adjs.append(inputs[g][1])
            return np.stack(xs), np.stack(adjs)

        x1, a1 = stack(0)
        x2, a2 = stack(1)
        target = np.array([r[2] for r in rows], dtype=float)
        s_hat = forward_batch(x1, a1, x2, a2, model.params, model.config, training=True)
        part = sum_(square(s_hat - target))
        total = part if total is None else total + part
    return total * (1.0 / len(batch))


def train(train_graphs: list[RoiGraph], config: TrainConfig, init_seed: int | None = None,
          sample_seed: int | None = None, progress=None) -> tuple[Model, list[float]]:
    """Fit a model on ``train_graphs``; returns the model and per-step losses.

    Seeds default to ``derive_seed(config.seed, 0, 1)`` for the weights and
    ``derive_seed(config.seed, 0, 2)`` for pair sampling.
    """
    if not train_graphs:
        raise ValueError("empty training split")
    init_seed = derive_seed(config.seed, 0, 1) if init_seed is None else init_seed
    sample_seed = derive_seed(config.seed, 0, 2) if sample_seed is None else sample_seed
    normalizer = Normalizer.fit(train_graphs)
    model = Model.initialise(config.net, train_graphs[0].n_features, init_seed, normalizer)
    model.metadata.update({"sample_seed": sample_seed, "train": {k: v for k, v in config.to_dict().items()
                                                                 if k != "net"},
                           "train_graphs": len(train_graphs)})
    rng = np.random.default_rng(sample_seed)
    state = AdamState(learning_rate=config.learning_rate, beta1=config.beta1,
                      beta2=config.beta2, epsilon=config.epsilon)
    inputs: dict = {}
    losses: list[float] = []
    last = None
    for step in range(config.steps):
        batch = sample_pair_batch(train_graphs, config.batch_size, rng)
        zero_grad(model.params)
        try:
            loss = batch_loss(model, train_graphs, batch, inputs)
            value = float(loss.data)
            if not math.isfinite(value):
                raise NumericError("loss is not finite")
            loss.backward()
            adam_step(model.params, state)
        except NumericError as exc:
            raise TrainingError(f"training aborted at step {step}: {exc} (last finite loss {last})",
                                step, last) from exc
        losses.append(value)
        last = value
        if progress is not None:
            progress(step, value)
    model.metadata["steps"] = config.steps
    return model, losses
