"""Cross-graph matching network: intra embedding, Sinkhorn affinity,
cross embedding, mean pooling and clamped cosine similarity.

All functions accept stacked inputs: node features of shape ``(..., n, d)``
and adjacency of shape ``(..., n, n)``, so a batch of graph pairs runs as a
single set of GEMMs.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from ..numcore import (
    ContractError,
    ShapeError,
    Tensor,
    clip,
    concat,
    dot,
    exp,
    matmul,
    mean,
    no_grad,
    norm,
    normalize,
    relu,
    transpose,
)

log = logging.getLogger(__name__)

LOGIT_CLAMP = 50.0


class MatchingError(ValueError):
    pass


@dataclass
class NetConfig:
    L: int = 5
    M: int = 3
    d_intra: int = 256
    d_cross: int = 256
    sinkhorn_iters: int = 10
    sinkhorn_epsilon: float = 1e-6
    cross_embedding_enabled: bool = True
    similarity_clamp: bool = True
    share_cross_weights: bool = True
    recompute_affinity: bool = False

    def __post_init__(self):
        if self.L < 1 or self.M < 0:
            raise ValueError(f"need L >= 1 and M >= 0, got L={self.L}, M={self.M}")
        if self.d_intra < 1 or self.d_cross < 1:
            raise ValueError("embedding widths must be >= 1")
        if self.sinkhorn_iters < 1:
            raise ValueError("sinkhorn_iters must be >= 1")
        if self.recompute_affinity and self.d_intra != self.d_cross:
            raise ValueError("recompute_affinity requires d_intra == d_cross")

    @property
    def uses_cross(self) -> bool:
        return self.cross_embedding_enabled and self.M > 0

    def to_dict(self) -> dict:
        return asdict(self)


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def _mlp_params(rng, prefix: str, width_in: int, width: int) -> dict[str, np.ndarray]:
    return {
        f"{prefix}.w1": _glorot(rng, 2 * width_in, width),
        f"{prefix}.b1": np.zeros(width),
        f"{prefix}.w2": _glorot(rng, width, width),
        f"{prefix}.b2": np.zeros(width),
    }


def init_params(config: NetConfig, in_dim: int, seed: int) -> dict[str, Tensor]:
    """Seeded Glorot-uniform initialisation.

    Intra and affinity weights draw from one stream, cross weights and the
    ablation projection from their own, so toggling the cross stage or
    changing M never perturbs the intra initialisation.
    """
    streams = np.random.SeedSequence(seed).spawn(3)
    rng_intra, rng_cross, rng_proj = (np.random.default_rng(s) for s in streams)
    arrays: dict[str, np.ndarray] = {}
    width_in = in_dim
    for layer in range(config.L):
        arrays.update(_mlp_params(rng_intra, f"intra.{layer}", width_in, config.d_intra))
        width_in = config.d_intra
    arrays["affinity"] = _glorot(rng_intra, config.d_intra, config.d_intra)
    width_in = config.d_intra
    for m in range(config.M):
        arrays.update(_mlp_params(rng_cross, f"cross.{m}", width_in, config.d_cross))
        if not config.share_cross_weights:
            arrays.update(_mlp_params(rng_cross, f"cross.{m}.rev", width_in, config.d_cross))
        width_in = config.d_cross
    if config.d_intra != config.d_cross:
        arrays["proj"] = _glorot(rng_proj, config.d_intra, config.d_cross)
    return {k: Tensor(v, requires_grad=True, name=k) for k, v in arrays.items()}


def _mlp(x: Tensor, params: dict[str, Tensor], prefix: str) -> Tensor:
    hidden = relu(matmul(x, params[f"{prefix}.w1"]) + params[f"{prefix}.b1"])
    return matmul(hidden, params[f"{prefix}.w2"]) + params[f"{prefix}.b2"]


def intra_embed(x, adj, params: dict[str, Tensor], config: NetConfig) -> Tensor:
    """L rounds of ``z <- MLP_l([A z, z])`` with sum aggregation over neighbours."""
    z = x if isinstance(x, Tensor) else Tensor(x)
    a = adj if isinstance(adj, Tensor) else Tensor(adj)
    expected = params["intra.0.w1"].shape[0] // 2
    if z.shape[-1] != expected:
        raise ShapeError(f"node features have length {z.shape[-1]}, parameters expect {expected}")
    for layer in range(config.L):
        z = _mlp(concat([matmul(a, z), z], axis=-1), params, f"intra.{layer}")
    return z


def _max_deviation(s: np.ndarray) -> np.ndarray:
    rows = np.abs(s.sum(axis=-1) - 1.0).max(axis=-1)
    cols = np.abs(s.sum(axis=-2) - 1.0).max(axis=-1)
    return np.maximum(rows, cols)


def sinkhorn(raw, iters: int, eps: float, early_exit: bool = True) -> Tensor:
    """Alternate row then column normalisation.

    With ``early_exit`` (inference) each matrix in the stack stops as soon
    as all its row and column sums are within ``eps`` of 1, so a matrix's
    result never depends on what else is in the batch. Without it the loop
    is a fixed unroll of ``iters`` rounds recorded on the tape.
    """
    k = raw if isinstance(raw, Tensor) else Tensor(raw)
    if k.shape[-1] != k.shape[-2]:
        raise ShapeError(f"sinkhorn needs square matrices, got {k.shape}")
    if np.any(k.data <= 0):
        raise ContractError("sinkhorn input must be strictly positive")
    if early_exit and k.requires_grad:
        raise ContractError("early-exit sinkhorn is inference only; pass early_exit=False when training")
    if not early_exit:
        for _ in range(iters):
            k = normalize(normalize(k, axis=-1), axis=-2)
        return k

    s = k.data
    lead = s.shape[:-2]
    done = np.zeros(lead, dtype=bool)
    for _ in range(iters):
        step = s / s.sum(axis=-1, keepdims=True)
        step = step / step.sum(axis=-2, keepdims=True)
        s = np.where(done[..., None, None], s, step)
        done = done | (_max_deviation(s) < eps)
        if np.all(done):
            break
    return Tensor(s)


def node_affinity(z1: Tensor, z2: Tensor, params: dict[str, Tensor], config: NetConfig,
                  training: bool = False) -> Tensor:
    """Doubly-stochastic soft assignment between the nodes of two graphs.

    The affinity matrix is used in symmetrised form and the Sinkhorn result
    is averaged with the transpose of the swapped-order run, which makes
    ``S(g2, g1) == S(g1, g2).T`` for any parameters.
    """
    if z1.shape[-2] != z2.shape[-2]:
        raise MatchingError(
            f"graphs must have equal RoI counts, got {z1.shape[-2]} and {z2.shape[-2]}")
    if not training:
        with no_grad():
            return _affinity(z1, z2, params, config, False)
    return _affinity(z1, z2, params, config, True)


def _affinity(z1, z2, params, config, training):
    a = params["affinity"]
    a_sym = (a + transpose(a)) * 0.5
    logits = matmul(matmul(z1, a_sym), transpose(z2)) * (1.0 / math.sqrt(config.d_intra))
    kernel = exp(clip(logits, -LOGIT_CLAMP, LOGIT_CLAMP))
    forward = sinkhorn(kernel, config.sinkhorn_iters, config.sinkhorn_epsilon, early_exit=not training)
    backward = sinkhorn(transpose(kernel), config.sinkhorn_iters, config.sinkhorn_epsilon,
                        early_exit=not training)
    return (forward + transpose(backward)) * 0.5


def cross_embed(z1: Tensor, z2: Tensor, s: Tensor | None, params: dict[str, Tensor],
                config: NetConfig, training: bool = False) -> tuple[Tensor, Tensor]:
    if not config.uses_cross:
        if "proj" in params:
            return matmul(z1, params["proj"]), matmul(z2, params["proj"])
        return z1, z2
    for m in range(config.M):
        if m > 0 and config.recompute_affinity:
            s = node_affinity(z1, z2, params, config, training)
        from_2 = matmul(s, z2)
        from_1 = matmul(transpose(s), z1)
        rev = f"cross.{m}" if config.share_cross_weights else f"cross.{m}.rev"
        z1, z2 = (_mlp(concat([from_2, z1], axis=-1), params, f"cross.{m}"),
                  _mlp(concat([from_1, z2], axis=-1), params, rev))
    return z1, z2


def pool(h: Tensor) -> Tensor:
    return mean(h, axis=-2)


def similarity(p1: Tensor, p2: Tensor, clamp: bool = True) -> Tensor:
    """Cosine of pooled embeddings, clamped to [0, 1] when ``clamp`` is set.

    A zero pooled vector has no direction; its similarity is defined as 0.
    """
    n1, n2 = norm(p1), norm(p2)
    denom = n1 * n2
    degenerate = denom.data <= 0
    if np.any(degenerate):
        log.warning("zero pooled embedding in %d pair(s); similarity set to 0", int(np.sum(degenerate)))
    cos = dot(p1, p2) / clip(denom, 1e-300, None)
    if clamp:
        return clip(cos, 0.0, 1.0)
    return clip(cos, -1.0, 1.0)


def forward_embedded(z1: Tensor, z2: Tensor, params: dict[str, Tensor], config: NetConfig,
                     training: bool = False) -> Tensor:
    """Everything after the intra stage, for stacks of already-embedded pairs."""
    s = node_affinity(z1, z2, params, config, training) if config.uses_cross else None
    h1, h2 = cross_embed(z1, z2, s, params, config, training)
    return similarity(pool(h1), pool(h2), config.similarity_clamp)


def forward_batch(x1, adj1, x2, adj2, params: dict[str, Tensor], config: NetConfig,
                  training: bool = False) -> Tensor:
    z1 = intra_embed(x1, adj1, params, config)
    z2 = intra_embed(x2, adj2, params, config)
    return forward_embedded(z1, z2, params, config, training)


def forward_pair(g1, g2, params: dict[str, Tensor], config: NetConfig, training: bool = False,
                 features=None) -> float | Tensor:
    """Similarity of two graphs.

    ``g1``/``g2`` are anything with ``features`` and ``adjacency()``
    (e.g. :class:`RoiGraph`). ``features`` optionally overrides the node
    feature arrays (used for normalised inputs). Returns a float at
    inference and a scalar Tensor when ``training``.
    """
    if g1.n_nodes != g2.n_nodes:
        raise MatchingError(
            f"graphs must have equal RoI counts: {g1.graph_id} has {g1.n_nodes}, "
            f"{g2.graph_id} has {g2.n_nodes}")
    f1, f2 = features if features is not None else (g1.feature_matrix(), g2.feature_matrix())
    if training:
        return forward_batch(f1, g1.adjacency(), f2, g2.adjacency(), params, config, True)
    with no_grad():
        return float(forward_batch(f1, g1.adjacency(), f2, g2.adjacency(), params, config).data)
