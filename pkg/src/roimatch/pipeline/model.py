"""Trained-model bundle: network config, parameters and feature normaliser."""
from __future__ import annotations

from dataclasses import dataclass, field
from collections import defaultdict

import numpy as np

from ..features import Normalizer
from ..graphio import RoiGraph
from ..net import MatchingError, NetConfig, forward_embedded, init_params, intra_embed
from ..numcore import Tensor, load_checkpoint, no_grad, save_checkpoint

SCORE_CHUNK = 1024


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed for ``keys`` under a top-level ``seed``.

    Used as ``derive_seed(seed, repeat, purpose)`` with purpose 0 = split,
    1 = weight init, 2 = pair sampling.
    """
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1)[0])


@dataclass
class Model:
    config: NetConfig
    params: dict[str, Tensor]
    normalizer: Normalizer
    metadata: dict = field(default_factory=dict)

    @classmethod
    def initialise(cls, config: NetConfig, in_dim: int, seed: int, normalizer: Normalizer | None = None):
        return cls(config, init_params(config, in_dim, seed),
                   normalizer or Normalizer.identity(in_dim), {"init_seed": seed})

    @property
    def in_dim(self) -> int:
        return self.params["intra.0.w1"].shape[0] // 2

    def inputs(self, graph: RoiGraph, slot_mask: np.ndarray | None = None) -> np.ndarray:
        """Normalised node features; masked slots are zeroed after normalisation."""
        x = self.normalizer.apply(graph.feature_matrix())
        if slot_mask is not None:
            x = x * slot_mask
        return x

    def similarity(self, g1: RoiGraph, g2: RoiGraph) -> float:
        return float(self.score_pairs([g1], [g2], [(0, 0)])[0])

    def _embed(self, graphs: list[RoiGraph], slot_mask) -> dict[int, np.ndarray]:
        by_size = defaultdict(list)
        for i, g in enumerate(graphs):
            by_size[g.n_nodes].append(i)
        out = {}
        for idx in by_size.values():
            x = np.stack([self.inputs(graphs[i], slot_mask) for i in idx])
            a = np.stack([graphs[i].adjacency() for i in idx])
            z = intra_embed(x, a, self.params, self.config).data
            for row, i in enumerate(idx):
                out[i] = z[row]
        return out

    def score_pairs(self, left: list[RoiGraph], right: list[RoiGraph], pairs, slot_mask=None) -> np.ndarray:
        """Similarity for each ``(i, j)`` in ``pairs`` (indices into ``left``/``right``).

        Intra embeddings are computed once per graph, and pairs are then
        scored in fixed-size chunks in the order given.
        """
        pairs = list(pairs)
        for i, j in pairs:
            if left[i].n_nodes != right[j].n_nodes:
                raise MatchingError(
                    f"graphs must have equal RoI counts: {left[i].graph_id} ({left[i].n_nodes}) "
                    f"vs {right[j].graph_id} ({right[j].n_nodes})")
        scores = np.zeros(len(pairs))
        if not pairs:
            return scores
        with no_grad():
            zl = self._embed(left, slot_mask)
            zr = zl if right is left else self._embed(right, slot_mask)
            by_size = defaultdict(list)
            for k, (i, j) in enumerate(pairs):
                by_size[left[i].n_nodes].append(k)
            for ks in by_size.values():
                for start in range(0, len(ks), SCORE_CHUNK):
                    chunk = ks[start:start + SCORE_CHUNK]
                    z1 = Tensor(np.stack([zl[pairs[k][0]] for k in chunk]))
                    z2 = Tensor(np.stack([zr[pairs[k][1]] for k in chunk]))
                    scores[chunk] = forward_embedded(z1, z2, self.params, self.config).data
        return scores

    # -- persistence ---------------------------------------------------------
    def save(self, path) -> None:
        tensors = {f"param/{k}": v.data for k, v in self.params.items()}
        tensors["norm/mean"] = self.normalizer.mean
        tensors["norm/std"] = self.normalizer.std
        hyper = {"L": self.config.L, "M": self.config.M, "d_intra": self.config.d_intra,
                 "d_cross": self.config.d_cross, "d": self.in_dim, "net": self.config.to_dict()}
        save_checkpoint(path, tensors, hyper, self.metadata)

    @classmethod
    def load(cls, path) -> "Model":
        tensors, hyper, meta = load_checkpoint(path)
        config = NetConfig(**hyper["net"])
        params = {k[len("param/"):]: Tensor(v, requires_grad=True, name=k[len("param/"):])
                  for k, v in tensors.items() if k.startswith("param/")}
        norm = Normalizer(tensors["norm/mean"], tensors["norm/std"])
        return cls(config, params, norm, meta)
