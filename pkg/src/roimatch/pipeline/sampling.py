"""Pair labels and balanced pair-batch sampling for training."""
from __future__ import annotations

import logging
import math
from collections import defaultdict

import numpy as np

from ..graphio import RoiGraph

log = logging.getLogger(__name__)

POSITIVE_BAND = (0.25, 0.75)
MAX_DRAWS_PER_PAIR = 1000


class DatasetError(ValueError):
    pass


def pair_label(g1: RoiGraph, g2: RoiGraph) -> int:
    """1 when both graphs share a class, else 0."""
    for g in (g1, g2):
        if g.subject_label not in ("fractured", "non-fractured"):
            raise DatasetError(f"{g.graph_id}: cannot form a training target from label {g.subject_label!r}")
    return int(g1.subject_label == g2.subject_label)


def sample_pair_batch(graphs: list[RoiGraph], batch_size: int, rng: np.random.Generator
                      ) -> list[tuple[int, int, int]]:
    """Draw ``batch_size`` pairs ``(i, j, label)`` of distinct, equal-sized graphs.

    Pairs are drawn uniformly and redrawn on a size mismatch. A pair whose
    label would push the same-class rate of the batch outside [0.25, 0.75]
    is rejected. Balancing is skipped (with a warning) if one label cannot
    occur, and for single-pair batches.
    """
    sizes = np.array([g.n_nodes for g in graphs])
    groups = defaultdict(list)
    for i, s in enumerate(sizes):
        groups[int(s)].append(i)
    if not any(len(v) >= 2 for v in groups.values()):
        raise DatasetError("no two training graphs share a node count")

    labels = [g.subject_label for g in graphs]
    can_pos = any(len(v) >= 2 and len({labels[i] for i in v}) < len(v) for v in groups.values())
    can_neg = any(len({labels[i] for i in v}) > 1 for v in groups.values())
    cap = {1: batch_size, 0: batch_size}
    if batch_size >= 2 and can_pos and can_neg:
        cap = {1: math.floor(POSITIVE_BAND[1] * batch_size),
               0: batch_size - math.ceil(POSITIVE_BAND[0] * batch_size)}
    elif batch_size >= 2:
        log.warning("batch balancing disabled: only one pair label is possible in this split")

    n = len(graphs)
    out: list[tuple[int, int, int]] = []
    counts = {0: 0, 1: 0}
    draws = 0
    while len(out) < batch_size:
        draws += 1
        if draws > MAX_DRAWS_PER_PAIR * batch_size:
            raise DatasetError("pair sampling did not converge; split too small or degenerate")
        i, j = rng.integers(0, n, size=2)
        if i == j or sizes[i] != sizes[j]:
            continue
        y = pair_label(graphs[i], graphs[j])
        if counts[y] >= cap[y]:
            continue
        counts[y] += 1
        out.append((int(i), int(j), y))
    return out
