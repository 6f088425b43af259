"""Stratified template / train / test splitting and the dataset manifest."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import RoiGraph, load_graph, write_json_atomic


class SplitError(ValueError):
    pass


@dataclass
class DatasetSplit:
    train: list[RoiGraph]
    test: list[RoiGraph]
    template: list[RoiGraph]
    seed: int
    fractions: dict = field(default_factory=dict)

    def ids(self) -> dict[str, list[str]]:
        return {role: [g.graph_id for g in getattr(self, role)] for role in ("template", "train", "test")}


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _allocate(class_sizes: dict[str, int], frac: float) -> dict[str, int]:
    """Per-class counts summing to round(frac * total), by largest remainder."""
    total = sum(class_sizes.values())
    target = _round_half_up(frac * total)
    exact = {c: frac * n for c, n in class_sizes.items()}
    counts = {c: int(math.floor(v)) for c, v in exact.items()}
    order = sorted(class_sizes, key=lambda c: (-(exact[c] - counts[c]), c))
    for c in order:
        if sum(counts.values()) >= target:
            break
        if counts[c] < class_sizes[c]:
            counts[c] += 1
    return counts


def _stratified_take(groups: dict[str, list[int]], frac: float, rng) -> tuple[dict, dict]:
    counts = _allocate({c: len(v) for c, v in groups.items()}, frac)
    taken, rest = {}, {}
    for c in sorted(groups):
        idx = list(groups[c])
        perm = rng.permutation(len(idx))
        shuffled = [idx[p] for p in perm]
        taken[c] = sorted(shuffled[:counts[c]])
        rest[c] = sorted(shuffled[counts[c]:])
    return taken, rest


def make_split(pool: list[RoiGraph], template_frac: float = 0.10, train_frac: float = 0.80,
               seed: int = 0, classes=("fractured", "non-fractured")) -> DatasetSplit:
    """Stratified template set first, then a stratified train/test split of the rest.

    Per-class counts use largest-remainder rounding so the split totals are
    ``round(frac * size)``.
    """
    if not 0 <= template_frac < 1 or not 0 < train_frac <= 1:
        raise SplitError(f"bad fractions template={template_frac}, train={train_frac}")
    groups: dict[str, list[int]] = {c: [] for c in classes}
    for i, g in enumerate(pool):
        if g.subject_label not in groups:
            raise SplitError(f"{g.graph_id}: label {g.subject_label!r} cannot be split")
        groups[g.subject_label].append(i)
    missing = [c for c, v in groups.items() if not v]
    if missing:
        raise SplitError(f"class(es) absent from pool: {', '.join(missing)}")
    rng = np.random.default_rng(seed)
    template, remainder = _stratified_take(groups, template_frac, rng)
    test, train = _stratified_take(remainder, 1.0 - train_frac, rng)

    def pick(sel):
        return [pool[i] for i in sorted(i for v in sel.values() for i in v)]

    return DatasetSplit(train=pick(train), test=pick(test), template=pick(template), seed=seed,
                        fractions={"template": template_frac, "train": train_frac})


def write_manifest(path, graph_files: dict[str, str], split: DatasetSplit | None = None,
                   extra: dict | None = None) -> None:
    """Manifest JSON: graph id -> file (relative to the manifest) plus split roles."""
    path = Path(path)
    payload = {
        "graphs": {gid: str(f) for gid, f in sorted(graph_files.items())},
        "split": split.ids() if split is not None else None,
        "seed": split.seed if split is not None else None,
        "fractions": split.fractions if split is not None else None,
    }
    if extra:
        payload.update(extra)
    write_json_atomic(path, payload)


def load_manifest(path) -> tuple[dict[str, RoiGraph], dict]:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    graphs = {gid: load_graph(path.parent / f) for gid, f in doc["graphs"].items()}
    return graphs, doc


def split_from_manifest(graphs: dict[str, RoiGraph], doc: dict) -> DatasetSplit:
    roles = doc.get("split")
    if not roles:
        raise SplitError("manifest carries no split assignment")
    return DatasetSplit(
        train=[graphs[g] for g in roles["train"]],
        test=[graphs[g] for g in roles["test"]],
        template=[graphs[g] for g in roles["template"]],
        seed=doc.get("seed") or 0,
        fractions=doc.get("fractions") or {},
    )
