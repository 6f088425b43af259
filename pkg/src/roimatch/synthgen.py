"""Seeded synthetic cohorts of labelled RoI graphs.

Every node carries 130 standard-normal features. A chosen set of
informative slots carries the class signal, split between a mean shift and
an inter-node correlation according to ``structure_coupling``:

* mean part: positives at ``+gap/2``, negatives at ``-gap/2`` with
  ``gap = separation * (1 - structure_coupling)``;
* correlation part: in positives every node shares a per-subject latent
  value with weight ``rho = structure_coupling * separation**2 / (1 + separation**2)``,
  negatives are independent across nodes. Marginals stay N(shift, 1).

With ``stratified_marginals`` each (class, RoI, slot) column is mapped by
rank onto stratified normal quantiles, so both classes share the same
empirical marginal to within 1/N while rank correlations are kept.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .features.layout import N_SLOTS
from .graphio import Node, RoiGraph, ensure_connected, save_graph, write_manifest

# (x, y) pixel positions of a left-femur-like layout, origin top-left
CANONICAL_LAYOUT: dict[str, tuple[float, float]] = {
    "femoral head": (60.0, 50.0),
    "subcapital": (85.0, 62.0),
    "superior neck": (108.0, 58.0),
    "inferior neck": (100.0, 88.0),
    "intertrochanteric": (130.0, 100.0),
    "greater trochanter": (150.0, 62.0),
    "femur shaft": (135.0, 200.0),
    "lesser trochanter": (120.0, 140.0),
}
LAYOUT_BY_COUNT = {
    6: list(CANONICAL_LAYOUT)[:6],
    7: list(CANONICAL_LAYOUT)[:7],
    8: list(CANONICAL_LAYOUT)[:8],
}


class SpecError(ValueError):
    pass


@dataclass
class SynthSpec:
    n_subjects: int = 547
    positive_count: int = 94
    node_counts: list[int] = field(default_factory=lambda: [7])
    node_count_weights: list[float] | None = None
    informative_slots: list[int] = field(default_factory=lambda: list(range(1, 11)))
    separation: float = 4.0
    structure_coupling: float = 0.0
    jitter_std: float = 3.0
    edge_method: str = "knn"
    edge_params: dict = field(default_factory=lambda: {"k": 2})
    stratified_marginals: bool = True
    seed: int = 0

    def validate(self) -> None:
        if self.n_subjects < 1:
            raise SpecError("n_subjects must be >= 1")
        if not 0 <= self.positive_count <= self.n_subjects:
            raise SpecError(f"positive_count {self.positive_count} outside [0, {self.n_subjects}]")
        if not self.node_counts or any(c not in LAYOUT_BY_COUNT for c in self.node_counts):
            raise SpecError(f"node counts must be drawn from {sorted(LAYOUT_BY_COUNT)}")
        if self.node_count_weights is not None:
            w = np.asarray(self.node_count_weights, dtype=float)
            if len(w) != len(self.node_counts) or np.any(w < 0) or w.sum() <= 0:
                raise SpecError("node_count_weights must be non-negative, one per node count")
        if any(not 1 <= s <= N_SLOTS for s in self.informative_slots):
            raise SpecError(f"informative slots must lie in 1..{N_SLOTS}")
        if len(set(self.informative_slots)) != len(self.informative_slots):
            raise SpecError("informative slots repeat")
        if self.separation < 0:
            raise SpecError("separation must be >= 0")
        if not 0 <= self.structure_coupling <= 1:
            raise SpecError("structure_coupling must lie in [0, 1]")
        if self.jitter_std < 0:
            raise SpecError("jitter_std must be >= 0")
        if self.edge_method not in ("knn", "delaunay", "distance"):
            raise SpecError(f"unknown edge method {self.edge_method!r}")

    @property
    def mean_gap(self) -> float:
        return self.separation * (1.0 - self.structure_coupling)

    @property
    def node_correlation(self) -> float:
        s2 = self.separation ** 2
        return self.structure_coupling * s2 / (1.0 + s2)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise SpecError(f"unknown spec keys: {sorted(unknown)}")
        return cls(**d)


def _stratify(column: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = len(column)
    ranks = np.empty(n, dtype=int)
    ranks[np.argsort(column, kind="stable")] = np.arange(n)
    return ndtri((ranks + rng.uniform(0.0, 1.0, size=n)) / n)


def generate(spec: SynthSpec) -> tuple[list[RoiGraph], dict]:
    """Build the cohort; returns graphs and metadata (informative slots, spec)."""
    spec.validate()
    master = np.random.default_rng(np.random.SeedSequence([spec.seed, 0]))
    labels = np.zeros(spec.n_subjects, dtype=int)
    labels[:spec.positive_count] = 1
    labels = master.permutation(labels)
    weights = None
    if spec.node_count_weights is not None:
        weights = np.asarray(spec.node_count_weights, float)
        weights = weights / weights.sum()
    counts = master.choice(spec.node_counts, size=spec.n_subjects, p=weights)

    informative = np.asarray(spec.informative_slots, dtype=int) - 1
    rho = spec.node_correlation
    raw, layouts = [], []
    for i in range(spec.n_subjects):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1, i]))
        n = int(counts[i])
        roi = LAYOUT_BY_COUNT[n]
        pts = np.array([CANONICAL_LAYOUT[r] for r in roi]) + rng.normal(0, spec.jitter_std, (n, 2))
        x = rng.standard_normal((n, N_SLOTS))
        if labels[i] == 1 and rho > 0 and len(informative):
            shared = rng.standard_normal(len(informative))
            x[:, informative] = np.sqrt(rho) * shared + np.sqrt(1 - rho) * x[:, informative]
        raw.append(x)
        layouts.append((roi, pts))

    if spec.stratified_marginals:
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 2]))
        for cls in (0, 1):
            for roi_name in CANONICAL_LAYOUT:
                members = [(i, layouts[i][0].index(roi_name)) for i in range(spec.n_subjects)
                           if labels[i] == cls and roi_name in layouts[i][0]]
                if len(members) < 2:
                    continue
                block = np.stack([raw[i][k] for i, k in members])
                for s in range(N_SLOTS):
                    block[:, s] = _stratify(block[:, s], rng)
                for (i, k), row in zip(members, block):
                    raw[i][k] = row

    half_gap = 0.5 * spec.mean_gap
    graphs = []
    for i in range(spec.n_subjects):
        x = raw[i]
        if len(informative):
            x[:, informative] += half_gap if labels[i] == 1 else -half_gap
        roi, pts = layouts[i]
        edges, params = ensure_connected(pts, spec.edge_method, dict(spec.edge_params))
        nodes = [Node(r, (float(p[0]), float(p[1])), x[k].copy()) for k, (r, p) in enumerate(zip(roi, pts))]
        graphs.append(RoiGraph(
            graph_id=f"synth-{i:04d}",
            subject_label="fractured" if labels[i] == 1 else "non-fractured",
            nodes=nodes,
            edges=edges,
            build_method=spec.edge_method,
            build_params=params,
        ))
    metadata = {
        "informative_slots": list(spec.informative_slots),
        "spec": spec.to_dict(),
        "positive_count": int(labels.sum()),
        "n_subjects": spec.n_subjects,
    }
    return graphs, metadata


def write_cohort(graphs: list[RoiGraph], metadata: dict, out_dir, split=None) -> Path:
    """Write graph JSON files, a manifest and the metadata file; return the manifest path."""
    out = Path(out_dir)
    files = {}
    for g in graphs:
        rel = Path("graphs") / f"{g.graph_id}.json"
        save_graph(g, out / rel)
        files[g.graph_id] = str(rel)
    manifest = out / "manifest.json"
    write_manifest(manifest, files, split)
    (out / "metadata.json").write_text(json.dumps(metadata, sort_keys=True, indent=1) + "\n")
    return manifest


def oracle_bayes_accuracy(spec: SynthSpec, draws: int = 100_000, seed: int = 0) -> float | None:
    """Monte-Carlo accuracy of the Bayes rule for the mean-shift construction.

    Each node's informative values are iid N(+-gap/2, 1), so the log
    likelihood ratio is ``gap * T`` with T the sum of all informative values
    of the subject. Returns ``None`` when ``structure_coupling > 0`` (no
    closed form).
    """
    spec.validate()
    if spec.structure_coupling > 0:
        return None
    rng = np.random.default_rng(seed)
    prior = spec.positive_count / spec.n_subjects
    if prior in (0.0, 1.0):
        return 1.0
    weights = None
    if spec.node_count_weights is not None:
        weights = np.asarray(spec.node_count_weights, float) / np.sum(spec.node_count_weights)
    n_nodes = rng.choice(spec.node_counts, size=draws, p=weights)
    m = len(spec.informative_slots) * n_nodes
    positive = rng.uniform(size=draws) < prior
    gap = spec.mean_gap
    t = np.where(positive, 0.5, -0.5) * gap * m + np.sqrt(m) * rng.standard_normal(draws)
    decide = gap * t + np.log(prior / (1 - prior)) > 0
    return float(np.mean(decide == positive))
