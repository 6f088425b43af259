"""The attributed RoI graph and its JSON file format."""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

LABELS = ("fractured", "non-fractured", "unknown")
METHODS = ("knn", "delaunay", "distance")


class GraphError(ValueError):
    pass


@dataclass
class Node:
    roi_label: str
    centroid: tuple[float, float]
    features: np.ndarray

    def __eq__(self, other):
        return (isinstance(other, Node) and self.roi_label == other.roi_label
                and tuple(self.centroid) == tuple(other.centroid)
                and np.array_equal(self.features, other.features))


def normalize_edges(edges) -> list[tuple[int, int]]:
    """Sorted, de-duplicated ``(i, j)`` pairs with ``i < j``; self-loops dropped."""
    out = {(min(i, j), max(i, j)) for i, j in edges if i != j}
    return sorted((int(i), int(j)) for i, j in out)


def count_components(n: int, edges) -> int:
    if n == 0:
        return 0
    edges = list(edges)
    if not edges:
        return n
    rows, cols = zip(*edges)
    mat = coo_matrix((np.ones(len(edges)), (rows, cols)), shape=(n, n))
    return int(connected_components(mat, directed=False)[0])


@dataclass(eq=False)
class RoiGraph:
    graph_id: str
    subject_label: str
    nodes: list[Node]
    edges: list[tuple[int, int]]
    build_method: str = "knn"
    build_params: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.subject_label not in LABELS:
            raise GraphError(f"{self.graph_id}: unknown subject label {self.subject_label!r}")
        if self.build_method not in METHODS:
            raise GraphError(f"{self.graph_id}: unknown build method {self.build_method!r}")
        if not self.nodes:
            raise GraphError(f"{self.graph_id}: graph has no nodes")
        self.edges = normalize_edges(self.edges)
        n = len(self.nodes)
        for i, j in self.edges:
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"{self.graph_id}: edge ({i}, {j}) out of range for {n} nodes")
        lengths = {len(node.features) for node in self.nodes}
        if len(lengths) != 1:
            raise GraphError(f"{self.graph_id}: node feature lengths differ: {sorted(lengths)}")
        if count_components(n, self.edges) != 1:
            raise GraphError(f"{self.graph_id}: graph is not connected")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_features(self) -> int:
        return len(self.nodes[0].features)

    def centroids(self) -> np.ndarray:
        return np.array([n.centroid for n in self.nodes], dtype=float)

    def feature_matrix(self) -> np.ndarray:
        return np.stack([np.asarray(n.features, dtype=float) for n in self.nodes])

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_nodes, self.n_nodes))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a

    def is_connected(self) -> bool:
        return count_components(self.n_nodes, self.edges) == 1

    def permuted(self, order) -> "RoiGraph":
        """Copy with node ``order[k]`` moved to position ``k``."""
        order = list(order)
        inverse = {old: new for new, old in enumerate(order)}
        return RoiGraph(
            graph_id=self.graph_id,
            subject_label=self.subject_label,
            nodes=[self.nodes[k] for k in order],
            edges=[(inverse[i], inverse[j]) for i, j in self.edges],
            build_method=self.build_method,
            build_params=dict(self.build_params),
            provenance=dict(self.provenance),
        )

    def __eq__(self, other):
        if not isinstance(other, RoiGraph):
            return NotImplemented
        return (self.graph_id == other.graph_id and self.subject_label == other.subject_label
                and self.nodes == other.nodes and self.edges == other.edges
                and self.build_method == other.build_method
                and self.build_params == other.build_params
                and self.provenance == other.provenance)

    def to_dict(self) -> dict:
        return {
            "graph_id": self.graph_id,
            "subject_label": self.subject_label,
            "build_method": self.build_method,
            "build_params": self.build_params,
            "provenance": self.provenance,
            "nodes": [
                {"label": n.roi_label, "centroid": [float(c) for c in n.centroid],
                 "features": [float(v) for v in n.features]}
                for n in self.nodes
            ],
            "edges": [[i, j] for i, j in self.edges],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoiGraph":
        try:
            nodes = [Node(n["label"], tuple(float(c) for c in n["centroid"]),
                          np.asarray(n["features"], dtype=float)) for n in d["nodes"]]
            return cls(
                graph_id=str(d["graph_id"]),
                subject_label=d["subject_label"],
                nodes=nodes,
                edges=[tuple(e) for e in d["edges"]],
                build_method=d.get("build_method", "knn"),
                build_params=dict(d.get("build_params", {})),
                provenance=dict(d.get("provenance", {})),
            )
        except KeyError as exc:
            raise GraphError(f"graph record missing field {exc}") from exc


def write_json_atomic(path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def save_graph(graph: RoiGraph, path) -> None:
    write_json_atomic(path, graph.to_dict())


def load_graph(path) -> RoiGraph:
    with open(path, encoding="utf-8") as fh:
        return RoiGraph.from_dict(json.load(fh))
