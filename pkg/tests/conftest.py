import numpy as np
import pytest

from roimatch.graphio import Node, RoiGraph, ensure_connected


def random_graph(rng, n, d, graph_id="g", label="fractured", method="knn"):
    pts = rng.uniform(0, 100, size=(n, 2))
    params = {"k": min(2, n - 1)} if method == "knn" and n > 1 else {}
    if method == "distance":
        params = {"threshold": 30.0}
    edges, final = ensure_connected(pts, method, params) if n > 1 else ([], {})
    nodes = [Node(f"roi{k}", (float(p[0]), float(p[1])), rng.normal(size=d)) for k, p in enumerate(pts)]
    return RoiGraph(graph_id, label, nodes, edges, method, final)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
