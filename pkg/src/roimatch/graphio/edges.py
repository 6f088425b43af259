"""Spatial edge builders over RoI centroids and the connectivity repair loop."""
from __future__ import annotations

import logging
import warnings

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .graph import count_components, normalize_edges

log = logging.getLogger(__name__)

DISTANCE_GROWTH = 1.25


class EdgeParameterError(ValueError):
    pass


def _pairwise(centroids) -> np.ndarray:
    pts = np.asarray(centroids, dtype=float).reshape(-1, 2)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff ** 2).sum(-1))


def build_edges_knn(centroids, k: int) -> list[tuple[int, int]]:
    """Union of each node's ``k`` nearest neighbours.

    Ties in distance go to the lower node index (stable sort).
    """
    dist = _pairwise(centroids)
    n = len(dist)
    if n < 2 or not 1 <= k <= n - 1:
        raise EdgeParameterError(f"k must lie in [1, n-1] with n >= 2; got k={k}, n={n}")
    edges = []
    for i in range(n):
        others = [j for j in range(n) if j != i]
        ranked = sorted(others, key=lambda j: (dist[i, j], j))
        edges.extend((i, j) for j in ranked[:k])
    return normalize_edges(edges)


def build_edges_distance(centroids, threshold: float) -> list[tuple[int, int]]:
    if threshold <= 0:
        raise EdgeParameterError(f"distance threshold must be > 0, got {threshold}")
    dist = _pairwise(centroids)
    n = len(dist)
    return [(i, j) for i in range(n) for j in range(i + 1, n) if dist[i, j] < threshold]


def build_edges_delaunay(centroids) -> list[tuple[int, int]] | None:
    """Edges of the Delaunay triangulation, or ``None`` when it is undefined
    (fewer than 3 points, all collinear, or coincident points left out)."""
    pts = np.asarray(centroids, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n < 3:
        return None
    try:
        tri = Delaunay(pts)
    except QhullError:
        return None
    edges = []
    for a, b, c in tri.simplices:
        edges += [(a, b), (b, c), (a, c)]
    edges = normalize_edges(edges)
    if count_components(n, edges) != 1:
        return None
    return edges


def ensure_connected(centroids, method: str, params: dict) -> tuple[list[tuple[int, int]], dict]:
    """Build edges with ``method`` and grow its parameter until the graph is
    a single component.

    kNN raises ``k`` by one per round (``k = n-1`` is complete); the distance
    builder multiplies the threshold by 1.25 (past the diameter it is
    complete). Delaunay falls back to kNN from ``k = 1`` when the
    triangulation is undefined. Returns the edges and the parameters that
    produced them.
    """
    pts = np.asarray(centroids, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n == 1:
        return [], dict(params)
    if method == "knn":
        k = min(int(params.get("k", 2)), n - 1)
        edges = build_edges_knn(pts, k)
        while count_components(n, edges) > 1:
            k += 1
            edges = build_edges_knn(pts, k)
        return edges, {**params, "k": k}
    if method == "distance":
        t = float(params["threshold"])
        edges = build_edges_distance(pts, t)
        while count_components(n, edges) > 1:
            t *= DISTANCE_GROWTH
            edges = build_edges_distance(pts, t)
        return edges, {**params, "threshold": t}
    if method == "delaunay":
        edges = build_edges_delaunay(pts)
        if edges is not None:
            return edges, dict(params)
        warnings.warn("Delaunay triangulation undefined for these centroids; "
                      "falling back to kNN with repair", RuntimeWarning, stacklevel=2)
        edges, knn_params = ensure_connected(pts, "knn", {"k": 1})
        return edges, {**params, "fallback": "knn", "k": knn_params["k"]}
    raise EdgeParameterError(f"unknown edge method {method!r}")
