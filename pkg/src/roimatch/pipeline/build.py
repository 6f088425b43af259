"""Annotation file + subject record -> attributed RoI graph."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from ..features import DEFAULT_LEVELS, SubjectRecord, assemble_node_vector, compute_radiomics
from ..graphio import (
    DEFAULT_VOCABULARY,
    Node,
    RoiGraph,
    centroid,
    ensure_connected,
    load_image,
    parse_annotations,
    rasterize,
)

log = logging.getLogger(__name__)


def build_subject_graph(annotation_path, subject: SubjectRecord | None = None, precomputed=None,
                        method: str = "knn", params: dict | None = None, levels: int = DEFAULT_LEVELS,
                        vocabulary=DEFAULT_VOCABULARY, unknown: str = "error") -> RoiGraph:
    """Graph for one subject; the graph id is the annotation file stem.

    Nodes follow vocabulary order. Without a readable image every node gets
    placeholder (zero) radiomics and the graph provenance says so.
    """
    path = Path(annotation_path)
    sid = path.stem
    annotations, image_path = parse_annotations(path, vocabulary, unknown)
    if not annotations:
        raise ValueError(f"{path}: no RoI polygons")
    order = {lab: k for k, lab in enumerate(vocabulary or ())}
    annotations = sorted(annotations, key=lambda a: (order.get(a.label, len(order)), a.label))

    image = None
    if image_path and Path(image_path).exists():
        image = load_image(image_path)
    elif image_path:
        log.warning("%s: image %s not found; radiomics set to placeholder", path, image_path)
    if image is not None:
        shape = image.shape[:2]
    else:
        pts = np.concatenate([np.asarray(a.polygon) for a in annotations])
        shape = (int(np.ceil(pts[:, 1].max())) + 1, int(np.ceil(pts[:, 0].max())) + 1)

    nodes, provenance = [], {}
    for a in annotations:
        mask = rasterize(a.polygon, shape)
        c = centroid(mask)
        computed = compute_radiomics(image, mask, levels) if image is not None else None
        ingested = (precomputed or {}).get((sid, a.label))
        vec, prov = assemble_node_vector(computed, ingested, subject)
        nodes.append(Node(a.label, c, vec))
        provenance[a.label] = prov
    centroids = np.array([n.centroid for n in nodes])
    edges, final = ensure_connected(centroids, method, dict(params or {}))
    label = subject.label if subject is not None else "unknown"
    return RoiGraph(sid, label, nodes, edges, method, final,
                    {"annotation": path.name, "image": Path(image_path).name if image_path else None,
                     "nodes": provenance})
