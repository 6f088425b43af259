"""2-D shape descriptors of a binary RoI mask (slots 6-16)."""
from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from skimage.measure import find_contours

from .firstorder import FeatureError
from .layout import SHAPE


def _max_pairwise(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    cand = points
    if len(points) > 3:
        try:
            cand = points[ConvexHull(points).vertices]
        except QhullError:
            # collinear: the extremes along the principal direction carry the diameter
            order = np.lexsort((points[:, 1], points[:, 0]))
            cand = points[[order[0], order[-1]]]
    diff = cand[:, None, :] - cand[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def _extent_along(mask: np.ndarray, axis: int) -> float:
    """Largest distance between foreground pixels sharing a row (axis=1) or column (axis=0)."""
    best = 0.0
    lines = mask if axis == 1 else mask.T
    for line in lines:
        idx = np.flatnonzero(line)
        if idx.size:
            best = max(best, float(idx[-1] - idx[0]))
    return best


def _contour_metrics(mask: np.ndarray) -> tuple[float, float]:
    padded = np.pad(mask.astype(float), 1)
    area = 0.0
    perimeter = 0.0
    for c in find_contours(padded, 0.5, positive_orientation="high"):
        r, q = c[:, 0], c[:, 1]
        area += 0.5 * float(np.sum(q[:-1] * r[1:] - q[1:] * r[:-1]))
        perimeter += float(np.sum(np.hypot(np.diff(r), np.diff(q))))
    return abs(area), perimeter


def shape_features(mask, pixel_area: float = 1.0) -> dict[str, float]:
    """Covariance-axis, diameter and marching-squares contour descriptors.

    Axis lengths are ``4 * sqrt(eigenvalue)`` of the pixel-coordinate
    covariance and elongation is ``sqrt(minor / major)``. With fewer than 3
    pixels the axis quantities and elongation are reported as 0.
    """
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        raise FeatureError("shape features need a non-empty mask")
    rows, cols = np.nonzero(m)
    # anchor at the bounding box so translated masks give bit-identical values
    pts = np.column_stack([rows - rows.min(), cols - cols.min()]).astype(float)
    count = len(pts)
    if count >= 3:
        evals = np.linalg.eigvalsh(np.cov(pts.T, bias=True))
        minor, major = max(evals[0], 0.0), max(evals[1], 0.0)
        elongation = float(np.sqrt(minor / major)) if major > 0 else 0.0
        major_len, minor_len = 4 * np.sqrt(major), 4 * np.sqrt(minor)
    else:
        elongation = major_len = minor_len = 0.0
    mesh, perimeter = _contour_metrics(m)
    values = {
        "Elongation": elongation,
        "MajorAxisLength": major_len,
        "MinorAxisLength": minor_len,
        "MaximumDiameter": _max_pairwise(pts),
        "MaximumDiameterRow": _extent_along(m, 1),
        "MaximumDiameterColumn": _extent_along(m, 0),
        "MeshSurface": mesh * pixel_area,
        "PixelSurface": count * pixel_area,
        "Perimeter": perimeter,
        "PerimeterSurfaceRatio": perimeter / mesh if mesh > 0 else 0.0,
        "Sphericity": 2 * np.sqrt(np.pi * mesh) / perimeter if perimeter > 0 else 0.0,
    }
    return {f"shape_{k}": float(values[k]) for k in SHAPE}
