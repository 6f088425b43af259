"""LabelMe-style polygon annotations, rasterisation and moment centroids."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from shapely.geometry import LinearRing
from skimage.draw import polygon as draw_polygon

log = logging.getLogger(__name__)

DEFAULT_VOCABULARY = (
    "femoral head",
    "subcapital",
    "inferior neck",
    "superior neck",
    "intertrochanteric",
    "greater trochanter",
    "lesser trochanter",
    "femur shaft",
)


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class RoiAnnotation:
    label: str
    polygon: tuple[tuple[float, float], ...]


def _check_polygon(label: str, points) -> tuple[tuple[float, float], ...]:
    if len(points) < 3:
        raise AnnotationError(f"degenerate polygon for {label!r}: {len(points)} vertices")
    pts = tuple((float(x), float(y)) for x, y in points)
    if not LinearRing(pts).is_simple:
        raise AnnotationError(f"self-intersecting polygon for {label!r}")
    return pts


def parse_annotations(path, vocabulary=DEFAULT_VOCABULARY, unknown: str = "error"
                      ) -> tuple[list[RoiAnnotation], str | None]:
    """Read ``{image_path, shapes: [{label, points}]}``.

    Returns the annotations in file order and the image path (resolved
    against the annotation file's directory). ``unknown`` is ``"error"`` or
    ``"warn"`` for labels outside ``vocabulary``.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("shapes"), list):
        raise AnnotationError(f"{path}: expected an object with a 'shapes' list")
    out: list[RoiAnnotation] = []
    seen: set[str] = set()
    for idx, shape in enumerate(doc["shapes"]):
        if not isinstance(shape, dict) or "label" not in shape or "points" not in shape:
            raise AnnotationError(f"{path}: shapes[{idx}] needs 'label' and 'points'")
        label = str(shape["label"])
        if label in seen:
            raise AnnotationError(f"{path}: duplicate RoI label {label!r}")
        seen.add(label)
        if vocabulary is not None and label not in vocabulary:
            if unknown == "error":
                raise AnnotationError(f"{path}: shapes[{idx}] has unknown label {label!r}")
            log.warning("%s: unknown RoI label %r kept", path, label)
        try:
            points = _check_polygon(label, shape["points"])
        except (TypeError, ValueError) as exc:
            if isinstance(exc, AnnotationError):
                raise AnnotationError(f"{path}: shapes[{idx}]: {exc}") from exc
            raise AnnotationError(f"{path}: shapes[{idx}].points malformed") from exc
        out.append(RoiAnnotation(label, points))
    image = doc.get("image_path") or doc.get("imagePath")
    image_path = str((path.parent / image).resolve()) if image else None
    return out, image_path


def rasterize(polygon, shape: tuple[int, int]) -> np.ndarray:
    """Binary mask (rows x cols) of a polygon given as (x, y) = (col, row)."""
    pts = np.asarray(polygon, dtype=float)
    rr, cc = draw_polygon(pts[:, 1], pts[:, 0], shape=shape)
    mask = np.zeros(shape, dtype=bool)
    mask[rr, cc] = True
    return mask


def centroid(mask) -> tuple[float, float]:
    """Image-moment centroid ``(M10/M00, M01/M00)`` in (x, y) = (col, row)."""
    mask = np.asarray(mask, dtype=bool)
    m00 = mask.sum()
    if m00 == 0:
        raise AnnotationError("empty RoI mask")
    rows, cols = np.nonzero(mask)
    return float(cols.sum() / m00), float(rows.sum() / m00)


def load_image(path) -> np.ndarray:
    """8- or 16-bit single-channel PGM/PNG as a float array."""
    with Image.open(path) as im:
        if im.mode not in ("L", "I;16", "I;16B", "I;16L", "I"):
            raise AnnotationError(f"{path}: expected single-channel grayscale, got mode {im.mode}")
        return np.asarray(im, dtype=float)
