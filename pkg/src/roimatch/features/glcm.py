"""Gray-level co-occurrence matrix and its 24 statistics (slots 35-58)."""
from __future__ import annotations

import numpy as np

from .firstorder import DEFAULT_LEVELS, FeatureError, quantize
from .layout import GLCM

# 4-connected neighbours; each direction and its opposite together give a symmetric matrix
OFFSETS = ((0, 1), (0, -1), (1, 0), (-1, 0))


def glcm_matrix(image, mask, levels: int = DEFAULT_LEVELS) -> np.ndarray:
    """Normalised co-occurrence matrix averaged over the 4-connected directions.

    Gray levels are equal-width bins over the masked intensity range. Only
    pairs with both pixels inside the mask count. Returns a ``levels x
    levels`` symmetric matrix summing to 1.
    """
    img = np.asarray(image, dtype=float)
    m = np.asarray(mask, dtype=bool)
    if img.shape != m.shape:
        raise FeatureError(f"image {img.shape} and mask {m.shape} differ in shape")
    if m.sum() < 2:
        raise FeatureError("GLCM needs at least two foreground pixels")
    q = np.zeros(img.shape, dtype=int)
    q[m] = quantize(img[m], levels)
    h, w = m.shape
    mats = []
    for dr, dc in OFFSETS:
        r0, r1 = max(0, -dr), h - max(0, dr)
        c0, c1 = max(0, -dc), w - max(0, dc)
        src = (slice(r0, r1), slice(c0, c1))
        dst = (slice(r0 + dr, r1 + dr), slice(c0 + dc, c1 + dc))
        both = m[src] & m[dst]
        if not both.any():
            continue
        p = np.zeros((levels, levels))
        np.add.at(p, (q[src][both] - 1, q[dst][both] - 1), 1.0)
        mats.append(p / p.sum())
    if not mats:
        raise FeatureError("no neighbouring foreground pixel pair in mask")
    p = np.mean(mats, axis=0)
    return 0.5 * (p + p.T)


def _entropy(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz))) + 0.0


def glcm_statistics(p: np.ndarray) -> dict[str, float]:
    ng = p.shape[0]
    lv = np.arange(1, ng + 1, dtype=float)
    i, j = np.meshgrid(lv, lv, indexing="ij")
    px, py = p.sum(axis=1), p.sum(axis=0)
    ux, uy = float(np.sum(px * lv)), float(np.sum(py * lv))
    sx = np.sqrt(np.sum(px * (lv - ux) ** 2))
    sy = np.sqrt(np.sum(py * (lv - uy) ** 2))
    k_sum = np.arange(2, 2 * ng + 1)
    p_sum = np.array([p[(i + j) == k].sum() for k in k_sum])
    k_diff = np.arange(0, ng)
    p_diff = np.array([p[np.abs(i - j) == k].sum() for k in k_diff])
    diff_avg = float(np.sum(k_diff * p_diff))

    hxy = _entropy(p)
    hx, hy = _entropy(px), _entropy(py)
    outer = np.outer(px, py)
    with np.errstate(divide="ignore", invalid="ignore"):
        hxy1 = float(-np.sum(np.where(p > 0, p * np.log2(np.where(outer > 0, outer, 1.0)), 0.0)))
    hxy2 = _entropy(outer)
    imc1 = (hxy - hxy1) / max(hx, hy) if max(hx, hy) > 0 else 0.0
    imc2 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - hxy)))))

    live_x, live_y = px > 0, py > 0
    sub = p[np.ix_(live_x, live_y)]
    qm = (sub / px[live_x][:, None] / py[live_y][None, :]) @ sub.T
    ev = np.sort(np.abs(np.linalg.eigvals(qm)))[::-1]
    mcc = float(np.sqrt(ev[1])) if len(ev) > 1 else 1.0

    centred = i + j - ux - uy
    corr = (float(np.sum(p * i * j)) - ux * uy) / (sx * sy) if sx * sy > 0 else 1.0
    nonzero_diff = k_diff > 0
    values = {
        "Autocorrelation": np.sum(p * i * j),
        "JointAverage": ux,
        "ClusterProminence": np.sum(p * centred ** 4),
        "ClusterShade": np.sum(p * centred ** 3),
        "ClusterTendency": np.sum(p * centred ** 2),
        "Contrast": np.sum(p * (i - j) ** 2),
        "Correlation": corr,
        "DifferenceAverage": diff_avg,
        "DifferenceEntropy": _entropy(p_diff),
        "DifferenceVariance": np.sum(p_diff * (k_diff - diff_avg) ** 2),
        "JointEnergy": np.sum(p ** 2),
        "JointEntropy": hxy,
        "Imc1": imc1,
        "Imc2": imc2,
        "Idm": np.sum(p / (1 + (i - j) ** 2)),
        "Idmn": np.sum(p / (1 + (i - j) ** 2 / ng ** 2)),
        "Id": np.sum(p / (1 + np.abs(i - j))),
        "Idn": np.sum(p / (1 + np.abs(i - j) / ng)),
        "InverseVariance": np.sum(p_diff[nonzero_diff] / k_diff[nonzero_diff] ** 2),
        "MaximumProbability": p.max(),
        "SumAverage": np.sum(k_sum * p_sum),
        "SumEntropy": _entropy(p_sum),
        "SumSquares": np.sum(p * (i - ux) ** 2),
        "MCC": mcc,
    }
    return {f"glcm_{k}": float(values[k]) for k in GLCM}


def glcm_features(image, mask, levels: int = DEFAULT_LEVELS) -> dict[str, float]:
    return glcm_statistics(glcm_matrix(image, mask, levels))
