"""Intensity statistics over the RoI pixels (slots 1-5 and 17-34)."""
from __future__ import annotations

import numpy as np

from .layout import BASIC, FIRSTORDER

DEFAULT_LEVELS = 32


class FeatureError(ValueError):
    pass


def quantize(values, levels: int = DEFAULT_LEVELS, lo: float | None = None,
             hi: float | None = None) -> np.ndarray:
    """Equal-width binning of ``values`` into gray levels ``1..levels`` over [lo, hi]."""
    v = np.asarray(values, dtype=float)
    lo = float(v.min()) if lo is None else lo
    hi = float(v.max()) if hi is None else hi
    if hi <= lo:
        return np.ones(v.shape, dtype=int)
    q = np.floor((v - lo) / (hi - lo) * levels).astype(int) + 1
    return np.clip(q, 1, levels)


def first_order_features(pixels, levels: int = DEFAULT_LEVELS, pixel_area: float = 1.0
                         ) -> dict[str, float]:
    """Return ``{"basic_<name>": ..., "firstorder_<name>": ...}`` for one RoI.

    Entropy and uniformity use ``levels`` equal-width bins over the RoI's
    range. Skewness and kurtosis are 0 for a zero-variance region, and the
    robust mean absolute deviation is 0 when no pixel lies between the 10th
    and 90th percentiles.
    """
    x = np.asarray(pixels, dtype=float).ravel()
    if x.size == 0:
        raise FeatureError("first-order features need at least one pixel")
    n = x.size
    mu = x.mean()
    dev = x - mu
    m2 = np.mean(dev ** 2)
    m3 = np.mean(dev ** 3)
    m4 = np.mean(dev ** 4)
    p10, p25, p75, p90 = np.percentile(x, [10, 25, 75, 90])
    robust = x[(x >= p10) & (x <= p90)]
    counts = np.bincount(quantize(x, levels), minlength=levels + 1)[1:]
    p = counts[counts > 0] / n
    energy = float(np.sum(x ** 2))
    zero_var = m2 <= 0

    basic = [mu, x.min(), x.max(), float(n), n * pixel_area]
    first = [
        p10, p90, energy, pixel_area * energy, float(-np.sum(p * np.log2(p))) + 0.0, p75 - p25,
        0.0 if zero_var else m4 / m2 ** 2,
        x.max(), np.mean(np.abs(dev)), mu, np.median(x), x.min(), x.max() - x.min(),
        np.mean(np.abs(robust - robust.mean())) if robust.size else 0.0, np.sqrt(energy / n),
        0.0 if zero_var else m3 / m2 ** 1.5,
        float(np.sum(p ** 2)), m2,
    ]
    out = {f"basic_{k}": float(v) for k, v in zip(BASIC, basic)}
    out.update({f"firstorder_{k}": float(v) for k, v in zip(FIRSTORDER, first)})
    return out
