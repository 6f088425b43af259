"""Per-slot z-scoring with statistics frozen from the training split."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Normalizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, graphs) -> "Normalizer":
        x = np.concatenate([g.feature_matrix() for g in graphs], axis=0)
        return cls(mean=x.mean(axis=0), std=x.std(axis=0))

    @classmethod
    def identity(cls, d: int) -> "Normalizer":
        return cls(mean=np.zeros(d), std=np.ones(d))

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Constant slots (std 0) map to 0."""
        live = self.std > 0
        scale = np.where(live, self.std, 1.0)
        return np.where(live, (x - self.mean) / scale, 0.0)
