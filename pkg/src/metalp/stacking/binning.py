"""Per-feature quantisation for histogram tree growth."""
from __future__ import annotations

import numpy as np

MAX_BINS = 256


class Binner:
    """Map each feature to at most ``max_bins`` ordered integer codes.

    Bin ``b`` of feature ``f`` holds values ``x <= thresholds[f][b]`` that do
    not fall in an earlier bin. Thresholds sit midway between the largest
    training value of a bin and the smallest of the next, so the partition of
    the training rows depends only on their order.
    """

    def __init__(self, max_bins: int = MAX_BINS):
        if not 2 <= max_bins <= 256:
            raise ValueError("max_bins must lie in [2, 256]")
        self.max_bins = max_bins
        self.thresholds: list[np.ndarray] = []

    def fit(self, X: np.ndarray) -> "Binner":
        X = np.asarray(X, dtype=np.float64)
        self.thresholds = []
        for col in X.T:
            u = np.unique(col)
            if len(u) > self.max_bins:
                # equal-count cut points chosen among observed values
                ranks = np.searchsorted(np.sort(col), u, side="right")
                targets = np.arange(1, self.max_bins) * (len(col) / self.max_bins)
                pick = np.unique(np.searchsorted(ranks, targets, side="left"))
                u = u[np.minimum(pick, len(u) - 1)]
                u = np.unique(np.append(u, col.max()))
            # u holds each bin's largest value; the last bin needs no threshold
            lo = u[:-1]
            hi = np.unique(col)[np.searchsorted(np.unique(col), lo, side="right")] if len(lo) else lo
            mid = lo + (hi - lo) / 2.0
            mid = np.where(mid < hi, mid, lo)  # adjacent floats: fall back to the lower value
            self.thresholds.append(mid)
        return self

    @property
    def n_bins(self) -> np.ndarray:
        return np.array([len(t) + 1 for t in self.thresholds], dtype=np.int64)

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Feature-major ``uint8`` codes, shape ``(n_features, n_rows)``."""
        X = np.asarray(X, dtype=np.float64)
        codes = np.empty((X.shape[1], X.shape[0]), dtype=np.uint8)
        for f, t in enumerate(self.thresholds):
            codes[f] = np.searchsorted(t, X[:, f], side="left")
        return codes

    def threshold(self, feature: np.ndarray, bin_: np.ndarray) -> np.ndarray:
        out = np.zeros(len(feature))
        for k, (f, b) in enumerate(zip(feature, bin_)):
            if f >= 0:
                out[k] = self.thresholds[f][b]
        return out
