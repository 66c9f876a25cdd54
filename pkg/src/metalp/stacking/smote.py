"""Synthetic minority oversampling."""
from __future__ import annotations

import logging

import numpy as np

from ..graph import derive_rng
from ..predictors import FeatureMatrix

logger = logging.getLogger(__name__)

K_NEIGHBOURS = 5
_CHUNK = 1024


def nearest_neighbours(X: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest other rows (Euclidean), ties by index."""
    n = len(X)
    sq = (X * X).sum(axis=1)
    out = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, _CHUNK):
        blk = X[start:start + _CHUNK]
        d = sq[start:start + _CHUNK, None] + sq[None, :] - 2.0 * blk @ X.T
        d = np.maximum(d, 0.0)
        d[np.arange(len(blk)), np.arange(start, start + len(blk))] = np.inf
        out[start:start + len(blk)] = np.argsort(d, axis=1, kind="stable")[:, :k]
    return out


def smote_balance(matrix: FeatureMatrix, seed: int, k: int = K_NEIGHBOURS) -> FeatureMatrix:
    """Oversample the minority class until both classes have equal counts.

    Original rows come first and unchanged; each synthetic row is
    ``x + u * (x_nn - x)`` for a uniformly drawn minority row ``x``, one of its
    ``k`` nearest minority neighbours ``x_nn`` and ``u ~ U(0, 1)``. Synthetic
    rows carry the pair ``(-1, -1)``.
    """
    y = matrix.y
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present")
    if n_pos == n_neg:
        return matrix
    minority = 1 if n_pos < n_neg else 0
    idx = np.flatnonzero(y == minority)
    need = abs(n_pos - n_neg)
    rng = derive_rng(seed, 11)
    base = rng.integers(0, len(idx), size=need)
    Xm = matrix.X[idx]
    if len(idx) == 1:
        logger.warning("minority class has a single row; duplicating it")
        synth = np.repeat(Xm, need, axis=0)
    else:
        kk = min(k, len(idx) - 1)
        nn = nearest_neighbours(Xm, kk)
        pick = nn[base, rng.integers(0, kk, size=need)]
        u = rng.random(need)[:, None]
        synth = Xm[base] + u * (Xm[pick] - Xm[base])
    X = np.vstack([matrix.X, synth])
    labels = np.concatenate([y, np.full(need, minority, dtype=np.int8)])
    pairs = np.vstack([matrix.pairs, np.full((need, 2), -1, dtype=np.int64)])
    return FeatureMatrix(X, labels, pairs, matrix.columns)
