"""Assembling and persisting the 42-column training table."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..graph import CandidatePairSet, Graph
from .columns import FEATURE_COLUMNS, SCHEMA_VERSION
from .lowrank import LowRankContext, low_rank_context
from .pairs import pair_matrix
from .topology import global_features, node_table


@dataclass(frozen=True)
class FeatureMatrix:
    """Predictor table: one row per candidate pair.

    ``pairs`` is ``-1`` for rows that do not correspond to a real pair
    (synthetic rows added by oversampling).
    """

    X: np.ndarray
    y: np.ndarray
    pairs: np.ndarray
    columns: tuple = FEATURE_COLUMNS

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", np.asarray(self.y, dtype=np.int8).reshape(-1))
        object.__setattr__(self, "pairs", np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2))
        object.__setattr__(self, "columns", tuple(self.columns))
        if X.ndim != 2 or X.shape[1] != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} columns, got shape {X.shape}")
        if not (len(self.y) == len(X) == len(self.pairs)):
            raise ValueError("X, y and pairs differ in length")

    def __len__(self) -> int:
        return len(self.y)

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape

    def take(self, rows) -> "FeatureMatrix":
        return FeatureMatrix(self.X[rows], self.y[rows], self.pairs[rows], self.columns)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# metalp-features v{SCHEMA_VERSION}\n")
            w = csv.writer(fh)
            w.writerow(["i", "j", *self.columns, "label"])
            for p, x, lab in zip(self.pairs, self.X, self.y):
                w.writerow([int(p[0]), int(p[1]), *(repr(float(v)) for v in x), int(lab)])

    @classmethod
    def from_csv(cls, path: str | Path) -> "FeatureMatrix":
        with open(path, encoding="utf-8") as fh:
            first = fh.readline().strip()
            if first != f"# metalp-features v{SCHEMA_VERSION}":
                raise ValueError(f"unsupported feature file header: {first!r}")
            rows = list(csv.reader(fh))
        header = rows[0]
        columns = tuple(header[2:-1])
        if columns != FEATURE_COLUMNS:
            raise ValueError("feature file columns do not match the current schema")
        body = np.array(rows[1:], dtype=np.float64).reshape(-1, len(header))
        return cls(body[:, 2:-1], body[:, -1].astype(np.int8), body[:, :2].astype(np.int64), columns)


def feature_rows(graph: Graph, pairs, context: LowRankContext | None = None) -> np.ndarray:
    """``(len(pairs), 42)`` predictor values for arbitrary pairs of ``graph``."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    table = node_table(graph)
    context = context or low_rank_context(graph)
    glob = np.broadcast_to(global_features(graph, table).as_array(), (len(pairs), 8))
    block = pair_matrix(graph, pairs, context, table)
    return np.hstack([glob, block, table.matrix(pairs[:, 0]), table.matrix(pairs[:, 1])])


def build_feature_matrix(graph: Graph, positives: CandidatePairSet, negatives: CandidatePairSet,
                         context: LowRankContext | None = None) -> FeatureMatrix:
    """Predictors for positives followed by negatives, computed on ``graph``.

    Raises
    ------
    ValueError
        If a pair repeats, is an edge of ``graph``, or is labelled both ways.
    """
    pairs = np.vstack([positives.pairs, negatives.pairs]).astype(np.int64)
    labels = np.concatenate([np.ones(len(positives), np.int8), np.zeros(len(negatives), np.int8)])
    keys = pairs[:, 0] * graph.n + pairs[:, 1]
    if len(np.unique(keys)) != len(keys):
        pos = set(positives.keys(graph.n).tolist())
        if pos & set(negatives.keys(graph.n).tolist()):
            raise ValueError("a pair is listed as both positive and negative")
        raise ValueError("candidate pairs contain duplicates")
    if graph.has_edges(pairs).any():
        raise ValueError("candidate pairs must not be edges of the training graph")
    X = feature_rows(graph, pairs, context)
    return FeatureMatrix(X, labels, pairs)
