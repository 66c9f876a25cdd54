"""Pair-level predictors, vectorised over arrays of node pairs."""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..graph import Graph
from .lowrank import LowRankContext, low_rank_context
from .topology import NodeTable, node_table, personalized_pagerank


@dataclass(frozen=True)
class PairFeatures:
    CN: float
    SP: float
    LHN: float
    PPR: float
    PA: float
    JC: float
    AA: float
    RA: float
    LRA: float
    dLRA: float
    mLRA: float
    LRA_approx: float
    dLRA_approx: float
    mLRA_approx: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)


def pair_matrix(graph: Graph, pairs, context: LowRankContext | None = None,
                table: NodeTable | None = None) -> np.ndarray:
    """``(len(pairs), 14)`` pair-feature block in ``PAIR_COLUMNS`` order.

    The pair ``(i, j)`` and ``(j, i)`` produce identical rows.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(pairs) and (pairs.min() < 0 or pairs.max() >= graph.n):
        raise IndexError("pair references a node outside the graph")
    if np.any(pairs[:, 0] == pairs[:, 1]):
        raise ValueError("pair endpoints must differ")
    table = table or node_table(graph)
    context = context or low_rank_context(graph)
    i, j = pairs[:, 0], pairs[:, 1]
    n = graph.n
    k = graph.degree.astype(np.float64)
    a = graph.adjacency()

    common = a[i].multiply(a[j]).tocsr()
    cn = np.asarray(common.sum(axis=1)).ravel()
    aa_w = np.zeros(n)
    np.divide(1.0, np.log(np.maximum(k, 2.0)), out=aa_w, where=k > 1)
    ra_w = np.zeros(n)
    np.divide(1.0, k, out=ra_w, where=k > 0)
    aa = common @ aa_w
    ra = common @ ra_w

    ki, kj = k[i], k[j]
    pa = ki * kj
    lhn = np.zeros(len(pairs))
    np.divide(cn, pa, out=lhn, where=pa > 0)
    union = ki + kj - cn
    jc = np.zeros(len(pairs))
    np.divide(cn, union, out=jc, where=union > 0)

    d = table.dist[i, j].astype(np.float64)
    sp = np.where(d < 0, float(n), d)

    # average of both walk directions keeps the feature symmetric
    sources, inv = np.unique(pairs, return_inverse=True)
    inv = inv.reshape(-1, 2)
    ppr_mat = personalized_pagerank(graph, sources)
    ppr = 0.5 * (ppr_mat[j, inv[:, 0]] + ppr_mat[i, inv[:, 1]])

    ex, ap = context.exact, context.approx
    cols = [
        cn, sp, lhn, ppr, pa, jc, aa, ra,
        ex.entry(i, j), ex.column_dot(i, j), ex.neighbour_mean(i, j, graph.degree),
        ap.entry(i, j), ap.column_dot(i, j), ap.neighbour_mean(i, j, graph.degree),
    ]
    return np.stack(cols, axis=1) if len(pairs) else np.zeros((0, 14))


def pair_features(graph: Graph, i: int, j: int, context: LowRankContext | None = None) -> PairFeatures:
    """All 14 pair-level predictors of one pair."""
    row = pair_matrix(graph, [[i, j]], context)[0]
    return PairFeatures(*(float(v) for v in row))
