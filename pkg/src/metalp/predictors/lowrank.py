"""Low-rank reconstructions of the adjacency matrix.

A rank-r reconstruction ``A_r`` is stored in factored form ``L @ R.T`` so
that entries, column dot products and neighbour averages of ``A_r`` can be
read off without ever forming the ``n x n`` matrix:

* entry          ``A_r[i, j]            = L[i] . R[j]``
* column dot     ``(A_r^T A_r)[i, j]    = R[i] (L^T L) R[j]``
* neighbour sums ``sum_{u in N(i)} A_r[u, j] = (A L)[i] . R[j]``

The exact variant keeps the top-``r`` eigenpairs by magnitude (for a
symmetric matrix these are the leading singular triplets). The coarse
variant projects ``A`` onto a subspace found by a few rounds of subspace
iteration from a fixed Gaussian start, ``A_q = Q Q^T A Q Q^T``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from ..graph import Graph, derive_rng

logger = logging.getLogger(__name__)

DEFAULT_RANK = 8
APPROX_RANK = 4
APPROX_ITERATIONS = 5
APPROX_SEED = 0x5EED
_DENSE_LIMIT = 1500


@dataclass(frozen=True)
class Factor:
    L: np.ndarray
    R: np.ndarray
    gram: np.ndarray  # L^T L
    AL: np.ndarray
    AR: np.ndarray

    @classmethod
    def build(cls, adjacency, L: np.ndarray, R: np.ndarray) -> "Factor":
        return cls(L, R, L.T @ L, np.asarray(adjacency @ L), np.asarray(adjacency @ R))

    def entry(self, i, j) -> np.ndarray:
        return np.einsum("pk,pk->p", self.L[i], self.R[j])

    def column_dot(self, i, j) -> np.ndarray:
        return np.einsum("pk,kl,pl->p", self.R[i], self.gram, self.R[j])

    def neighbour_mean(self, i, j, degree) -> np.ndarray:
        s = np.einsum("pk,pk->p", self.AL[i], self.R[j]) + np.einsum("pk,pk->p", self.L[i], self.AR[j])
        den = (degree[i] + degree[j]).astype(np.float64)
        out = np.zeros(len(s))
        np.divide(s, den, out=out, where=den > 0)
        return out

    def dense(self) -> np.ndarray:
        return self.L @ self.R.T


@dataclass(frozen=True)
class LowRankContext:
    """Exact and coarse low-rank factors of one graph's adjacency."""

    rank: int
    approx_rank: int
    exact: Factor
    approx: Factor


def _clamp(rank: int, n: int, what: str) -> int:
    if rank < 1:
        raise ValueError(f"{what} must be at least 1")
    if rank > n:
        logger.warning("%s %d exceeds node count %d; clamped", what, rank, n)
        return n
    return rank


def _top_eigenpairs(graph: Graph, r: int) -> tuple[np.ndarray, np.ndarray]:
    if graph.n <= _DENSE_LIMIT or r >= graph.n - 1:
        w, v = np.linalg.eigh(graph.dense_adjacency())
    else:
        v0 = np.ones(graph.n) / np.sqrt(graph.n)
        w, v = spla.eigsh(graph.adjacency(), k=r, which="LM", v0=v0)
    order = np.argsort(-np.abs(w), kind="stable")[:r]
    return w[order], v[:, order]


def _subspace(graph: Graph, r: int, iterations: int) -> np.ndarray:
    a = graph.adjacency()
    omega = derive_rng(APPROX_SEED, graph.n, r).standard_normal((graph.n, r))
    q, _ = np.linalg.qr(a @ omega)
    for _ in range(iterations):
        q, _ = np.linalg.qr(a @ q)
    return q


def low_rank_context(graph: Graph, rank: int | None = None, approx_rank: int | None = None,
                     iterations: int = APPROX_ITERATIONS) -> LowRankContext:
    """Factor the adjacency of ``graph`` at ``rank`` (exact) and ``approx_rank`` (coarse).

    Defaults are ``min(8, n)`` and ``min(4, n)``; an explicit rank above ``n``
    is clamped with a warning.
    """
    r = min(DEFAULT_RANK, graph.n) if rank is None else _clamp(rank, graph.n, "rank")
    rq = min(APPROX_RANK, graph.n) if approx_rank is None else _clamp(approx_rank, graph.n, "approx rank")
    a = graph.adjacency()
    w, v = _top_eigenpairs(graph, r)
    exact = Factor.build(a, v * w, v)
    q = _subspace(graph, rq, iterations)
    b = q.T @ (a @ q)
    approx = Factor.build(a, q @ b, q)
    return LowRankContext(r, rq, exact, approx)
