"""Network-level and node-level topological predictors.

Node-level quantities are computed for all nodes at once and cached per
graph, since every candidate pair touches two of them.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from functools import lru_cache

import numpy as np
import scipy.sparse.linalg as spla

from ..graph import Graph
from .. import kernels

PAGERANK_DAMPING = 0.85
KATZ_FRACTION = 0.9
KATZ_TOL = 1e-8
KATZ_MAX_ITER = 1000
_EIG_TOL = 1e-13
_EIG_MAX_ITER = 100_000
_PR_TOL = 1e-14
_PR_MAX_ITER = 10_000
_DENSE_LIMIT = 1500


@dataclass(frozen=True)
class GlobalFeatures:
    N: float
    OE: float
    AD: float
    VD: float
    ND: float
    DA: float
    NT: float
    ACC: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)


@dataclass(frozen=True)
class NodeFeatures:
    LCC: float
    AND: float
    SPBC: float
    CC: float
    DC: float
    EC: float
    KC: float
    LNT: float
    PR: float
    LC: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)


@dataclass(frozen=True)
class NodeTable:
    """All node-level predictors of one graph, one array per column.

    ``dist`` holds hop distances (``-1`` when unreachable) and is kept because
    pair features and the network profile reuse it.
    """

    graph: Graph
    dist: np.ndarray
    columns: dict

    def row(self, i: int) -> NodeFeatures:
        return NodeFeatures(**{k: float(v[i]) for k, v in self.columns.items()})

    def matrix(self, nodes) -> np.ndarray:
        """``(len(nodes), 10)`` block in ``NODE_COLUMNS`` order."""
        nodes = np.asarray(nodes, dtype=np.int64)
        return np.stack([self.columns[f.name][nodes] for f in fields(NodeFeatures)], axis=1)


def triangles(graph: Graph) -> np.ndarray:
    """Number of triangles through each node."""
    if graph.m == 0:
        return np.zeros(graph.n)
    a = graph.adjacency()
    return np.asarray((a @ a).multiply(a).sum(axis=1)).ravel() / 2.0


def local_clustering(graph: Graph) -> np.ndarray:
    k = graph.degree.astype(np.float64)
    pairs = k * (k - 1) / 2.0
    t = triangles(graph)
    out = np.zeros(graph.n)
    np.divide(t, pairs, out=out, where=pairs > 0)
    return out


def degree_assortativity(graph: Graph) -> float:
    """Pearson correlation of endpoint degrees over both edge orientations.

    Returns 0 when the endpoint degrees have zero variance (or no edges).
    """
    if graph.m == 0:
        return 0.0
    k = graph.degree.astype(np.float64)
    x = np.concatenate([k[graph.edges[:, 0]], k[graph.edges[:, 1]]])
    y = np.concatenate([k[graph.edges[:, 1]], k[graph.edges[:, 0]]])
    xc = x - x.mean()
    yc = y - y.mean()
    den = np.sqrt(np.dot(xc, xc) * np.dot(yc, yc))
    if den <= 1e-12 * len(x):
        return 0.0
    return float(np.clip(np.dot(xc, yc) / den, -1.0, 1.0))


def spectral_radius(graph: Graph) -> float:
    if graph.m == 0:
        return 0.0
    if graph.n <= _DENSE_LIMIT:
        return float(np.linalg.eigvalsh(graph.dense_adjacency())[-1])
    val = spla.eigsh(graph.adjacency(), k=1, which="LA", return_eigenvectors=False)
    return float(val[0])


def eigenvector_centrality(graph: Graph) -> np.ndarray:
    """Power iteration on ``A + I`` from the uniform vector, unit L2 norm.

    The identity shift removes the oscillation that plain power iteration
    shows on bipartite graphs without changing the dominant eigenvector.
    """
    n = graph.n
    a = graph.adjacency()
    x = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(_EIG_MAX_ITER):
        y = a @ x + x
        y /= np.linalg.norm(y)
        if np.max(np.abs(y - x)) < _EIG_TOL:
            x = y
            break
        x = y
    return x


def katz_centrality(graph: Graph) -> np.ndarray:
    """Fixed point of ``x = beta*A x + 1`` with ``beta = 0.9/lambda_max``, unit L2 norm."""
    n = graph.n
    lam = spectral_radius(graph)
    beta = KATZ_FRACTION / lam if lam > 0 else 0.0
    a = graph.adjacency()
    x = np.zeros(n)
    for _ in range(KATZ_MAX_ITER):
        y = beta * (a @ x) + 1.0
        done = np.max(np.abs(y - x)) < KATZ_TOL
        x = y
        if done:
            break
    return x / np.linalg.norm(x)


def _pagerank_matrix(graph: Graph, restart: np.ndarray) -> np.ndarray:
    """PageRank for each column of ``restart`` (columns sum to one).

    Dangling nodes send their mass back along the restart distribution.
    """
    k = graph.degree.astype(np.float64)
    inv = np.zeros(graph.n)
    np.divide(1.0, k, out=inv, where=k > 0)
    dangling = k == 0
    a = graph.adjacency()
    d = PAGERANK_DAMPING
    x = restart.copy()
    for _ in range(_PR_MAX_ITER):
        lost = x[dangling].sum(axis=0)
        y = d * (a @ (x * inv[:, None])) + (d * lost + (1.0 - d)) * restart
        done = np.max(np.abs(y - x).sum(axis=0)) < _PR_TOL
        x = y
        if done:
            break
    return x / x.sum(axis=0)


def pagerank(graph: Graph) -> np.ndarray:
    restart = np.full((graph.n, 1), 1.0 / graph.n)
    return _pagerank_matrix(graph, restart)[:, 0]


def personalized_pagerank(graph: Graph, sources) -> np.ndarray:
    """``(n, len(sources))`` matrix; column ``c`` restarts at ``sources[c]``."""
    sources = np.asarray(sources, dtype=np.int64)
    restart = np.zeros((graph.n, len(sources)))
    restart[sources, np.arange(len(sources))] = 1.0
    if len(sources) == 0:
        return restart
    return _pagerank_matrix(graph, restart)


def closeness(dist: np.ndarray) -> np.ndarray:
    """Closeness scaled by the reachable fraction (Wasserman-Faust)."""
    n = dist.shape[0]
    reach = (dist > 0).sum(axis=1).astype(np.float64)
    total = np.where(dist > 0, dist, 0).sum(axis=1).astype(np.float64)
    out = np.zeros(n)
    ok = total > 0
    if n > 1:
        out[ok] = (reach[ok] / total[ok]) * (reach[ok] / (n - 1))
    return out


@lru_cache(maxsize=8)
def node_table(graph: Graph) -> NodeTable:
    """Compute every node-level predictor of ``graph`` once."""
    n = graph.n
    k = graph.degree.astype(np.float64)
    dist, bc, load = kernels.graph_paths(graph.indptr, graph.indices, n, True)
    dist.setflags(write=False)
    a = graph.adjacency()
    avg_nb = np.zeros(n)
    np.divide(a @ k, k, out=avg_nb, where=k > 0)
    cols = {
        "LCC": local_clustering(graph),
        "AND": avg_nb,
        "SPBC": bc,
        "CC": closeness(dist),
        "DC": k / (n - 1) if n > 1 else np.zeros(n),
        "EC": eigenvector_centrality(graph),
        "KC": katz_centrality(graph),
        "LNT": triangles(graph),
        "PR": pagerank(graph),
        "LC": load,
    }
    for v in cols.values():
        v.setflags(write=False)
    return NodeTable(graph, dist, cols)


def node_features(graph: Graph, i: int) -> NodeFeatures:
    if not 0 <= i < graph.n:
        raise IndexError(f"node {i} outside 0..{graph.n - 1}")
    return node_table(graph).row(i)


def global_features(graph: Graph, table: NodeTable | None = None) -> GlobalFeatures:
    if graph.n < 1:
        raise ValueError("graph has no nodes")
    table = table or node_table(graph)
    k = graph.degree.astype(np.float64)
    triples = float(np.sum(k * (k - 1) / 2.0))
    tri = float(table.columns["LNT"].sum())  # three times the triangle count
    return GlobalFeatures(
        N=float(graph.n),
        OE=float(graph.m),
        AD=2.0 * graph.m / graph.n,
        VD=float(k.var()),
        ND=float(table.dist.max()) if graph.n > 1 else 0.0,
        DA=degree_assortativity(graph),
        NT=tri / triples if triples > 0 else 0.0,
        ACC=float(table.columns["LCC"].mean()),
    )
