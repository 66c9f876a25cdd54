"""Simple undirected graphs, edge-list ingestion and the holdout protocol.

A :class:`Graph` is immutable once built. Edges are stored once as ``(i, j)``
with ``i < j`` in lexicographic order, which gives every sampling routine a
stable index space to draw from.

All sampling is driven by :func:`derive_rng`, which keys a counter-based
Philox generator on ``(seed, *path)``. Sub-streams for nested splits and
variants are therefore independent of call order and of how work is
distributed across processes.
"""
from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

# stage tags for seed derivation; never renumber
_OUTER, _INNER, _VARIANT, _NEGATIVE = 1, 2, 3, 4


class ParseError(ValueError):
    """Malformed edge-list input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Return an independent Philox stream for ``seed`` and a key path."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """A 63-bit integer seed for a sub-stage, stable across platforms."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


class Graph:
    """Immutable simple undirected graph on nodes ``0..n-1``.

    Parameters
    ----------
    n : int
        Number of nodes. Isolated nodes are allowed.
    edges : array-like of shape (m, 2)
        Node pairs. Orientation, duplicates and self-loops are normalised
        away; use :meth:`from_edges` to also learn how many were dropped.
    """

    __slots__ = ("n", "edges", "indptr", "indices", "degree", "_keys", "_labels")

    def __init__(self, n: int, edges, labels: Sequence[str] | None = None):
        g, _, _ = _canonical(n, edges)
        self.n = int(n)
        self.edges = g
        self.edges.setflags(write=False)
        self._keys = g[:, 0] * self.n + g[:, 1]
        self._keys.setflags(write=False)
        both = np.concatenate([g, g[:, ::-1]]) if len(g) else np.zeros((0, 2), dtype=np.int64)
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        self.degree = np.bincount(both[:, 0], minlength=self.n).astype(np.int64)
        self.indptr = np.concatenate([[0], np.cumsum(self.degree)]).astype(np.int64)
        self.indices = both[:, 1].astype(np.int64).copy()
        for arr in (self.degree, self.indptr, self.indices):
            arr.setflags(write=False)
        self._labels = tuple(labels) if labels is not None else None

    @classmethod
    def from_edges(cls, n: int, edges, labels=None) -> tuple["Graph", int, int]:
        """Build a graph and report ``(graph, duplicates, self_loops)`` dropped."""
        _, dups, loops = _canonical(n, edges)
        return cls(n, edges, labels), dups, loops

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def labels(self) -> tuple[str, ...]:
        if self._labels is None:
            return tuple(str(i) for i in range(self.n))
        return self._labels

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return False
        a, b = (i, j) if i < j else (j, i)
        key = a * self.n + b
        pos = np.searchsorted(self._keys, key)
        return bool(pos < len(self._keys) and self._keys[pos] == key)

    def has_edges(self, pairs) -> np.ndarray:
        """Vectorised membership test for an ``(k, 2)`` array of pairs."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        a = np.minimum(pairs[:, 0], pairs[:, 1])
        b = np.maximum(pairs[:, 0], pairs[:, 1])
        keys = a * self.n + b
        if len(self._keys) == 0:
            return np.zeros(len(keys), dtype=bool)
        pos = np.minimum(np.searchsorted(self._keys, keys), len(self._keys) - 1)
        return (self._keys[pos] == keys) & (a != b)

    def edge_keys(self) -> np.ndarray:
        return self._keys

    def adjacency(self, dtype=np.float64) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=dtype)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def dense_adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        if self.m:
            a[self.edges[:, 0], self.edges[:, 1]] = 1.0
            a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a

    def with_edges(self, edges) -> "Graph":
        """Same node set, different edge set."""
        return Graph(self.n, edges, self._labels)

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with node ``v`` renamed ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        return Graph(self.n, perm[self.edges] if self.m else self.edges)

    def non_edge_count(self) -> int:
        return self.n * (self.n - 1) // 2 - self.m

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self._keys.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def _canonical(n: int, edges) -> tuple[np.ndarray, int, int]:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2) if len(edges) else np.zeros((0, 2), dtype=np.int64)
    if len(e) and (e.min() < 0 or e.max() >= n):
        raise ValueError(f"edge endpoint outside 0..{n - 1}")
    loops = int(np.sum(e[:, 0] == e[:, 1]))
    e = e[e[:, 0] != e[:, 1]]
    e = np.sort(e, axis=1)
    before = len(e)
    if len(e):
        keys = np.unique(e[:, 0] * n + e[:, 1])
        e = np.stack([keys // n, keys % n], axis=1)
    return e.astype(np.int64), before - len(e), loops


def parse_edge_list(text: str | io.TextIOBase | Iterable[str]) -> Graph:
    """Parse a whitespace-separated edge list.

    Node tokens are mapped to dense ids in first-appearance order. Lines
    starting with ``#`` and blank lines are skipped. Duplicate edges and
    self-loops are dropped and the counts logged.
    """
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = text
    ids: dict[str, int] = {}
    pairs = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(f"expected 2 node tokens, found {len(tokens)}", lineno)
        a = ids.setdefault(tokens[0], len(ids))
        b = ids.setdefault(tokens[1], len(ids))
        pairs.append((a, b))
    if not pairs:
        raise ParseError("edge list is empty")
    labels = list(ids)
    g, dups, loops = Graph.from_edges(len(labels), pairs, labels)
    if dups or loops:
        logger.info("dropped %d duplicate edges and %d self-loops", dups, loops)
    return g


def read_edge_list(path: str | Path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh)


def write_edge_list(graph: Graph, path: str | Path, use_labels: bool = True) -> None:
    labels = graph.labels if use_labels else [str(i) for i in range(graph.n)]
    with open(path, "w", encoding="utf-8") as fh:
        for i, j in graph.edges:
            fh.write(f"{labels[i]} {labels[j]}\n")


@dataclass(frozen=True)
class HoldoutSplit:
    """An observed graph plus the edges held out of it."""

    observed: Graph
    heldout: np.ndarray
    alpha: float
    seed: int
    retained: np.ndarray = field(repr=False)

    def manifest(self) -> dict:
        return {"alpha": self.alpha, "seed": int(self.seed), "retained": self.retained.tolist()}


@dataclass(frozen=True)
class NestedSplit:
    outer: HoldoutSplit
    inner: HoldoutSplit

    @property
    def observed(self) -> Graph:
        return self.outer.observed

    @property
    def training(self) -> Graph:
        return self.inner.observed

    def manifest(self) -> dict:
        return {"outer": self.outer.manifest(), "inner": self.inner.manifest()}


@dataclass(frozen=True)
class CandidatePairSet:
    """Labelled node pairs. ``pairs`` rows are ``(i, j)`` with ``i < j``."""

    pairs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        p = np.sort(p, axis=1)
        object.__setattr__(self, "pairs", p)
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int8).reshape(-1))
        if len(self.labels) != len(p):
            raise ValueError("labels and pairs differ in length")

    @classmethod
    def positives(cls, pairs) -> "CandidatePairSet":
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        return cls(pairs, np.ones(len(pairs), dtype=np.int8))

    @classmethod
    def negatives(cls, pairs) -> "CandidatePairSet":
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        return cls(pairs, np.zeros(len(pairs), dtype=np.int8))

    def __len__(self) -> int:
        return len(self.pairs)

    def keys(self, n: int) -> np.ndarray:
        return self.pairs[:, 0] * n + self.pairs[:, 1]


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"retention rate alpha must lie in (0, 1], got {alpha}")


def _holdout(graph: Graph, alpha: float, seed: int, rng: np.random.Generator) -> HoldoutSplit:
    keep = round_half_up(alpha * graph.m)
    retained = np.sort(rng.choice(graph.m, size=keep, replace=False)) if keep < graph.m else np.arange(graph.m)
    mask = np.zeros(graph.m, dtype=bool)
    mask[retained] = True
    return HoldoutSplit(
        observed=graph.with_edges(graph.edges[mask]),
        heldout=graph.edges[~mask].copy(),
        alpha=float(alpha),
        seed=int(seed),
        retained=retained.astype(np.int64),
    )


def sample_observed(graph: Graph, alpha: float, seed: int) -> HoldoutSplit:
    """Retain ``round(alpha * m)`` edges uniformly at random."""
    _check_alpha(alpha)
    if graph.m < 1:
        raise ValueError("graph has no edges to hold out")
    return _holdout(graph, alpha, seed, derive_rng(seed, _OUTER))


def replay_split(graph: Graph, manifest: dict) -> HoldoutSplit:
    """Rebuild a split from the record written by :meth:`HoldoutSplit.manifest`."""
    retained = np.asarray(manifest["retained"], dtype=np.int64)
    mask = np.zeros(graph.m, dtype=bool)
    mask[retained] = True
    return HoldoutSplit(graph.with_edges(graph.edges[mask]), graph.edges[~mask].copy(),
                        float(manifest["alpha"]), int(manifest["seed"]), retained)


def nested_split(graph: Graph, alpha: float, seed: int) -> NestedSplit:
    """Outer split ``G -> G'`` then inner split ``G' -> G''`` at the same rate."""
    outer = sample_observed(graph, alpha, seed)
    if outer.observed.m < 1:
        raise ValueError("observed graph has no edges; cannot build an inner split")
    inner = _holdout(outer.observed, alpha, seed, derive_rng(seed, _INNER))
    if inner.observed.m < 1:
        raise ValueError("inner training graph would have zero edges")
    return NestedSplit(outer, inner)


def variant_seed(seed: int, index: int) -> int:
    return derive_seed(seed, _VARIANT, index)


def generate_variants(graph: Graph, alpha: float, count: int, seed: int) -> list[HoldoutSplit]:
    """``count`` independent observed versions of ``graph``.

    Variant ``0`` with ``count == 1`` equals ``sample_observed(graph, alpha, seed)``.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if count == 1:
        return [sample_observed(graph, alpha, seed)]
    return [sample_observed(graph, alpha, variant_seed(seed, v)) for v in range(count)]


def _pair_from_index(idx: np.ndarray, n: int) -> np.ndarray:
    # invert the row-major upper-triangle enumeration
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.arange(n, dtype=np.int64)
    row_start = rows * n - rows * (rows + 1) // 2
    i = np.searchsorted(row_start, idx, side="right") - 1
    j = idx - row_start[i] + i + 1
    return np.stack([i, j], axis=1).reshape(-1, 2)


def _pair_index(pairs: np.ndarray, n: int) -> np.ndarray:
    i, j = pairs[:, 0], pairs[:, 1]
    return i * n - i * (i + 1) // 2 + (j - i - 1)


_ENUMERATE_LIMIT = 4_000_000


def non_edges(graph: Graph) -> np.ndarray:
    """All non-adjacent pairs ``(i, j)``, ``i < j``, in lexicographic order."""
    n = graph.n
    total = n * (n - 1) // 2
    mask = np.ones(total, dtype=bool)
    if graph.m:
        mask[_pair_index(graph.edges, n)] = False
    return _pair_from_index(np.flatnonzero(mask), n)


def sample_negatives(graph: Graph, cap: int, seed: int, exclude=None) -> CandidatePairSet:
    """Uniform sample of at most ``cap`` non-edges of ``graph``.

    Parameters
    ----------
    exclude : array-like of pairs, optional
        Extra pairs that must not be drawn, on top of the edges of ``graph``.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    n = graph.n
    total = n * (n - 1) // 2
    excl_idx = np.zeros(0, dtype=np.int64)
    if graph.m:
        excl_idx = _pair_index(graph.edges, n)
    if exclude is not None and len(exclude):
        ex = np.sort(np.asarray(exclude, dtype=np.int64).reshape(-1, 2), axis=1)
        excl_idx = np.union1d(excl_idx, _pair_index(ex, n))
    available = total - len(np.unique(excl_idx))
    if available <= 0:
        raise ValueError("graph has no non-edges to sample")
    rng = derive_rng(seed, _NEGATIVE)
    if total <= _ENUMERATE_LIMIT:
        mask = np.ones(total, dtype=bool)
        mask[excl_idx] = False
        pool = np.flatnonzero(mask)
        if len(pool) > cap:
            pool = np.sort(rng.choice(pool, size=cap, replace=False))
        return CandidatePairSet.negatives(_pair_from_index(pool, n))
    # sparse regime: rejection sampling on the pair index space
    target = min(cap, available)
    banned = set(excl_idx.tolist())
    chosen: set[int] = set()
    while len(chosen) < target:
        draw = rng.integers(0, total, size=2 * (target - len(chosen)) + 16)
        for d in draw.tolist():
            if d not in banned and d not in chosen:
                chosen.add(d)
                if len(chosen) == target:
                    break
    pool = np.array(sorted(chosen), dtype=np.int64)
    return CandidatePairSet.negatives(_pair_from_index(pool, n))


def save_manifest(obj: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=1), encoding="utf-8")
