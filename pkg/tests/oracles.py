"""Naive reference implementations used only by the tests.

Everything here works on a dense 0/1 adjacency matrix or on plain Python
sets, enumerates paths explicitly, and uses closed-form linear algebra in
place of the iterative schemes used by the package.
"""
from __future__ import annotations

import itertools
import math
import statistics

import numpy as np


def neighbour_sets(A):
    n = len(A)
    return [set(np.flatnonzero(A[v]).tolist()) for v in range(n)]


def floyd_warshall(A):
    n = len(A)
    d = np.where(A > 0, 1.0, np.inf)
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d


def all_shortest_paths(nb, dist, s, t):
    """Every shortest s-t path as a tuple of nodes (explicit DFS)."""
    if not np.isfinite(dist[s, t]):
        return []
    out = []

    def walk(path):
        v = path[-1]
        if v == t:
            out.append(tuple(path))
            return
        for w in sorted(nb[v]):
            if dist[w, t] == dist[v, t] - 1:
                walk(path + [w])

    walk([s])
    return out


def betweenness(A):
    nb = neighbour_sets(A)
    dist = floyd_warshall(A)
    n = len(A)
    bc = np.zeros(n)
    for s, t in itertools.combinations(range(n), 2):
        paths = all_shortest_paths(nb, dist, s, t)
        for p in paths:
            for v in p[1:-1]:
                bc[v] += 1.0 / len(paths)
    return bc


def load(A):
    """Unit flow from a to b split equally over next hops toward b; halved."""
    nb = neighbour_sets(A)
    dist = floyd_warshall(A)
    n = len(A)
    lc = np.zeros(n)
    for a, b in itertools.permutations(range(n), 2):
        if not np.isfinite(dist[a, b]):
            continue
        flow = {a: 1.0}
        frontier = [a]
        while frontier:
            nxt = {}
            for v in frontier:
                if v == b:
                    continue
                hops = [w for w in nb[v] if dist[w, b] == dist[v, b] - 1]
                for w in hops:
                    nxt[w] = nxt.get(w, 0.0) + flow[v] / len(hops)
            for w, f in nxt.items():
                if w != b:
                    lc[w] += f
            flow = nxt
            frontier = list(nxt)
    return lc / 2.0


def triangles(A):
    nb = neighbour_sets(A)
    n = len(A)
    t = np.zeros(n)
    for u, v, w in itertools.combinations(range(n), 3):
        if v in nb[u] and w in nb[u] and w in nb[v]:
            t[[u, v, w]] += 1
    return t


def local_clustering(A):
    nb = neighbour_sets(A)
    out = []
    for v in range(len(A)):
        pairs = list(itertools.combinations(sorted(nb[v]), 2))
        links = sum(1 for x, y in pairs if y in nb[x])
        out.append(links / len(pairs) if pairs else 0.0)
    return np.array(out)


def closeness(A):
    d = floyd_warshall(A)
    n = len(A)
    out = np.zeros(n)
    for v in range(n):
        reach = [x for x in d[v] if np.isfinite(x) and x > 0]
        if reach:
            r = len(reach)
            out[v] = (r / sum(reach)) * (r / (n - 1))
    return out


def eigenvector(A):
    w, v = np.linalg.eigh(A)
    x = np.abs(v[:, -1])
    return x / np.linalg.norm(x)


def katz(A, terms=600):
    lam = max(np.linalg.eigvals(A).real)
    beta = 0.9 / lam
    x = np.zeros(len(A))
    walk = np.ones(len(A))
    for t in range(terms):
        x += walk
        walk = beta * (A @ walk)
    return x / np.linalg.norm(x)


def pagerank_solve(A, restart, d=0.85):
    n = len(A)
    k = A.sum(axis=1)
    P = np.zeros((n, n))
    for v in range(n):
        if k[v] > 0:
            P[v] = A[v] / k[v]
        else:
            P[v] = restart
    return np.linalg.solve(np.eye(n) - d * P.T, (1 - d) * restart)


def global_features(A):
    n = len(A)
    nb = neighbour_sets(A)
    deg = [len(s) for s in nb]
    m = sum(deg) // 2
    d = floyd_warshall(A)
    finite = d[np.isfinite(d)]
    # assortativity, Newman's edge-sum formula
    edges = [(u, v) for u, v in itertools.combinations(range(n), 2) if v in nb[u]]
    if m:
        s1 = sum(deg[u] * deg[v] for u, v in edges) / m
        s2 = sum((deg[u] + deg[v]) / 2 for u, v in edges) / m
        s3 = sum((deg[u] ** 2 + deg[v] ** 2) / 2 for u, v in edges) / m
        da = (s1 - s2 ** 2) / (s3 - s2 ** 2) if abs(s3 - s2 ** 2) > 1e-12 else 0.0
    else:
        da = 0.0
    tri = triangles(A).sum() / 3
    triples = sum(k * (k - 1) / 2 for k in deg)
    return {
        "N": n, "OE": m, "AD": 2 * m / n, "VD": statistics.pvariance(deg),
        "ND": finite.max(), "DA": da, "NT": 3 * tri / triples if triples else 0.0,
        "ACC": local_clustering(A).mean(),
    }


def node_features(A):
    n = len(A)
    nb = neighbour_sets(A)
    deg = np.array([len(s) for s in nb], dtype=float)
    andeg = np.array([np.mean([deg[u] for u in nb[v]]) if nb[v] else 0.0 for v in range(n)])
    return {
        "LCC": local_clustering(A), "AND": andeg, "SPBC": betweenness(A),
        "CC": closeness(A), "DC": deg / (n - 1), "EC": eigenvector(A), "KC": katz(A),
        "LNT": triangles(A), "PR": pagerank_solve(A, np.full(n, 1.0 / n)), "LC": load(A),
    }


def truncated_svd(A, r):
    u, s, vt = np.linalg.svd(A)
    return (u[:, :r] * s[:r]) @ vt[:r]


def subspace_projection(A, omega, iterations):
    M = A @ omega
    for _ in range(iterations):
        M = A @ M
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    keep = s > 1e-13 * s[0] if s[0] > 0 else np.zeros(len(s), bool)
    P = u[:, keep] @ u[:, keep].T
    return P @ A @ P


def lra_triplet(Ar, nb, i, j):
    entry = Ar[i, j]
    dot = float(Ar[:, i] @ Ar[:, j])
    total = sum(Ar[u, j] for u in nb[i]) + sum(Ar[i, u] for u in nb[j])
    cnt = len(nb[i]) + len(nb[j])
    return entry, dot, total / cnt if cnt else 0.0


def pair_features(A, i, j, Ar, Aq):
    n = len(A)
    nb = neighbour_sets(A)
    d = floyd_warshall(A)
    ki, kj = len(nb[i]), len(nb[j])
    common = nb[i] & nb[j]
    cn = len(common)
    union = nb[i] | nb[j]
    e_i = np.eye(n)[i]
    e_j = np.eye(n)[j]
    ppr = 0.5 * (pagerank_solve(A, e_i)[j] + pagerank_solve(A, e_j)[i])
    lra, dlra, mlra = lra_triplet(Ar, nb, i, j)
    lraq, dlraq, mlraq = lra_triplet(Aq, nb, i, j)
    return {
        "CN": cn,
        "SP": d[i, j] if np.isfinite(d[i, j]) else n,
        "LHN": cn / (ki * kj) if ki and kj else 0.0,
        "PPR": ppr,
        "PA": ki * kj,
        "JC": cn / len(union) if union else 0.0,
        "AA": sum(1 / math.log(len(nb[z])) for z in common if len(nb[z]) > 1),
        "RA": sum(1 / len(nb[z]) for z in common),
        "LRA": lra, "dLRA": dlra, "mLRA": mlra,
        "LRA_approx": lraq, "dLRA_approx": dlraq, "mLRA_approx": mlraq,
    }


def predictor_mismatches(graph, rtol=1e-6, atol=1e-9):
    """Compare all 42 predictors of ``graph`` with the naive versions.

    Returns a list of ``(column, pair_or_node, got, expected)`` tuples for
    every value outside tolerance.
    """
    from metalp.graph import derive_rng, non_edges
    from metalp.predictors import FEATURE_COLUMNS, feature_rows, lowrank

    A = graph.dense_adjacency()
    n = graph.n
    nb = neighbour_sets(A)
    bad = []

    def check(name, where, got, want):
        if not np.isclose(got, want, rtol=rtol, atol=atol):
            bad.append((name, where, float(got), float(want)))

    glob = global_features(A)
    node = node_features(A)
    Ar = truncated_svd(A, min(lowrank.DEFAULT_RANK, n))
    rq = min(lowrank.APPROX_RANK, n)
    omega = derive_rng(lowrank.APPROX_SEED, n, rq).standard_normal((n, rq))
    Aq = subspace_projection(A, omega, lowrank.APPROX_ITERATIONS)

    pairs = non_edges(graph)
    if len(pairs) == 0:
        # complete graph: still exercise global and node columns via edges
        pairs = graph.edges
    rows = feature_rows(graph, pairs)
    col = {c: k for k, c in enumerate(FEATURE_COLUMNS)}
    for (i, j), row in zip(pairs.tolist(), rows):
        for name, want in glob.items():
            check(name, (i, j), row[col[name]], want)
        for name, vals in node.items():
            check(name + "_i", i, row[col[name + "_i"]], vals[i])
            check(name + "_j", j, row[col[name + "_j"]], vals[j])
        if graph.has_edge(i, j):
            continue
        for name, want in pair_features(A, i, j, Ar, Aq).items():
            check(name, (i, j), row[col[name]], want)
    return bad


def relu_pattern(params, S, num_layers, pos, neg):
    """Signs of every ReLU pre-activation in a dropout-free forward pass."""
    from metalp import gnn
    H, cache = gnn.encode(params, S, num_layers, 0.0, None)
    pairs = np.vstack([pos, neg])
    _, (_, a, _) = gnn.mlp_forward(params, H[pairs[:, 0]] * H[pairs[:, 1]])
    parts = [(Z > 0).ravel() for _, Z, _, last in cache if not last] + [(a > 0).ravel()]
    return np.concatenate(parts)


def finite_difference_check(params, S, num_layers, pos, neg, steps=(1e-6, 1e-7, 1e-8)):
    """Block-relative error between analytic and central-difference gradients.

    A coordinate whose +-h perturbation flips a ReLU (the loss is not
    differentiable across the kink) is retried with the next smaller step;
    if every step crosses a kink the coordinate is left out and counted.
    Returns ``({block: rel_error}, skipped_count)``.
    """
    from metalp import gnn
    _, grads = gnn.loss_and_grads(params, S, num_layers, pos, neg)
    base = relu_pattern(params, S, num_layers, pos, neg)
    errors, skipped = {}, 0
    for name, v in params.items():
        num = np.zeros_like(v)
        keep = np.ones(v.shape, dtype=bool)
        for idx in np.ndindex(v.shape):
            old = v[idx]
            for h in steps:
                v[idx] = old + h
                pp = relu_pattern(params, S, num_layers, pos, neg)
                lp, _ = gnn.loss_and_grads(params, S, num_layers, pos, neg)
                v[idx] = old - h
                pm = relu_pattern(params, S, num_layers, pos, neg)
                lm, _ = gnn.loss_and_grads(params, S, num_layers, pos, neg)
                v[idx] = old
                if np.array_equal(pp, base) and np.array_equal(pm, base):
                    num[idx] = (lp - lm) / (2 * h)
                    break
            else:
                keep[idx] = False
                skipped += 1
        a, b = grads[name][keep], num[keep]
        scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
        errors[name] = float(np.linalg.norm(a - b) / scale)
    return errors, skipped
