"""Compiled and pure-Python kernels must agree bit-for-bit."""
import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metalp import kernels
from metalp.graph import Graph

py = kernels.python_backend
cy = kernels.compiled_backend
needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def gnp(n, p, seed):
    g = nx.gnp_random_graph(n, p, seed=seed)
    return Graph(n, list(g.edges())), g


def test_backend_selected():
    assert kernels.BACKEND_NAME in ("cython", "python")


@needs_ext
@settings(max_examples=30, deadline=None)
@given(st.integers(1, 30), st.floats(0.0, 0.6), st.integers(0, 10**6))
def test_graph_paths_backends_identical(n, p, seed):
    g, _ = gnp(n, p, seed)
    a = py.graph_paths(g.indptr, g.indices, n, True)
    b = cy.graph_paths(g.indptr, g.indices, n, True)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@pytest.mark.parametrize("seed", range(5))
def test_graph_paths_against_networkx(seed):
    g, ref = gnp(40, 0.08, seed)  # typically disconnected
    dist, bc, load = kernels.graph_paths(g.indptr, g.indices, g.n)
    nb = nx.betweenness_centrality(ref, normalized=False)
    nl = nx.load_centrality(ref, normalized=False)
    assert np.allclose(bc, [nb[v] for v in range(g.n)], rtol=1e-12, atol=1e-12)
    # networkx counts load over ordered pairs
    assert np.allclose(load, [nl[v] / 2 for v in range(g.n)], rtol=1e-12, atol=1e-12)
    lengths = dict(nx.all_pairs_shortest_path_length(ref))
    for s in range(g.n):
        for t in range(g.n):
            assert dist[s, t] == lengths[s].get(t, -1)


def test_graph_paths_without_distances():
    g, _ = gnp(15, 0.3, 0)
    dist, bc, load = kernels.graph_paths(g.indptr, g.indices, g.n, False)
    assert dist is None
    _, bc2, load2 = kernels.graph_paths(g.indptr, g.indices, g.n, True)
    assert np.array_equal(bc, bc2) and np.array_equal(load, load2)


def _tree_inputs(seed, n=300, d=6, n_bins=16):
    rng = np.random.default_rng(seed)
    codes = rng.integers(0, n_bins, size=(d, n)).astype(np.uint8)
    codes[2] = 3  # a constant feature
    y = (codes[0] > 7).astype(float) + 0.3 * rng.standard_normal(n)
    return codes, y, np.ones(n), np.arange(n), np.arange(d), np.full(d, n_bins)


@needs_ext
@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("max_features,lam", [(6, 0.0), (2, 0.0), (3, 1.0)])
def test_build_tree_backends_identical(seed, max_features, lam):
    codes, g, h, samples, feats, nb = _tree_inputs(seed)
    args = (codes, g, h, samples, feats, nb, 6, max_features, 2, 0.0, lam, 0.0, seed + 99)
    a = py.build_tree(*args)
    b = cy.build_tree(*args)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    X = np.ascontiguousarray(codes.T, dtype=float)
    thr = a[1].astype(float)
    pa = py.predict_tree(X, a[0], thr, a[2], a[3], a[4])
    pb = cy.predict_tree(X, b[0], thr, b[2], b[3], b[4])
    assert np.array_equal(pa, pb)


def test_build_tree_finds_planted_split():
    codes, g, h, samples, feats, nb = _tree_inputs(0)
    f, b, left, right, value, gain, w = kernels.build_tree(
        codes, g, h, samples, feats, nb, 1, 6, 1, 0.0, 0.0, 0.0, 1)
    assert f[0] == 0 and b[0] == 7
    assert w[0] == len(samples)
    # leaves hold the mean target of their side
    mask = codes[0] <= 7
    assert value[left[0]] == pytest.approx(g[mask].mean())
    assert value[right[0]] == pytest.approx(g[~mask].mean())


def test_build_tree_never_splits_constant_feature():
    codes, g, h, samples, _, nb = _tree_inputs(1)
    f, *_ = kernels.build_tree(codes, g, h, samples, np.array([2]), nb, 5, 1, 1, 0.0, 0.0, 0.0, 3)
    assert len(f) == 1 and f[0] == -1
