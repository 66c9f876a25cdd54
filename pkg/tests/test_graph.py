import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metalp.graph import (Graph, ParseError, generate_variants, nested_split, non_edges,
                          parse_edge_list, read_edge_list, replay_split, round_half_up,
                          sample_negatives, sample_observed)


def random_graph(n, m, seed):
    rng = np.random.default_rng(seed)
    pairs = set()
    while len(pairs) < m:
        i, j = sorted(rng.choice(n, 2, replace=False).tolist())
        pairs.add((i, j))
    return Graph(n, sorted(pairs))


def edge_set(edges):
    return {tuple(e) for e in np.asarray(edges).tolist()}


# --- parsing -----------------------------------------------------------------

def test_parse_path():
    g = parse_edge_list("0 1\n1 2")
    assert (g.n, g.m) == (3, 2)


def test_parse_drops_duplicates_and_loops(caplog):
    caplog.set_level("INFO")
    g = parse_edge_list("a b\nb a\na a")
    assert (g.n, g.m) == (2, 1)
    assert "1 duplicate" in caplog.text and "1 self-loops" in caplog.text


def test_parse_first_appearance_ids():
    g = parse_edge_list("# comment\nz y\n\ny x\n")
    assert g.labels == ("z", "y", "x")
    assert edge_set(g.edges) == {(0, 1), (1, 2)}


def test_parse_errors():
    with pytest.raises(ParseError) as err:
        parse_edge_list("0 1\n1 2 3\n")
    assert err.value.line == 2
    with pytest.raises(ParseError):
        parse_edge_list("# only comments\n")


def test_karate_file():
    # independent count: non-comment lines of the bundled file
    path = "data/social/karate.txt"
    lines = [ln for ln in open(path) if ln.strip() and not ln.startswith("#")]
    g = read_edge_list(path)
    assert len(lines) == 78
    assert (g.n, g.m) == (34, 78)


def test_graph_adjacency_consistent():
    g = random_graph(30, 80, 0)
    for i in range(g.n):
        nb = g.neighbors(i)
        assert len(nb) == g.degree[i]
        assert np.all(np.diff(nb) > 0)
        for j in nb:
            assert g.has_edge(i, j) and g.has_edge(j, i)
    assert g.has_edges(g.edges).all()
    assert not g.has_edges(non_edges(g)).any()


# --- splits ------------------------------------------------------------------

def test_round_half_up():
    assert round_half_up(0.8 * 10) == 8
    assert round_half_up(2.5) == 3
    assert round_half_up(0.8 * 1000) == 800


def test_full_retention():
    g = random_graph(20, 40, 1)
    s = sample_observed(g, 1.0, 3)
    assert s.observed == g and len(s.heldout) == 0


def test_counts_m10():
    g = random_graph(10, 10, 2)
    s = sample_observed(g, 0.8, 7)
    assert s.observed.m == 8 and len(s.heldout) == 2


@pytest.mark.parametrize("alpha", [0.0, -0.1, 1.5])
def test_bad_alpha(alpha):
    with pytest.raises(ValueError):
        sample_observed(random_graph(5, 4, 0), alpha, 0)


def test_nested_counts_and_determinism():
    g = random_graph(40, 100, 3)
    a = nested_split(g, 0.8, 11)
    b = nested_split(g, 0.8, 11)
    assert a.observed.m == 80 and len(a.outer.heldout) == 20
    assert a.training.m == 64 and len(a.inner.heldout) == 16
    assert a.observed == b.observed and a.training == b.training
    assert edge_set(a.training.edges) < edge_set(a.observed.edges) < edge_set(g.edges)
    assert edge_set(a.inner.heldout) == edge_set(a.observed.edges) - edge_set(a.training.edges)


def test_nested_distinct_seeds_differ():
    g = random_graph(40, 100, 3)
    held = [edge_set(nested_split(g, 0.8, s).outer.heldout) for s in range(20)]
    assert len({frozenset(h) for h in held}) == 20


def test_nested_empty_inner():
    with pytest.raises(ValueError):
        nested_split(Graph(2, [(0, 1)]), 0.4, 0)


def test_variants():
    g = random_graph(30, 50, 4)
    vs = generate_variants(g, 0.8, 10, 5)
    assert len(vs) == 10 and all(v.observed.m == 40 for v in vs)
    single = generate_variants(g, 0.8, 1, 5)[0]
    assert single.observed == sample_observed(g, 0.8, 5).observed


def test_variants_differ_pairwise():
    g = random_graph(30, 50, 4)
    differ = 0
    for seed in range(200):
        a, b = generate_variants(g, 0.8, 2, seed)
        differ += edge_set(a.heldout) != edge_set(b.heldout)
    assert differ >= 198


def test_replay_manifest():
    g = random_graph(25, 60, 6)
    s = sample_observed(g, 0.8, 9)
    again = replay_split(g, json.loads(json.dumps(s.manifest())))
    assert again.observed == s.observed
    assert edge_set(again.heldout) == edge_set(s.heldout)


def test_split_keeps_nodes():
    g = Graph(5, [(0, 1), (1, 2), (3, 4)])
    s = sample_observed(g, 0.4, 1)
    assert s.observed.n == 5


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 25), st.data(), st.floats(0.05, 1.0), st.integers(0, 2**63 - 1))
def test_split_reconstruction(n, data, alpha, seed):
    pairs = data.draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), min_size=1, max_size=60))
    g = Graph(n, sorted(pairs)) if any(a != b for a, b in pairs) else None
    if g is None or g.m == 0:
        return
    s = sample_observed(g, alpha, seed)
    obs, held = edge_set(s.observed.edges), edge_set(s.heldout)
    assert obs | held == edge_set(g.edges) and not (obs & held)
    assert len(obs) == round_half_up(alpha * g.m)
    assert s.observed == sample_observed(g, alpha, seed).observed


def test_holdout_uniformity_small():
    g = random_graph(60, 100, 8)
    hits = np.zeros(g.m)
    reps = 2000
    for seed in range(reps):
        hits[sample_observed(g, 0.8, seed).retained] += 1
    freq = 1 - hits / reps
    se = np.sqrt(0.2 * 0.8 / reps)
    # every edge within a generous bound; the mean exactly 0.2 by construction
    assert np.abs(freq - 0.2).max() < 5 * se
    assert abs(freq.mean() - 0.2) < 1e-12


# --- negatives ---------------------------------------------------------------

def test_negatives_complete_graph():
    with pytest.raises(ValueError):
        sample_negatives(Graph(3, [(0, 1), (0, 2), (1, 2)]), 10, 0)


def test_negatives_path():
    s = sample_negatives(Graph(3, [(0, 1), (1, 2)]), 10000, 0)
    assert s.pairs.tolist() == [[0, 2]]
    assert s.labels.tolist() == [0]


def test_negatives_cap():
    g = random_graph(200, 300, 9)
    s = sample_negatives(g, 10000, 1)
    assert len(s) == 10000
    assert len(edge_set(s.pairs)) == 10000
    assert not g.has_edges(s.pairs).any()
    assert np.all(s.pairs[:, 0] < s.pairs[:, 1])


def test_negatives_exclude_and_rejection_regime():
    g = random_graph(3000, 4000, 10)  # > 4M pairs: rejection sampling path
    excl = non_edges(random_graph(6, 3, 0))
    s = sample_negatives(g, 500, 2, exclude=excl)
    assert len(edge_set(s.pairs)) == 500
    assert not g.has_edges(s.pairs).any()
    assert not (edge_set(s.pairs) & edge_set(excl))
    again = sample_negatives(g, 500, 2, exclude=excl)
    assert np.array_equal(s.pairs, again.pairs)
