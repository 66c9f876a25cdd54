import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metalp.graph import Graph
from metalp.meta import (ALGORITHM_ORDER, MODES, PROFILE_COLUMNS, NetworkProfile, PerformanceRecord,
                         compare_with_oracle, gini_importances, grouped_split, load_meta_models,
                         mean_geodesic, meta_labels, network_profile, oracle_select, profile_matrix,
                         read_meta_dataset, save_meta_models, select_algorithm,
                         train_meta_classifier, train_regressor, write_meta_dataset)

import synthetic


def test_profile_complete_graph():
    p = network_profile(Graph(3, [(0, 1), (1, 2), (0, 2)]))
    assert (p.mean_clustering, p.mean_geodesic, p.n, p.mean_degree, p.degree_variance) == (1.0, 1.0, 3, 2.0, 0.0)
    assert p.assortativity == 0.0  # regular graph sentinel


def test_profile_path_and_star():
    p = network_profile(Graph(3, [(0, 1), (1, 2)]))
    assert p.mean_clustering == 0.0
    assert p.mean_geodesic == pytest.approx(4 / 3)
    assert p.mean_degree == pytest.approx(4 / 3)
    star = network_profile(Graph(5, [(0, i) for i in range(1, 5)]))
    assert star.assortativity == -1.0


def test_geodesic_reachable_pairs_only():
    # two disjoint edges: every reachable pair is at distance 1
    assert mean_geodesic(Graph(4, [(0, 1), (2, 3)])) == 1.0
    assert mean_geodesic(Graph(3, [])) == 0.0


def test_geodesic_sampling_close_to_exact():
    rng = np.random.default_rng(3)
    edges = [(i, i + 1) for i in range(399)] + [tuple(rng.choice(400, 2, replace=False)) for _ in range(300)]
    g = Graph(400, edges)
    exact = mean_geodesic(g)
    approx = mean_geodesic(g, max_exact=100, sources=200)
    assert approx == pytest.approx(exact, rel=0.05)


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 12), st.integers(0, 10_000))
def test_profile_relabel_invariant(n, seed):
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4]
    if not edges:
        edges = [(0, 1)]
    g = Graph(n, edges)
    perm = rng.permutation(n)
    a = network_profile(g).as_array()
    b = network_profile(g.relabel(perm)).as_array()
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_grouped_split_contract():
    recs = synthetic.planted_rule_records(networks=10, variants=10)
    train, test = grouped_split(recs, 0.2, seed=1)
    assert len(test) == 20 and len(train) == 80
    assert not {r.network for r in train} & {r.network for r in test}
    again = grouped_split(recs, 0.2, seed=1)
    assert [r.network for r in again[1]] == [r.network for r in test]
    with pytest.raises(ValueError):
        grouped_split([r for r in recs if r.network == "net000"], 0.2, 0)
    with pytest.raises(ValueError):
        grouped_split(recs, 1.0, 0)


def test_oracle_select_and_ties():
    prof = NetworkProfile(0.1, 2.0, 0.0, 10, 3.0, 1.0)
    auc = {a: 0.8 for a in ALGORITHM_ORDER}
    auc["RF"] = 0.9
    rec = PerformanceRecord("x", 0, prof, auc, dict(auc))
    assert oracle_select(rec, "AUC") == "RF"
    tie = dict(auc, RF=0.95, SAGE=0.95)
    rec = PerformanceRecord("x", 0, prof, tie, tie)
    assert oracle_select(rec, "AUC", MODES["Model2"]) == "RF"
    assert oracle_select(PerformanceRecord("x", 0, prof, dict(tie, RF=0.1), tie), "AUC", ("RF", "SAGE")) == "SAGE"


def test_regressor_recovers_noiseless_target():
    base = synthetic.planted_rule_records(networks=60, variants=3, seed=2)
    recs = synthetic.with_best(base, synthetic.smooth_target(base))
    reg = train_regressor(recs, "AUC", repeats=20, seed=0)
    assert reg.mean_r2 >= 0.95
    ranked = gini_importances(reg)
    assert ranked[0][0] == "mean_degree" and ranked[0][1] >= 0.8
    assert abs(sum(w for _, w in ranked) - 1.0) <= 1e-9
    assert all(w >= 0 for _, w in ranked)
    assert [w for _, w in ranked] == sorted((w for _, w in ranked), reverse=True)


def test_regressor_on_noise():
    base = synthetic.planted_rule_records(networks=60, variants=3, seed=4)
    noise = np.random.default_rng(0).uniform(0.5, 1.0, len(base))
    reg = train_regressor(synthetic.with_best(base, noise), "AUC", repeats=20, seed=0)
    assert reg.mean_r2 <= 0.1
    w = np.array([v for _, v in gini_importances(reg)])
    assert np.all(np.abs(w - 1 / 6) <= 0.1)


def test_regressor_constant_target_warns():
    base = synthetic.planted_rule_records(networks=5, variants=2)
    recs = synthetic.with_best(base, np.full(len(base), 0.7))
    with pytest.warns(RuntimeWarning):
        reg = train_regressor(recs, "AUC", repeats=3, seed=0)
    assert np.isnan(reg.mean_r2)


def test_regressor_prediction_within_target_range():
    base = synthetic.planted_rule_records(networks=20, variants=2, seed=5)
    recs = synthetic.with_best(base, synthetic.smooth_target(base))
    reg = train_regressor(recs, "Topk", repeats=2, seed=0)
    lo, hi = reg.target_range
    pred = reg.predict(np.array([[0.5, 3.0, 0.0, 100, 50.0, 1.0], [0.0, 1.0, -1.0, 5, 0.1, 0.0]]))
    assert np.all((pred >= lo - 1e-12) & (pred <= hi + 1e-12))


@pytest.fixture(scope="module")
def planted():
    recs = synthetic.planted_rule_records(networks=50, variants=5, seed=0)
    train, test = grouped_split(recs, 0.2, seed=0)
    grid = [{"max_depth": 3, "n_estimators": 50, "subsample": 1.0, "colsample": 1.0},
            {"max_depth": 6, "n_estimators": 100, "subsample": 0.8, "colsample": 0.8}]
    clf = train_meta_classifier(train, "Model2", "AUC", seed=0, grid=grid)
    return train, test, clf


def test_meta_classifier_planted_rule(planted):
    _, test, clf = planted
    pred = clf.predict(profile_matrix(test))
    truth = meta_labels(test, "Model2", "AUC")
    assert np.mean([p == t for p, t in zip(pred, truth)]) >= 0.9
    assert set(pred) <= set(MODES["Model2"])


def test_model1_label_space():
    recs = []
    rng = np.random.default_rng(1)
    for net in range(12):
        winner = ALGORITHM_ORDER[net % 6]
        for v in range(2):
            p = NetworkProfile.from_array(rng.uniform(synthetic.LOW, synthetic.HIGH))
            auc = {a: 0.9 if a == winner else 0.5 for a in ALGORITHM_ORDER}
            recs.append(PerformanceRecord(f"n{net}", v, p, auc, auc))
    grid = [{"max_depth": 3, "n_estimators": 10, "subsample": 1.0, "colsample": 1.0}]
    clf = train_meta_classifier(recs, "Model1", "AUC", seed=0, grid=grid)
    assert clf.labels == ALGORITHM_ORDER and len(MODES["Model1"]) == 6
    assert set(clf.predict(profile_matrix(recs))) <= set(ALGORITHM_ORDER)


def test_meta_classifier_single_class_warns():
    recs = synthetic.planted_rule_records(networks=4, variants=2)
    recs = [PerformanceRecord(r.network, r.variant_seed, r.profile, dict(r.auc, RF=1.0), r.topk) for r in recs]
    with pytest.warns(RuntimeWarning):
        clf = train_meta_classifier(recs, "Model2", "AUC", seed=0)
    assert clf.predict(profile_matrix(recs)) == ["RF"] * len(recs)


def test_select_algorithm_contract(planted):
    train, test, clf = planted
    reg = train_regressor(synthetic.with_best(train, synthetic.smooth_target(train)), "AUC", repeats=2, seed=0)
    prof = test[0].profile
    a = select_algorithm(prof, clf, reg)
    assert a == select_algorithm(prof, clf, reg)
    assert a[0] in MODES["Model2"]
    assert reg.target_range[0] <= a[1] <= reg.target_range[1]
    hits = [select_algorithm(r.profile, clf, reg)[0] == oracle_select(r, "AUC", MODES["Model2"]) for r in test]
    assert np.mean(hits) >= 0.9
    reg.columns = PROFILE_COLUMNS[:5]
    with pytest.raises(ValueError):
        select_algorithm(prof, clf, reg)


def test_oracle_dominance(planted):
    train, test, clf = planted
    for o in compare_with_oracle(train + test, clf, "AUC"):
        assert o.oracle >= o.meta >= o.worst
        assert o.oracle >= o.restricted_oracle


def test_meta_dataset_roundtrip(tmp_path):
    recs = synthetic.planted_rule_records(networks=3, variants=2)
    recs[0] = PerformanceRecord(recs[0].network, 0, recs[0].profile, dict(recs[0].auc, LR=float("nan")),
                                recs[0].topk, "x")
    path = tmp_path / "meta.csv"
    write_meta_dataset(recs, path)
    back = read_meta_dataset(path)
    assert len(back) == len(recs)
    assert back[1] == recs[1]
    assert np.isnan(back[0].auc["LR"]) and not back[0].complete()
    header = path.read_text().splitlines()[1].split(",")
    assert len(header) == 3 + 6 + 12


def test_meta_models_roundtrip(tmp_path, planted):
    _, _, clf = planted
    save_meta_models({"classifier_AUC": clf}, tmp_path / "m.pkl")
    back = load_meta_models(tmp_path / "m.pkl")["classifier_AUC"]
    assert back.predict(profile_matrix(planted[1])) == clf.predict(profile_matrix(planted[1]))
    (tmp_path / "junk.pkl").write_bytes(b"not a pickle")
    with pytest.raises(Exception):
        load_meta_models(tmp_path / "junk.pkl")
