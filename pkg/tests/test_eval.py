import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metalp.eval import (EvalResult, auc, auc_tie, choose_k, read_ledger, tie_mass,
                         time_training, topk, welch_ttest, write_ledger)


def double_loop(pos, neg):
    wins = sum(1 for p in pos for q in neg if p > q)
    return wins / (len(pos) * len(neg))


def test_auc_examples():
    assert auc([0.9], [0.1]) == 1.0
    assert auc([0.5], [0.5]) == 0.0 and auc_tie([0.5], [0.5]) == 0.5
    assert auc([0.8, 0.4], [0.6, 0.2]) == 0.75


def test_auc_errors():
    with pytest.raises(ValueError):
        auc([], [0.1])
    with pytest.raises(ValueError):
        auc([np.nan], [0.1])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=30), st.lists(st.integers(0, 6), min_size=1, max_size=30))
def test_auc_matches_double_loop_with_ties(pos, neg):
    pos = np.array(pos) / 3.0
    neg = np.array(neg) / 3.0
    assert auc(pos, neg) == double_loop(pos, neg)
    s, t, m = auc(pos, neg), auc_tie(pos, neg), tie_mass(pos, neg)
    assert s <= t <= s + m
    assert t == pytest.approx(s + 0.5 * m, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-40, 40), min_size=1, max_size=20), st.lists(st.integers(-40, 40), min_size=1, max_size=20))
def test_auc_monotone_invariance(pos, neg):
    # transforms chosen to stay strictly increasing in floating point
    for f in (lambda x: np.exp(np.asarray(x) / 8.0), lambda x: 8.0 * np.asarray(x) ** 3 - 1):
        assert auc(pos, neg) == auc(f(pos), f(neg))
        assert auc_tie(pos, neg) == auc_tie(f(pos), f(neg))


def test_topk_examples():
    pairs = np.array([[i, i + 1] for i in range(20)])
    scores = np.linspace(1, 0, 20)
    assert topk(pairs, scores, pairs[:10], 10) == 1.0
    assert topk(pairs, scores, pairs[15:], 10) == 0.0
    truth = np.vstack([pairs[[0, 3, 7]], [[50, 60]]])
    assert topk(pairs, scores, truth, 10) == 0.75
    with pytest.raises(ValueError):
        topk(pairs, scores, np.zeros((0, 2)), 10)


def test_topk_tie_order_is_lexicographic():
    pairs = np.array([[3, 4], [0, 9], [1, 2], [0, 5]])
    scores = np.ones(4)
    assert topk(pairs, scores, [[0, 5]], 1) == 1.0
    assert topk(pairs, scores, [[0, 9]], 1) == 0.0
    # orientation of the input pair does not matter
    assert topk(pairs[:, ::-1], scores, [[5, 0]], 1) == 1.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_topk_monotone_invariance(seed):
    rng = np.random.default_rng(seed)
    pairs = np.stack([np.arange(50), np.arange(50) + 100], axis=1)
    scores = rng.integers(0, 5, 50).astype(float)
    truth = pairs[rng.choice(50, 7, replace=False)]
    assert topk(pairs, scores, truth, 10) == topk(pairs, 3 * scores + 1, truth, 10)


def test_choose_k():
    assert choose_k(99) == 10 and choose_k(100) == 100 and choose_k(1) == 10
    with pytest.raises(ValueError):
        choose_k(0)


def test_welch():
    a = [0.1, 0.2, 0.3, 0.4]
    assert welch_ttest(a, a) == 1.0
    rng = np.random.default_rng(0)
    assert welch_ttest(np.zeros(4) + 1e-9 * rng.standard_normal(4), np.ones(4) + 1e-9 * rng.standard_normal(4)) < 1e-6
    assert welch_ttest([1, 1], [1, 1]) == 1.0 and welch_ttest([1, 1], [2, 2]) == 0.0


def test_welch_calibration():
    rng = np.random.default_rng(42)
    p = np.array([welch_ttest(rng.standard_normal(1000), rng.standard_normal(1000)) for _ in range(1000)])
    assert abs((p < 0.05).mean() - 0.05) <= 0.02


def test_time_training():
    secs, out = time_training(lambda: None)
    assert out is None and secs < 1e-3
    secs, out = time_training(lambda: sum(range(1000)))
    assert out == 499500 and secs >= 0


def test_ledger_roundtrip(tmp_path):
    rows = [EvalResult("net", "social", "RF", 0, 12, 0.9, 0.5, 10, 1.25),
            EvalResult("bad", "social", "RF", 0, 3, math.nan, math.nan, 0, 0.0, "error", "boom")]
    write_ledger(rows, tmp_path / "l.csv", tmp_path / "t.csv")
    text = (tmp_path / "l.csv").read_text()
    assert text.startswith("# metalp-ledger v1\n") and "train_time" not in text
    back = read_ledger(tmp_path / "l.csv", tmp_path / "t.csv")
    assert back[0] == rows[0]
    assert back[1].status == "error" and math.isnan(back[1].auc)
