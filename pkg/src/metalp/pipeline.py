"""One link-prediction experiment: split, train, score, evaluate.

For a ground-truth graph ``G`` and a variant seed:

* ``G -> G'`` (observed) holds out ``Y``; ``G' -> G''`` (training) holds out ``Y'``.
* Stackers learn from predictors computed on ``G''``: positives ``Y'``,
  negatives a capped uniform sample of the non-edges of ``G'``, balanced by
  SMOTE. They are then applied to predictors computed on ``G'``.
* GNNs are tuned on ``G''`` against ``Y'`` and retrained on ``G'``.
* AUC compares ``Y`` with a capped sample of true non-edges of ``G``; Top-k
  ranks every unobserved pair of ``G'`` when that set is small enough.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import gnn
from .eval import auc_tie, choose_k, time_training, topk
from .graph import (CandidatePairSet, Graph, NestedSplit, derive_seed, nested_split, non_edges,
                    sample_negatives)
from .predictors import build_feature_matrix, feature_rows
from .predictors.matrix import FeatureMatrix
from .stacking import HyperGrid, predict_scores, smote_balance, train_stacker

logger = logging.getLogger(__name__)

STACKERS = ("RF", "XGB", "LR", "SVM")
GNNS = ("GCN", "SAGE")
ALL_ALGORITHMS = STACKERS + GNNS
NEGATIVE_CAP = 10_000
RANK_ALL_LIMIT = 200_000


@dataclass(frozen=True)
class ExperimentOptions:
    alpha: float = 0.8
    negative_cap: int = NEGATIVE_CAP
    folds: int = 5
    grid: HyperGrid | None = None
    gnn_grid: tuple = gnn.GNN_GRID
    gnn_epochs: int = 200
    gnn_patience: int = 20
    rank_all_limit: int = RANK_ALL_LIMIT
    k: int | None = None  # overrides the 10/100 rule


@dataclass(frozen=True)
class VariantData:
    graph: Graph
    seed: int
    nested: NestedSplit
    train_neg: CandidatePairSet
    test_neg: CandidatePairSet
    candidates: np.ndarray = field(repr=False)  # pairs ranked for Top-k

    @property
    def train_pos(self) -> CandidatePairSet:
        return CandidatePairSet.positives(self.nested.inner.heldout)

    @property
    def test_pos(self) -> CandidatePairSet:
        return CandidatePairSet.positives(self.nested.outer.heldout)


def prepare_variant(graph: Graph, seed: int, options: ExperimentOptions = ExperimentOptions()) -> VariantData:
    nested = nested_split(graph, options.alpha, seed)
    if len(nested.outer.heldout) == 0 or len(nested.inner.heldout) == 0:
        raise ValueError("graph too small: a split held out no edges")
    train_neg = sample_negatives(nested.observed, options.negative_cap, derive_seed(seed, 101))
    test_neg = sample_negatives(graph, options.negative_cap, derive_seed(seed, 102))
    n = graph.n
    if n * (n - 1) // 2 - nested.observed.m <= options.rank_all_limit:
        candidates = non_edges(nested.observed)
    else:
        candidates = np.vstack([nested.outer.heldout, test_neg.pairs])
    return VariantData(graph, seed, nested, train_neg, test_neg, candidates)


@dataclass(frozen=True)
class Outcome:
    auc: float
    topk: float
    k: int
    train_time: float
    details: dict = field(default_factory=dict)


def _lookup(candidates: np.ndarray, scores: np.ndarray, pairs: np.ndarray, n: int):
    keys = candidates[:, 0] * n + candidates[:, 1]
    order = np.argsort(keys)
    want = pairs[:, 0] * n + pairs[:, 1]
    pos = np.searchsorted(keys[order], want)
    pos = np.minimum(pos, len(keys) - 1)
    found = keys[order][pos] == want
    return scores[order][pos], found


def _evaluate(data: VariantData, score_fn, options: ExperimentOptions, train_time: float, details) -> Outcome:
    y, neg = data.test_pos.pairs, data.test_neg.pairs
    cand = data.candidates
    cand_scores = score_fn(cand)
    sp, fp = _lookup(cand, cand_scores, y, data.graph.n)
    sn, fn = _lookup(cand, cand_scores, neg, data.graph.n)
    if not (fp.all() and fn.all()):
        extra = np.vstack([y[~fp], neg[~fn]])
        extra_scores = score_fn(extra)
        sp = sp.copy()
        sn = sn.copy()
        sp[~fp] = extra_scores[:int((~fp).sum())]
        sn[~fn] = extra_scores[int((~fp).sum()):]
    k = options.k or choose_k(len(y))
    return Outcome(auc_tie(sp, sn), topk(cand, cand_scores, y, k), k, train_time, details)


def run_stacker(algorithm: str, data: VariantData, options: ExperimentOptions = ExperimentOptions()) -> Outcome:
    seed = derive_seed(data.seed, 201)
    g_train, g_obs = data.nested.training, data.nested.observed

    feature_time = []

    def train():
        secs, fm = time_training(lambda: build_feature_matrix(g_train, data.train_pos, data.train_neg))
        feature_time.append(secs)
        balanced = smote_balance(fm, seed)
        return train_stacker(algorithm, balanced, options.grid, options.folds, seed)

    secs, model = time_training(train)

    def score(pairs):
        X = feature_rows(g_obs, pairs)
        return predict_scores(model, FeatureMatrix(X, np.zeros(len(X)), pairs))

    details = {"params": dict(model.params), "cv_auc": model.cv_auc, "feature_time": feature_time[0]}
    return _evaluate(data, score, options, secs, details)


def run_gnn(architecture: str, data: VariantData, options: ExperimentOptions = ExperimentOptions()) -> Outcome:
    seed = derive_seed(data.seed, 301)
    base = gnn.GnnConfig(architecture=architecture, epochs=options.gnn_epochs,
                         patience=options.gnn_patience, seed=seed)
    g_obs = data.nested.observed

    def train():
        tuned = gnn.tune_gnn(data.nested, architecture, options.gnn_grid, seed,
                             validation_negatives=data.train_neg.pairs, base=base)
        cfg = replace(tuned.config, seed=derive_seed(seed, 1))
        return tuned, gnn.train_gnn(g_obs, cfg)

    secs, (tuned, model) = time_training(train)
    S = gnn.operator(g_obs, architecture)
    H = model.embed(S)

    def score(pairs):
        return gnn.score_edges(H, pairs, model.params)

    details = {"params": {"num_layers": tuned.config.num_layers, "hidden_channels": tuned.config.hidden_channels,
                          "epochs": tuned.config.epochs}}
    return _evaluate(data, score, options, secs, details)


def run_algorithm(algorithm: str, data: VariantData, options: ExperimentOptions = ExperimentOptions()) -> Outcome:
    if algorithm in STACKERS:
        return run_stacker(algorithm, data, options)
    if algorithm in GNNS:
        return run_gnn(algorithm, data, options)
    raise ValueError(f"unknown algorithm {algorithm!r}")
