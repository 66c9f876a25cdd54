"""Structural profiles, accuracy regressors and best-algorithm selection.

A :class:`PerformanceRecord` ties one network variant's six-number structural
profile (computed on the observed graph) to the AUC and Top-k of every
algorithm. From a set of records we learn

* a forest regressor per metric that predicts the best achievable accuracy,
* a boosted-tree classifier per metric that predicts which algorithm wins.

Splits are always grouped by network id so variants of one network never
straddle train and test.
"""
from __future__ import annotations

import csv
import itertools
import logging
import pickle
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .graph import Graph, derive_rng, derive_seed, round_half_up
from .predictors.topology import degree_assortativity, local_clustering
from .stacking.trees import GradientBoosting, RandomForest

logger = logging.getLogger(__name__)

ALGORITHM_ORDER = ("RF", "XGB", "LR", "SVM", "GCN", "SAGE")
MODES = {"Model1": ALGORITHM_ORDER, "Model2": ("RF", "SAGE")}
METRICS = ("AUC", "Topk")
PROFILE_COLUMNS = ("mean_clustering", "mean_geodesic", "assortativity", "n", "mean_degree",
                   "degree_variance")
META_HEADER = "# metalp-meta v1"
META_GRID = {"max_depth": (3, 6, 9), "n_estimators": (50, 100, 200), "subsample": (0.8, 1.0),
             "colsample": (0.8, 1.0)}
EXACT_GEODESIC_LIMIT = 2000
GEODESIC_SOURCES = 500
MODEL_FORMAT = "metalp-meta-model"


@dataclass(frozen=True)
class NetworkProfile:
    mean_clustering: float
    mean_geodesic: float
    assortativity: float
    n: int
    mean_degree: float
    degree_variance: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, c) for c in PROFILE_COLUMNS], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "NetworkProfile":
        v = [float(x) for x in values]
        return cls(v[0], v[1], v[2], int(round(v[3])), v[4], v[5])


def mean_geodesic(graph: Graph, max_exact: int = EXACT_GEODESIC_LIMIT,
                  sources: int = GEODESIC_SOURCES, seed: int = 0) -> float:
    """Mean hop distance over ordered reachable pairs ``i != j``.

    Graphs above ``max_exact`` nodes use ``sources`` BFS roots drawn without
    replacement (deterministically from ``seed``). Returns 0 when no pair is
    reachable.
    """
    n = graph.n
    if n < 2 or graph.m == 0:
        return 0.0
    idx = None
    if n > max_exact:
        idx = np.sort(derive_rng(seed, 61, n).choice(n, sources, replace=False))
    dist = shortest_path(graph.adjacency(), method="D", unweighted=True, directed=False, indices=idx)
    finite = np.isfinite(dist) & (dist > 0)
    if not finite.any():
        return 0.0
    return float(dist[finite].mean())


def network_profile(graph: Graph) -> NetworkProfile:
    """Six structural features of an (observed) graph.

    Examples
    --------
    >>> from metalp.graph import Graph
    >>> p = network_profile(Graph(3, [(0, 1), (1, 2), (0, 2)]))
    >>> p.mean_clustering, p.mean_geodesic, p.mean_degree
    (1.0, 1.0, 2.0)
    """
    if graph.n == 0:
        raise ValueError("cannot profile an empty graph")
    k = graph.degree.astype(np.float64)
    return NetworkProfile(
        mean_clustering=float(local_clustering(graph).mean()),
        mean_geodesic=mean_geodesic(graph),
        assortativity=degree_assortativity(graph),
        n=graph.n,
        mean_degree=float(k.mean()),
        degree_variance=float(k.var()),
    )


@dataclass(frozen=True)
class PerformanceRecord:
    network: str
    variant_seed: int
    profile: NetworkProfile
    auc: dict
    topk: dict
    domain: str = ""

    def metric(self, metric: str) -> dict:
        if metric == "AUC":
            return self.auc
        if metric == "Topk":
            return self.topk
        raise ValueError(f"unknown metric {metric!r}")

    def complete(self, algorithms=ALGORITHM_ORDER) -> bool:
        return all(np.isfinite(self.auc.get(a, np.nan)) and np.isfinite(self.topk.get(a, np.nan))
                   for a in algorithms)


def complete_records(records, algorithms=ALGORITHM_ORDER) -> list[PerformanceRecord]:
    kept = [r for r in records if r.complete(algorithms)]
    if len(kept) < len(records):
        logger.warning("excluded %d incomplete records", len(records) - len(kept))
    return kept


def records_from_results(results, profiles: dict) -> list[PerformanceRecord]:
    """Group ledger rows into records.

    ``profiles`` maps ``(network, variant_seed)`` to a :class:`NetworkProfile`;
    rows without a profile are skipped. Failed rows leave the metric missing,
    so the record is incomplete.
    """
    grouped: dict = {}
    for r in results:
        key = (r.network, r.variant_seed)
        if key not in profiles:
            continue
        entry = grouped.setdefault(key, {"domain": r.domain, "auc": {}, "topk": {}})
        if r.status == "ok":
            entry["auc"][r.algorithm] = r.auc
            entry["topk"][r.algorithm] = r.topk
    return [PerformanceRecord(net, seed, profiles[(net, seed)], e["auc"], e["topk"], e["domain"])
            for (net, seed), e in sorted(grouped.items())]


def profile_matrix(records) -> np.ndarray:
    return np.array([r.profile.as_array() for r in records]).reshape(len(records), len(PROFILE_COLUMNS))


# ---------------------------------------------------------------------------
# meta-dataset CSV

def meta_columns() -> list[str]:
    return (["network", "domain", "variant_seed", *PROFILE_COLUMNS]
            + [f"auc_{a}" for a in ALGORITHM_ORDER] + [f"topk_{a}" for a in ALGORITHM_ORDER])


def write_meta_dataset(records, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(META_HEADER + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(meta_columns())
        for r in records:
            row = [r.network, r.domain, r.variant_seed]
            row += [repr(float(x)) for x in r.profile.as_array()]
            row += [repr(float(r.auc.get(a, np.nan))) for a in ALGORITHM_ORDER]
            row += [repr(float(r.topk.get(a, np.nan))) for a in ALGORITHM_ORDER]
            w.writerow(row)


def read_meta_dataset(path) -> list[PerformanceRecord]:
    path = Path(path)
    with path.open(newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first != META_HEADER:
            raise ValueError(f"{path}: not a meta-dataset (expected header {META_HEADER!r})")
        reader = csv.DictReader(fh)
        out = []
        for row in reader:
            prof = NetworkProfile.from_array([row[c] for c in PROFILE_COLUMNS])
            auc = {a: float(row[f"auc_{a}"]) for a in ALGORITHM_ORDER}
            topk = {a: float(row[f"topk_{a}"]) for a in ALGORITHM_ORDER}
            out.append(PerformanceRecord(row["network"], int(row["variant_seed"]), prof, auc, topk,
                                         row["domain"]))
    return out


# ---------------------------------------------------------------------------
# splits and labels

def grouped_split(records, test_fraction: float, seed: int):
    """Split records at network granularity.

    ``round(test_fraction * networks)`` networks (at least one, and at least
    one left for training) go to the test side.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    networks = sorted({r.network for r in records})
    if len(networks) < 2:
        raise ValueError("grouped split needs at least 2 distinct networks")
    n_test = min(max(round_half_up(test_fraction * len(networks)), 1), len(networks) - 1)
    perm = derive_rng(seed, 51).permutation(len(networks))
    test_nets = {networks[i] for i in perm[:n_test]}
    train = [r for r in records if r.network not in test_nets]
    test = [r for r in records if r.network in test_nets]
    return train, test


def group_folds(records, folds: int, seed: int) -> np.ndarray:
    """Fold id per record; networks are dealt round-robin after a shuffle."""
    networks = sorted({r.network for r in records})
    folds = min(folds, len(networks))
    perm = derive_rng(seed, 52).permutation(len(networks))
    fold_of = {networks[p]: i % folds for i, p in enumerate(perm)}
    return np.array([fold_of[r.network] for r in records], dtype=np.int64)


def oracle_select(record: PerformanceRecord, metric: str, algorithm_set=ALGORITHM_ORDER) -> str:
    """Best algorithm on a record; ties go to the earlier algorithm in the fixed order."""
    values = record.metric(metric)
    ordered = [a for a in ALGORITHM_ORDER if a in algorithm_set]
    scores = np.array([values[a] for a in ordered], dtype=np.float64)
    return ordered[int(np.argmax(scores))]


def best_value(record: PerformanceRecord, metric: str, algorithm_set=ALGORITHM_ORDER) -> float:
    return float(record.metric(metric)[oracle_select(record, metric, algorithm_set)])


def _r2(y, pred) -> float:
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return float("nan")
    return 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot


# ---------------------------------------------------------------------------
# regressor

@dataclass
class PerformanceRegressor:
    target: str
    model: RandomForest
    importances: np.ndarray
    r2: np.ndarray = field(repr=False)
    target_range: tuple = (0.0, 1.0)
    columns: tuple = PROFILE_COLUMNS

    @property
    def mean_r2(self) -> float:
        finite = self.r2[np.isfinite(self.r2)]
        return float(finite.mean()) if len(finite) else float("nan")

    def predict(self, profiles) -> np.ndarray:
        X = np.atleast_2d(np.asarray(profiles, dtype=np.float64))
        # leaf means are convex combinations of targets; clip summation rounding
        return np.clip(self.model.predict(X), *self.target_range)


def _forest(seed: int) -> RandomForest:
    return RandomForest(n_estimators=100, max_depth=None, max_features=None, seed=seed)


def train_regressor(records, target: str, repeats: int = 100, seed: int = 0,
                    targets=None, test_fraction: float = 0.2) -> PerformanceRegressor:
    """Forest regressor from profile to the best accuracy over all algorithms.

    Each repeat fits on a fresh grouped 80/20 split and scores r² on the held-out
    networks; importances are averaged across repeats. The returned model is
    refit on every record. ``targets`` overrides the derived target values.
    """
    if target not in METRICS:
        raise ValueError(f"unknown target {target!r}")
    if targets is None:
        records = complete_records(records)
        if not records:
            raise ValueError("no complete records")
    X = profile_matrix(records)
    if targets is None:
        y = np.array([best_value(r, target) for r in records])
    else:
        y = np.asarray(targets, dtype=np.float64)
    if len({r.network for r in records}) < 2:
        raise ValueError("need records from at least 2 networks")
    r2 = np.full(repeats, np.nan)
    importances = []
    index = {id(r): i for i, r in enumerate(records)}
    for rep in range(repeats):
        train, test = grouped_split(records, test_fraction, derive_seed(seed, rep))
        tr = np.array([index[id(r)] for r in train])
        te = np.array([index[id(r)] for r in test])
        model = _forest(derive_seed(seed, rep, 1)).fit(X[tr], y[tr])
        r2[rep] = _r2(y[te], model.predict(X[te]))
        importances.append(model.feature_importances_)
    if np.ptp(y) == 0.0 or not np.isfinite(r2).any():
        warnings.warn("constant target: r2 is undefined and reported as nan", RuntimeWarning,
                      stacklevel=2)
    imp = np.mean(importances, axis=0) if importances else np.full(X.shape[1], 1.0 / X.shape[1])
    imp = imp / imp.sum()
    final = _forest(derive_seed(seed, 99)).fit(X, y)
    return PerformanceRegressor(target, final, imp, r2, (float(y.min()), float(y.max())))


def gini_importances(model: PerformanceRegressor) -> list[tuple[str, float]]:
    """``(feature, weight)`` pairs, largest first (ties keep column order)."""
    order = np.argsort(-model.importances, kind="stable")
    return [(model.columns[i], float(model.importances[i])) for i in order]


# ---------------------------------------------------------------------------
# classifier

@dataclass
class MetaClassifier:
    mode: str
    metric: str
    labels: tuple
    model: GradientBoosting | None
    params: dict
    cv_accuracy: float = float("nan")
    columns: tuple = PROFILE_COLUMNS

    def predict(self, profiles) -> list[str]:
        X = np.atleast_2d(np.asarray(profiles, dtype=np.float64))
        if self.model is None:
            return [self.labels[0]] * len(X)
        return [self.labels[int(c)] for c in self.model.predict(X)]


def meta_labels(records, mode: str, metric: str) -> list[str]:
    return [oracle_select(r, metric, MODES[mode]) for r in records]


def _grid_cells():
    names = list(META_GRID)
    return [dict(zip(names, combo)) for combo in itertools.product(*META_GRID.values())]


def _booster(params: dict, seed: int) -> GradientBoosting:
    return GradientBoosting(learning_rate=0.1, gamma=0.0, reg_lambda=1.0, min_child_weight=1.0,
                            seed=seed, **params)


def train_meta_classifier(records, mode: str = "Model1", metric: str = "AUC", seed: int = 0,
                          folds: int = 3, grid=None) -> MetaClassifier:
    """Boosted-tree classifier predicting the best algorithm from a profile.

    Every grid cell is scored by mean accuracy over network-grouped folds; the
    first best cell (in grid order) is refit on all records.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    records = complete_records(records, MODES[mode])
    if not records:
        raise ValueError("no complete records")
    names = meta_labels(records, mode, metric)
    present = [a for a in MODES[mode] if a in set(names)]
    if len(present) < 2:
        warnings.warn(f"single-class labels ({present[0]}); returning a constant classifier",
                      RuntimeWarning, stacklevel=2)
        return MetaClassifier(mode, metric, tuple(present), None, {}, 1.0)
    X = profile_matrix(records)
    y = np.array([present.index(a) for a in names])
    cells = _grid_cells() if grid is None else list(grid)
    fold_ids = group_folds(records, folds, derive_seed(seed, 1))
    n_folds = int(fold_ids.max()) + 1
    best, best_acc = cells[0], -np.inf
    if n_folds >= 2:
        for cell in cells:
            accs = []
            for f in range(n_folds):
                tr, te = fold_ids != f, fold_ids == f
                if len(np.unique(y[tr])) < 2:
                    accs.append(float(np.mean(y[te] == np.bincount(y[tr]).argmax())))
                    continue
                model = _booster(cell, derive_seed(seed, 2, f)).fit(X[tr], y[tr])
                accs.append(float(np.mean(model.predict(X[te]) == y[te])))
            acc = float(np.mean(accs))
            if acc > best_acc:
                best, best_acc = cell, acc
    model = _booster(best, derive_seed(seed, 3)).fit(X, y)
    return MetaClassifier(mode, metric, tuple(present), model, dict(best), best_acc)


def select_algorithm(profile: NetworkProfile, classifier: MetaClassifier,
                     regressor: PerformanceRegressor) -> tuple[str, float]:
    """Pick an algorithm and predict its accuracy without training any predictor."""
    if tuple(classifier.columns) != PROFILE_COLUMNS or tuple(regressor.columns) != PROFILE_COLUMNS:
        raise ValueError("meta model feature schema does not match the profile schema")
    x = profile.as_array()[None, :]
    return classifier.predict(x)[0], float(regressor.predict(x)[0])


@dataclass(frozen=True)
class SelectionOutcome:
    network: str
    variant_seed: int
    selected: str
    oracle: float
    restricted_oracle: float
    meta: float
    worst: float


def compare_with_oracle(records, classifier: MetaClassifier, metric: str = "AUC",
                        restricted=MODES["Model2"]) -> list[SelectionOutcome]:
    """Accuracy of the oracle, restricted oracle, meta choice and worst algorithm."""
    out = []
    picks = classifier.predict(profile_matrix(records)) if records else []
    for r, pick in zip(records, picks):
        values = r.metric(metric)
        out.append(SelectionOutcome(
            r.network, r.variant_seed, pick, best_value(r, metric), best_value(r, metric, restricted),
            float(values[pick]), float(min(values[a] for a in ALGORITHM_ORDER))))
    return out


def save_meta_models(models: dict, path) -> None:
    with Path(path).open("wb") as fh:
        pickle.dump({"format": MODEL_FORMAT, "version": 1, "columns": PROFILE_COLUMNS}, fh)
        pickle.dump(models, fh)


def load_meta_models(path) -> dict:
    with Path(path).open("rb") as fh:
        header = pickle.load(fh)
        if not isinstance(header, dict) or header.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path}: not a meta model file")
        if tuple(header.get("columns", ())) != PROFILE_COLUMNS:
            raise ValueError(f"{path}: meta model feature schema mismatch")
        return pickle.load(fh)
