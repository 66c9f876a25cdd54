"""Grid search with stratified cross-validation and the fitted stacker."""
from __future__ import annotations

import hashlib
import itertools
import logging
import pickle
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

import numpy as np

from ..eval import auc_tie
from ..graph import derive_rng, derive_seed
from ..predictors import FeatureMatrix
from .linear import LogisticRegression
from .svm import SVC
from .trees import GradientBoosting, RandomForest

logger = logging.getLogger(__name__)

ALGORITHMS = ("RF", "XGB", "LR", "SVM")
MODEL_FORMAT = "metalp-stacker"
MODEL_VERSION = 1


def _cells(**axes) -> tuple:
    names = list(axes)
    return tuple(MappingProxyType(dict(zip(names, combo))) for combo in itertools.product(*axes.values()))


@dataclass(frozen=True)
class HyperGrid:
    """Per-algorithm tuning cells in row-major order (first axis slowest)."""

    cells: MappingProxyType

    @classmethod
    def default(cls) -> "HyperGrid":
        return cls(MappingProxyType({
            "RF": _cells(max_depth=(3, 6, 9), n_estimators=(25, 50, 100, 125)),
            "LR": _cells(C=(0.1, 1.0, 10.0, 100.0), penalty=("l1", "l2")),
            "XGB": _cells(n_estimators=(50, 100, 200), max_depth=(5, 10, 25, 50)),
            "SVM": _cells(C=(0.1, 1.0, 10.0, 100.0)),
        }))

    @classmethod
    def single(cls, algorithm: str, **params) -> "HyperGrid":
        """A one-cell grid, e.g. for quick runs."""
        return cls(MappingProxyType({algorithm: (MappingProxyType(dict(params)),)}))

    def __getitem__(self, algorithm: str) -> tuple:
        return self.cells[algorithm]


# fixed settings that are not tuned
FIXED = MappingProxyType({
    "RF": MappingProxyType({"criterion": "gini", "max_features": "sqrt"}),
    "XGB": MappingProxyType({"learning_rate": 0.1, "subsample": 1.0, "colsample": 0.7, "gamma": 0.5,
                             "reg_lambda": 1.0, "min_child_weight": 1.0}),
    "LR": MappingProxyType({}),
    "SVM": MappingProxyType({"kernel": "rbf", "gamma": "scale"}),
})


def make_model(algorithm: str, params: dict, seed: int):
    p = {**FIXED[algorithm], **params}
    if algorithm == "RF":
        return RandomForest(n_estimators=p["n_estimators"], max_depth=p["max_depth"],
                            max_features=p["max_features"], seed=seed)
    if algorithm == "XGB":
        return GradientBoosting(n_estimators=p["n_estimators"], max_depth=p["max_depth"],
                                learning_rate=p["learning_rate"], subsample=p["subsample"],
                                colsample=p["colsample"], gamma=p["gamma"],
                                reg_lambda=p["reg_lambda"], min_child_weight=p["min_child_weight"],
                                seed=seed)
    if algorithm == "LR":
        return LogisticRegression(C=p["C"], penalty=p["penalty"])
    if algorithm == "SVM":
        return SVC(C=p["C"], gamma=p["gamma"], seed=seed)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def model_scores(model, X) -> np.ndarray:
    if isinstance(model, RandomForest):
        return model.predict(X)
    if isinstance(model, GradientBoosting):
        return model.predict_proba(X)[:, 1]
    return model.predict_proba(X)


def stratified_folds(y, folds: int, seed: int) -> np.ndarray:
    """Fold id per row; each class is shuffled then dealt round-robin."""
    y = np.asarray(y)
    out = np.empty(len(y), dtype=np.int64)
    rng = derive_rng(seed, 21)
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        out[rng.permutation(idx)] = np.arange(len(idx)) % folds
    return out


def cross_validate(algorithm: str, params: dict, X, y, fold_ids: np.ndarray, seed: int,
                   record: list | None = None) -> float:
    """Mean tie-credit AUC over folds. ``record`` receives ``(train, test)`` row ids."""
    aucs = []
    for f in range(int(fold_ids.max()) + 1):
        test = np.flatnonzero(fold_ids == f)
        train = np.flatnonzero(fold_ids != f)
        if record is not None:
            record.append((train, test))
        model = make_model(algorithm, params, derive_seed(seed, f)).fit(X[train], y[train])
        s = model_scores(model, X[test])
        yt = y[test]
        if yt.min() == yt.max():
            continue
        aucs.append(auc_tie(s[yt == 1], s[yt == 0]))
    return float(np.mean(aucs)) if aucs else float("nan")


@dataclass
class TrainedStacker:
    algorithm: str
    params: dict
    model: object
    columns: tuple
    seed: int
    cv_auc: float
    cv_table: list = field(default_factory=list)

    def predict(self, matrix: FeatureMatrix) -> np.ndarray:
        return predict_scores(self, matrix)

    def digest(self) -> str:
        return hashlib.sha256(pickle.dumps(self.model, protocol=4)).hexdigest()


def train_stacker(algorithm: str, matrix: FeatureMatrix, grid: HyperGrid | None = None,
                  folds: int = 5, seed: int = 0) -> TrainedStacker:
    """Pick the grid cell with the best mean CV AUC, then refit on all rows."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    if folds < 2:
        raise ValueError("folds must be at least 2")
    y = matrix.y.astype(np.int64)
    if len(np.unique(y)) < 2:
        raise ValueError("training labels contain a single class")
    grid = grid or HyperGrid.default()
    X = matrix.X
    fold_ids = stratified_folds(y, folds, seed)
    table = []
    best, best_auc = None, -np.inf
    for cell in grid[algorithm]:
        score = cross_validate(algorithm, dict(cell), X, y, fold_ids, seed)
        table.append((dict(cell), score))
        if score > best_auc:  # strict: earlier cells win ties
            best, best_auc = dict(cell), score
    if best is None:
        best, best_auc = dict(grid[algorithm][0]), float("nan")
    logger.info("%s: chose %s (CV AUC %.4f)", algorithm, best, best_auc)
    model = make_model(algorithm, best, derive_seed(seed, 99)).fit(X, y)
    return TrainedStacker(algorithm, best, model, tuple(matrix.columns), int(seed), float(best_auc), table)


def predict_scores(model: TrainedStacker, matrix: FeatureMatrix) -> np.ndarray:
    """Scores in [0, 1], one per row of ``matrix``."""
    if tuple(matrix.columns) != tuple(model.columns):
        raise ValueError("feature columns differ from those the model was trained on")
    return np.clip(model_scores(model.model, matrix.X), 0.0, 1.0)


def save_model(obj, path: str | Path, kind: str = MODEL_FORMAT, **meta) -> None:
    """Pickle ``obj`` behind a self-describing header."""
    header = {"format": kind, "version": MODEL_VERSION, **meta}
    with open(path, "wb") as fh:
        pickle.dump({"header": header, "payload": obj}, fh, protocol=4)


def load_model(path: str | Path, kind: str = MODEL_FORMAT):
    with open(path, "rb") as fh:
        blob = pickle.load(fh)
    header = blob.get("header", {}) if isinstance(blob, dict) else {}
    if header.get("format") != kind or header.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: not a {kind} v{MODEL_VERSION} file")
    return blob["payload"]


def save_stacker(model: TrainedStacker, path: str | Path) -> None:
    save_model(model, path, algorithm=model.algorithm, hyperparameters=model.params,
               columns=list(model.columns))
