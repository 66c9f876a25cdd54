"""Accuracy metrics, timing and the results ledger.

Two AUC estimators are provided. :func:`auc` counts a positive/negative pair
only when the positive scores strictly higher; :func:`auc_tie` gives ties
half credit and is the one used for reporting.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats

LEDGER_VERSION = 1


def _scores(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite values")
    return a


def _pair_counts(pos, neg) -> tuple[int, int, int]:
    """Return ``(wins, ties, total)`` over all positive/negative pairs."""
    pos = _scores(pos, "pos_scores")
    neg = np.sort(_scores(neg, "neg_scores"))
    lo = np.searchsorted(neg, pos, side="left")
    hi = np.searchsorted(neg, pos, side="right")
    return int(lo.sum()), int((hi - lo).sum()), len(pos) * len(neg)


def auc(pos_scores, neg_scores) -> float:
    """Fraction of (positive, negative) pairs where the positive scores higher."""
    wins, _, total = _pair_counts(pos_scores, neg_scores)
    return wins / total


def auc_tie(pos_scores, neg_scores) -> float:
    """Like :func:`auc` but tied pairs count one half."""
    wins, ties, total = _pair_counts(pos_scores, neg_scores)
    return (wins + 0.5 * ties) / total


def tie_mass(pos_scores, neg_scores) -> float:
    _, ties, total = _pair_counts(pos_scores, neg_scores)
    return ties / total


def rank_pairs(pairs, scores) -> np.ndarray:
    """Row order by descending score, ties broken by ascending ``(i, j)``."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    return np.lexsort((hi, lo, -np.asarray(scores, dtype=np.float64)))


def topk(pairs, scores, truth, k: int) -> float:
    """Hits among the ``k`` best-scored pairs, divided by ``min(k, |truth|)``.

    Parameters
    ----------
    pairs : (p, 2) array of candidate node pairs
    scores : (p,) array
    truth : (t, 2) array of true missing edges
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    truth = np.sort(np.asarray(truth, dtype=np.int64).reshape(-1, 2), axis=1)
    if len(truth) == 0:
        raise ValueError("truth set is empty")
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    top = np.sort(pairs[rank_pairs(pairs, scores)[:k]], axis=1)
    truth_set = {tuple(p) for p in truth.tolist()}
    hits = sum(tuple(p) in truth_set for p in top.tolist())
    return hits / min(k, len(truth_set))


def choose_k(num_missing: int) -> int:
    """Prediction budget: 10 below 100 missing edges, else 100."""
    if num_missing < 1:
        raise ValueError("num_missing must be at least 1")
    return 10 if num_missing < 100 else 100


def welch_ttest(sample_a, sample_b) -> float:
    """Two-sided Welch t-test p-value."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least two values")
    if a.var() == 0 and b.var() == 0:
        return 1.0 if a.mean() == b.mean() else 0.0
    return float(stats.ttest_ind(a, b, equal_var=False).pvalue)


def time_training(task: Callable[[], object]) -> tuple[float, object]:
    """Run ``task`` and return ``(wall_seconds, result)``."""
    t0 = time.perf_counter()
    result = task()
    return time.perf_counter() - t0, result


@dataclass(frozen=True)
class EvalResult:
    network: str
    domain: str
    algorithm: str
    variant: int
    variant_seed: int
    auc: float
    topk: float
    k: int
    train_time: float = math.nan
    status: str = "ok"
    error: str = ""


LEDGER_COLUMNS = tuple(f.name for f in fields(EvalResult) if f.name != "train_time")
TIMING_COLUMNS = ("network", "algorithm", "variant", "train_time")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_ledger(results, path: str | Path, timings_path: str | Path | None = None) -> None:
    """Write results as CSV with a versioned comment header.

    Wall-clock times differ between runs, so they go to a separate
    ``timings_path`` file; the ledger itself is reproducible byte for byte.
    """
    results = list(results)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# metalp-ledger v{LEDGER_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEDGER_COLUMNS)
        for r in results:
            d = asdict(r)
            w.writerow([_fmt(d[c]) for c in LEDGER_COLUMNS])
    if timings_path is not None:
        with open(timings_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TIMING_COLUMNS)
            for r in results:
                d = asdict(r)
                w.writerow([_fmt(d[c]) for c in TIMING_COLUMNS])


def read_ledger(path: str | Path, timings_path: str | Path | None = None) -> list[EvalResult]:
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().strip()
        if head != f"# metalp-ledger v{LEDGER_VERSION}":
            raise ValueError(f"unsupported ledger header {head!r}")
        rows = list(csv.DictReader(fh))
    times = {}
    if timings_path is not None and Path(timings_path).exists():
        with open(timings_path, encoding="utf-8") as fh:
            for t in csv.DictReader(fh):
                times[(t["network"], t["algorithm"], int(t["variant"]))] = float(t["train_time"])
    out = []
    for r in rows:
        key = (r["network"], r["algorithm"], int(r["variant"]))
        out.append(EvalResult(
            network=r["network"], domain=r["domain"], algorithm=r["algorithm"],
            variant=int(r["variant"]), variant_seed=int(r["variant_seed"]),
            auc=float(r["auc"]), topk=float(r["topk"]), k=int(r["k"]),
            train_time=times.get(key, math.nan), status=r["status"], error=r["error"],
        ))
    return out
