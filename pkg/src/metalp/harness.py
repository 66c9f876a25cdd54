"""Run configuration, corpus handling, the benchmark driver and reports.

A run is described by a :class:`RunConfig`. Its manifest (config snapshot,
per-network seeds, input digests and tool version) is hashed, and every output
of the run lives under ``<output>/run-<hash>``. Ledger rows are sorted by
(network order, variant, algorithm order) and wall-clock times live in a
sidecar file, so the ledger of a replayed manifest is byte-identical
whatever the worker count.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .eval import EvalResult, read_ledger, write_ledger
from .graph import ParseError, derive_seed, read_edge_list, variant_seed
from .meta import network_profile, records_from_results, write_meta_dataset
from .pipeline import ALL_ALGORITHMS, ExperimentOptions, prepare_variant, run_algorithm
from .stacking import HyperGrid

logger = logging.getLogger(__name__)

WORKERS_ENV = "METALP_WORKERS"
INDEX_NAME = "index.tsv"
NEARLY_BEST_MARGIN = 0.03


@dataclass(frozen=True)
class Network:
    id: str
    path: str
    domain: str


@dataclass
class RunConfig:
    """Everything needed to replay a benchmark.

    ``inputs`` holds edge-list files and/or ``index.tsv`` files (columns
    ``file`` and ``domain``; paths relative to the index). ``domain`` tags
    bare edge-list inputs. ``grid`` optionally narrows the stacker grids, e.g.
    ``{"RF": [{"max_depth": 6, "n_estimators": 50}]}``.
    """

    inputs: list = field(default_factory=list)
    domain: str = "unknown"
    alpha: float = 0.8
    variants: int = 10
    algorithms: list = field(default_factory=lambda: list(ALL_ALGORITHMS))
    seed: int = 0
    k: int | None = None
    output: str = "runs"
    workers: int | None = None
    negative_cap: int = 10_000
    folds: int = 5
    gnn_epochs: int = 200
    gnn_patience: int = 20
    gnn_grid: list | None = None
    grid: dict | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        # relative inputs are resolved against the config file
        data["inputs"] = [str((path.parent / p).resolve()) if not os.path.isabs(p) else p
                          for p in data.get("inputs", [])]
        return cls.from_dict(data)

    def validate(self) -> None:
        if not self.inputs:
            raise ValueError("config lists no inputs")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.variants < 1:
            raise ValueError("variants must be at least 1")
        bad = [a for a in self.algorithms if a not in ALL_ALGORITHMS]
        if bad or not self.algorithms:
            raise ValueError(f"unknown algorithms {bad}; choose from {ALL_ALGORITHMS}")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)

    def options(self) -> ExperimentOptions:
        grid = None
        if self.grid:
            base = dict(HyperGrid.default().cells)
            for alg, cells in self.grid.items():
                base[alg] = tuple(HyperGrid.single(alg, **c)[alg][0] for c in cells)
            grid = HyperGrid(base)
        gnn_grid = tuple(tuple(c) for c in self.gnn_grid) if self.gnn_grid else ExperimentOptions.gnn_grid
        return ExperimentOptions(alpha=self.alpha, negative_cap=self.negative_cap, folds=self.folds,
                                 grid=grid, gnn_grid=gnn_grid, gnn_epochs=self.gnn_epochs,
                                 gnn_patience=self.gnn_patience, k=self.k)


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            logger.warning("ignoring non-integer %s=%r", WORKERS_ENV, value)
    return 1


# ---------------------------------------------------------------------------
# corpus

def read_index(path) -> list[Network]:
    path = Path(path)
    out = []
    with path.open(encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh, delimiter="\t") if r and not r[0].startswith("#")]
    if rows and rows[0][:2] == ["file", "domain"]:
        rows = rows[1:]
    for row in rows:
        if len(row) < 2:
            raise ValueError(f"{path}: index rows need 'file<TAB>domain'")
        file = path.parent / row[0]
        out.append(Network(Path(row[0]).stem, str(file), row[1]))
    return out


def write_index(networks, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("file\tdomain\n")
        for net in networks:
            fh.write(f"{os.path.relpath(net.path, path.parent)}\t{net.domain}\n")


def resolve_networks(config: RunConfig) -> list[Network]:
    nets = []
    for item in config.inputs:
        p = Path(item)
        if p.name == INDEX_NAME or p.suffix == ".tsv":
            nets.extend(read_index(p))
        else:
            nets.append(Network(p.stem, str(p), config.domain))
    ids = [n.id for n in nets]
    dup = {i for i in ids if ids.count(i) > 1}
    if dup:
        raise ValueError(f"duplicate network ids: {sorted(dup)}")
    return nets


def file_digest(path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as exc:
        return f"unreadable:{type(exc).__name__}"


def network_seed(seed: int, network_id: str) -> int:
    # keyed by the id, so adding networks does not reshuffle the others
    return derive_seed(seed, zlib.crc32(network_id.encode("utf-8")))


def build_manifest(config: RunConfig) -> dict:
    nets = resolve_networks(config)
    return {
        "tool": "metalp",
        "version": __version__,
        "config": config.to_dict(),
        "networks": [
            {"id": n.id, "path": n.path, "domain": n.domain, "sha256": file_digest(n.path),
             "seed": network_seed(config.seed, n.id),
             "variant_seeds": [variant_seed(network_seed(config.seed, n.id), v)
                               for v in range(config.variants)]}
            for n in nets
        ],
    }


def manifest_hash(manifest: dict) -> str:
    # the output directory and worker count do not change results
    snapshot = json.loads(json.dumps(manifest))
    snapshot["config"].pop("output", None)
    snapshot["config"].pop("workers", None)
    blob = json.dumps(snapshot, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def run_directory(config: RunConfig, manifest: dict) -> Path:
    return Path(config.output) / f"run-{manifest_hash(manifest)[:12]}"


# ---------------------------------------------------------------------------
# benchmark

@dataclass(frozen=True)
class Task:
    network: str
    domain: str
    path: str
    variant: int
    seed: int
    algorithm: str


@lru_cache(maxsize=32)
def _load(path: str):
    return read_edge_list(path)


@lru_cache(maxsize=4)
def _cached_variant(path: str, seed: int, alpha: float, cap: int, limit: int):
    opts = ExperimentOptions(alpha=alpha, negative_cap=cap, rank_all_limit=limit)
    return prepare_variant(_load(path), seed, opts)


def _variant(path: str, seed: int, options: ExperimentOptions):
    return _cached_variant(path, seed, options.alpha, options.negative_cap, options.rank_all_limit)


@lru_cache(maxsize=4)
def _options_for(config_json: str) -> ExperimentOptions:
    return RunConfig.from_dict(json.loads(config_json)).options()


def run_task(task: Task, options: ExperimentOptions | str) -> EvalResult:
    """Run one (network, variant, algorithm) job; failures become error rows."""
    if isinstance(options, str):
        options = _options_for(options)
    try:
        data = _variant(task.path, task.seed, options)
        out = run_algorithm(task.algorithm, data, options)
        return EvalResult(task.network, task.domain, task.algorithm, task.variant, task.seed,
                          float(out.auc), float(out.topk), int(out.k), float(out.train_time))
    except Exception as exc:  # isolate: one bad task must not sink the run
        logger.warning("task %s/%d/%s failed: %s", task.network, task.variant, task.algorithm, exc)
        return _error_row(task.network, task.domain, task.algorithm, task.variant, task.seed, exc)


def _error_row(network, domain, algorithm, variant, seed, exc) -> EvalResult:
    msg = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return EvalResult(network, domain, algorithm, variant, seed, float("nan"), float("nan"), 0,
                      status="error", error=msg)


def _run_task_star(args):
    return run_task(*args)


def _profile_task(path: str, seed: int, options: ExperimentOptions | str):
    if isinstance(options, str):
        options = _options_for(options)
    try:
        return network_profile(_variant(path, seed, options).nested.observed)
    except Exception:
        return None


def _profile_task_star(args):
    return _profile_task(*args)


@dataclass
class BenchmarkOutput:
    directory: Path
    results: list
    records: list
    manifest: dict

    @property
    def ledger(self) -> Path:
        return self.directory / "ledger.csv"


def benchmark(config: RunConfig, workers: int | None = None) -> BenchmarkOutput:
    """Evaluate every network x variant x algorithm and write the run directory."""
    config.validate()
    workers = workers or config.workers or default_workers()
    manifest = build_manifest(config)
    outdir = run_directory(config, manifest)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n",
                                          encoding="utf-8")
    options = config.options()
    order = {a: i for i, a in enumerate(ALL_ALGORITHMS)}
    algorithms = sorted(config.algorithms, key=order.__getitem__)

    results: list[EvalResult] = []
    tasks: list[Task] = []
    for net_entry in manifest["networks"]:
        net = Network(net_entry["id"], net_entry["path"], net_entry["domain"])
        try:
            _load(net.path)
        except (OSError, UnicodeDecodeError, ParseError) as exc:
            logger.warning("cannot read %s: %s", net.path, exc)
            results.append(_error_row(net.id, net.domain, "*", -1, net_entry["seed"], exc))
            continue
        for v, vs in enumerate(net_entry["variant_seeds"]):
            tasks.extend(Task(net.id, net.domain, net.path, v, vs, a) for a in algorithms)

    variant_keys = sorted({(t.network, t.path, t.variant, t.seed) for t in tasks},
                          key=lambda k: (k[0], k[2]))
    if workers > 1 and len(tasks) > 1:
        # options hold read-only mappings that do not pickle; ship the config instead
        blob = json.dumps(config.to_dict(), sort_keys=True)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results += list(pool.map(_run_task_star, [(t, blob) for t in tasks]))
            profiles = list(pool.map(_profile_task_star, [(p, s, blob) for _, p, _, s in variant_keys]))
    else:
        results += [run_task(t, options) for t in tasks]
        profiles = [_profile_task(p, s, options) for _, p, _, s in variant_keys]

    net_order = {n["id"]: i for i, n in enumerate(manifest["networks"])}
    order["*"] = -1
    results.sort(key=lambda r: (net_order[r.network], r.variant, order[r.algorithm]))
    write_ledger(results, outdir / "ledger.csv", outdir / "timings.csv")

    prof_map = {(net, seed): prof for (net, _, _, seed), prof in zip(variant_keys, profiles)
                if prof is not None}
    records = records_from_results([r for r in results if r.variant >= 0], prof_map)
    records.sort(key=lambda r: (net_order[r.network], r.variant_seed))
    write_meta_dataset(records, outdir / "meta_dataset.csv")
    return BenchmarkOutput(outdir, results, records, manifest)


# ---------------------------------------------------------------------------
# report

@dataclass(frozen=True)
class SummaryRow:
    domain: str
    algorithm: str
    metric: str
    mean: float
    std: float
    count: int


@dataclass(frozen=True)
class BestRow:
    algorithm: str
    metric: str
    best: float
    nearly_best: float
    networks: int


def _network_means(results, metric: str) -> dict:
    """``{network: {algorithm: mean over variants}}`` for successful rows."""
    acc: dict = {}
    for r in results:
        if r.status != "ok":
            continue
        v = r.auc if metric == "AUC" else r.topk
        if np.isfinite(v):
            acc.setdefault(r.network, {}).setdefault(r.algorithm, []).append(v)
    return {net: {a: float(np.mean(v)) for a, v in algs.items()} for net, algs in acc.items()}


def summarize(results, metric: str = "AUC") -> list[SummaryRow]:
    """Per-domain mean and sample standard deviation per algorithm over all ok rows."""
    groups: dict = {}
    for r in results:
        if r.status != "ok":
            continue
        v = r.auc if metric == "AUC" else r.topk
        if np.isfinite(v):
            groups.setdefault((r.domain, r.algorithm), []).append(v)
    rows = []
    order = {a: i for i, a in enumerate(ALL_ALGORITHMS)}
    for (dom, alg) in sorted(groups, key=lambda k: (k[0], order.get(k[1], 99), k[1])):
        v = np.asarray(groups[(dom, alg)])
        std = float(v.std(ddof=1)) if len(v) > 1 else 0.0
        rows.append(SummaryRow(dom, alg, metric, float(v.mean()), std, len(v)))
    return rows


def best_rates(results, metric: str = "AUC", margin: float = NEARLY_BEST_MARGIN) -> list[BestRow]:
    """Fraction of networks where each algorithm is best or nearly best.

    An algorithm is *best* on a network when its variant-mean equals the
    maximum, and *nearly best* when it is not best but within ``margin``
    (relative) of the maximum.
    """
    means = _network_means(results, metric)
    algs = sorted({a for m in means.values() for a in m}, key=lambda a: (
        ALL_ALGORITHMS.index(a) if a in ALL_ALGORITHMS else 99, a))
    counts = {a: [0, 0, 0] for a in algs}
    for per in means.values():
        top = max(per.values())
        for a, v in per.items():
            counts[a][2] += 1
            if v == top:
                counts[a][0] += 1
            elif v >= top * (1.0 - margin):
                counts[a][1] += 1
    return [BestRow(a, metric, c[0] / c[2], c[1] / c[2], c[2]) for a, c in counts.items()]


def write_report(results, outdir, margin: float = NEARLY_BEST_MARGIN) -> str:
    """Write ``summary.csv`` and ``best.csv`` and return a plain-text rendering."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    summary = summarize(results, "AUC") + summarize(results, "Topk")
    best = best_rates(results, "AUC", margin) + best_rates(results, "Topk", margin)
    with (outdir / "summary.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f.name for f in fields(SummaryRow)])
        for r in summary:
            w.writerow([r.domain, r.algorithm, r.metric, repr(r.mean), repr(r.std), r.count])
    with (outdir / "best.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f.name for f in fields(BestRow)])
        for r in best:
            w.writerow([r.algorithm, r.metric, repr(r.best), repr(r.nearly_best), r.networks])
    lines = ["domain      algorithm  metric  mean +/- std        n"]
    for r in summary:
        lines.append(f"{r.domain:<11} {r.algorithm:<10} {r.metric:<6}  {r.mean:.4f} +/- {r.std:.4f}  {r.count}")
    lines.append("")
    lines.append(f"algorithm  metric  best    nearly-best (within {margin:.0%})  networks")
    for r in best:
        lines.append(f"{r.algorithm:<10} {r.metric:<6}  {r.best:6.1%}  {r.nearly_best:6.1%}  {r.networks}")
    errors = [r for r in results if r.status != "ok"]
    if errors:
        lines.append("")
        lines.append(f"{len(errors)} failed task(s) excluded")
    return "\n".join(lines)


def load_results(ledger) -> list[EvalResult]:
    ledger = Path(ledger)
    return read_ledger(ledger, ledger.with_name("timings.csv"))
