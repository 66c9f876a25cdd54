"""Command-line entry point: ``metalp <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import harness
from .eval import EvalResult, write_ledger
from .graph import (Graph, ParseError, nested_split, read_edge_list, save_manifest,
                    variant_seed, write_edge_list)
from .meta import (METRICS, load_meta_models, network_profile, read_meta_dataset, save_meta_models,
                   select_algorithm, train_meta_classifier, train_regressor, gini_importances)
from .pipeline import ALL_ALGORITHMS, GNNS, ExperimentOptions, prepare_variant, run_algorithm
from .predictors import build_feature_matrix

logger = logging.getLogger("metalp")


def _emit(obj) -> None:
    print(json.dumps(obj, indent=1, sort_keys=True, default=float))


def _write_graph(graph: Graph, path: Path) -> None:
    write_edge_list(graph, path)


def _write_pairs(graph: Graph, pairs, path: Path) -> None:
    labels = graph.labels
    with open(path, "w", encoding="utf-8") as fh:
        for i, j in pairs:
            fh.write(f"{labels[i]} {labels[j]}\n")


def _variant_seed(args) -> int:
    return variant_seed(args.seed, args.variant)


# ---------------------------------------------------------------------------
# subcommands

def cmd_ingest(args) -> int:
    """Parse edge lists, report their size and optionally write a canonical corpus."""
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    nets, failed = [], 0
    for path in args.files:
        try:
            g = read_edge_list(path)
        except (OSError, UnicodeDecodeError, ParseError) as exc:
            print(f"{path}: error: {exc}", file=sys.stderr)
            failed += 1
            continue
        print(f"{path}\tn={g.n}\tm={g.m}")
        if out:
            target = out / (Path(path).stem + ".txt")
            _write_graph(g, target)
            nets.append(harness.Network(target.stem, str(target), args.domain))
    if out and nets:
        index = out / harness.INDEX_NAME
        existing = harness.read_index(index) if index.exists() else []
        keep = [n for n in existing if n.id not in {m.id for m in nets}]
        harness.write_index(keep + nets, index)
    return 1 if failed else 0


def cmd_split(args) -> int:
    """Write the observed/training graphs and held-out sets for one variant."""
    g = read_edge_list(args.graph)
    seed = _variant_seed(args)
    ns = nested_split(g, args.alpha, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_graph(ns.observed, out / "observed.txt")
    _write_graph(ns.training, out / "training.txt")
    _write_pairs(g, ns.outer.heldout, out / "heldout_test.txt")
    _write_pairs(g, ns.inner.heldout, out / "heldout_train.txt")
    save_manifest({"graph": str(args.graph), "variant": args.variant, "variant_seed": seed,
                   **ns.manifest()}, out / "split.json")
    _emit({"n": g.n, "m": g.m, "observed_m": ns.observed.m, "training_m": ns.training.m,
           "heldout_test": len(ns.outer.heldout), "heldout_train": len(ns.inner.heldout)})
    return 0


def _options(args) -> ExperimentOptions:
    return ExperimentOptions(alpha=args.alpha, negative_cap=args.negative_cap)


def cmd_features(args) -> int:
    """Write the training and test predictor matrices of one variant as CSV."""
    g = read_edge_list(args.graph)
    data = prepare_variant(g, _variant_seed(args), _options(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train = build_feature_matrix(data.nested.training, data.train_pos, data.train_neg)
    test = build_feature_matrix(data.nested.observed, data.test_pos, data.test_neg)
    train.to_csv(out / "train_features.csv")
    test.to_csv(out / "test_features.csv")
    _emit({"train_rows": len(train.y), "test_rows": len(test.y), "columns": len(train.columns)})
    return 0


def _evaluate(args):
    g = read_edge_list(args.graph)
    seed = _variant_seed(args)
    opts = _options(args)
    if args.quick and args.algorithm not in GNNS:
        from .stacking import HyperGrid
        quick = {"RF": {"max_depth": 6, "n_estimators": 50}, "XGB": {"n_estimators": 50, "max_depth": 5},
                 "LR": {"C": 1.0, "penalty": "l2"}, "SVM": {"C": 1.0}}[args.algorithm]
        opts = replace(opts, grid=HyperGrid.single(args.algorithm, **quick), folds=2)
    elif args.quick:
        opts = replace(opts, gnn_grid=((2, 16),), gnn_epochs=50)
    data = prepare_variant(g, seed, opts)
    outcome = run_algorithm(args.algorithm, data, opts)
    name = Path(args.graph).stem
    result = EvalResult(name, args.domain, args.algorithm, args.variant, seed, outcome.auc,
                        outcome.topk, outcome.k, outcome.train_time)
    return result, outcome


def cmd_train(args) -> int:
    """Train (and tune) one algorithm on a variant and report its chosen settings."""
    result, outcome = _evaluate(args)
    _emit({"algorithm": result.algorithm, "variant_seed": result.variant_seed,
           "train_time": result.train_time, **outcome.details})
    return 0


def cmd_eval(args) -> int:
    """Train one algorithm on a variant and print its AUC and Top-k."""
    result, _ = _evaluate(args)
    _emit(asdict(result))
    if args.ledger:
        write_ledger([result], args.ledger, Path(args.ledger).with_name("timings.csv"))
    return 0


def cmd_benchmark(args) -> int:
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        config = harness.RunConfig.from_dict(manifest["config"])
    else:
        config = harness.RunConfig.load(args.config)
    if args.output:
        config.output = args.output
    out = harness.benchmark(config, workers=args.workers)
    errors = sum(r.status != "ok" for r in out.results)
    _emit({"run_directory": str(out.directory), "rows": len(out.results), "errors": errors})
    return 0


def cmd_meta_train(args) -> int:
    records = []
    for path in args.meta_dataset:
        records.extend(read_meta_dataset(path))
    models = {}
    summary = {}
    for metric in METRICS:
        reg = train_regressor(records, metric, repeats=args.repeats, seed=args.seed)
        clf = train_meta_classifier(records, args.mode, metric, seed=args.seed)
        models[f"regressor_{metric}"] = reg
        models[f"classifier_{metric}"] = clf
        summary[metric] = {"mean_r2": reg.mean_r2, "importances": gini_importances(reg),
                           "classifier_params": clf.params, "cv_accuracy": clf.cv_accuracy}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_meta_models(models, out)
    _emit({"models": str(out), "records": len(records), **summary})
    return 0


def cmd_select(args) -> int:
    path = Path(args.models)
    if not path.exists():
        print(f"error: meta model file {path} not found. Train one first with "
              f"'metalp meta-train <run>/meta_dataset.csv --out {path}'.", file=sys.stderr)
        return 2
    models = load_meta_models(path)
    profile = network_profile(read_edge_list(args.graph))
    alg, auc_pred = select_algorithm(profile, models["classifier_AUC"], models["regressor_AUC"])
    _, topk_pred = select_algorithm(profile, models["classifier_Topk"], models["regressor_Topk"])
    _emit({"algorithm": alg, "predicted_auc": auc_pred, "predicted_topk": topk_pred,
           "profile": asdict(profile)})
    return 0


def cmd_report(args) -> int:
    results = harness.load_results(args.ledger)
    if not results:
        print("error: ledger is empty", file=sys.stderr)
        return 1
    out = Path(args.out) if args.out else Path(args.ledger).parent
    print(harness.write_report(results, out, args.margin))
    return 0


# ---------------------------------------------------------------------------

def _variant_args(p):
    p.add_argument("graph", help="edge-list file")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--variant", type=int, default=0, help="variant index")
    p.add_argument("--alpha", type=float, default=0.8, help="edge retention rate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metalp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate edge lists; optionally build a corpus with index.tsv")
    p.add_argument("files", nargs="+")
    p.add_argument("--domain", default="unknown")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="write the nested split of one variant")
    _variant_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("features", help="write predictor matrices of one variant")
    _variant_args(p)
    p.add_argument("--negative-cap", type=int, default=10_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    for name, func, hlp in (("train", cmd_train, "train and tune one algorithm on one variant"),
                            ("eval", cmd_eval, "train then evaluate one algorithm on one variant")):
        p = sub.add_parser(name, help=hlp)
        _variant_args(p)
        p.add_argument("--algorithm", choices=ALL_ALGORITHMS, default="RF")
        p.add_argument("--domain", default="unknown")
        p.add_argument("--negative-cap", type=int, default=10_000)
        p.add_argument("--quick", action="store_true", help="single hyperparameter cell")
        if name == "eval":
            p.add_argument("--ledger", help="also write the result row to this ledger")
        p.set_defaults(func=func)

    p = sub.add_parser("benchmark", help="run every network x variant x algorithm")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--config", help="JSON run configuration")
    g.add_argument("--manifest", help="replay a run manifest")
    p.add_argument("--workers", type=int, help=f"worker processes (default ${harness.WORKERS_ENV} or 1)")
    p.add_argument("--output", help="override the output directory")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("meta-train", help="fit accuracy regressors and meta-classifiers")
    p.add_argument("meta_dataset", nargs="+")
    p.add_argument("--mode", choices=("Model1", "Model2"), default="Model1")
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_meta_train)

    p = sub.add_parser("select", help="pick an algorithm for a graph without training one")
    p.add_argument("graph")
    p.add_argument("--models", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("report", help="summary tables from a ledger")
    p.add_argument("ledger")
    p.add_argument("--margin", type=float, default=harness.NEARLY_BEST_MARGIN)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return int(args.func(args) or 0)
    except (ValueError, OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
