"""``gk`` command line: kernel computation, classification, K-sweeps, validation.

Subcommands: ``kernel`` (write a Gram file), ``classify`` (accuracy under a
split rule or k-fold CV), ``sweep-k`` (Gram wall-time versus propagation
steps, CSV + SVG), ``dataset-validate``. Exit codes: 0 success, 2 input or
dataset error, 3 numeric failure. ``GK_THREADS`` overrides ``--threads``.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import (
    DEFAULT_C_GRID,
    DEFAULT_LAMBDA_GRID,
    KernelRidgeClassifier,
    PrecomputedKernelSVC,
    cross_validate,
)
from .datasets import (
    load_dataset,
    materialize_splits,
    one_hot_degree_features,
    row_normalize,
    validate_dataset,
)
from .exceptions import DatasetError, NumericError
from .expectations import KernelHyperParams
from .gram_io import gram_to_csv, load_gram, save_gram
from .kernels import KERNEL_KINDS, gram_matrix, node_kernel_matrix
from .svg import save_chart

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _threads(args) -> int:
    env = os.environ.get("GK_THREADS")
    if env:
        return max(1, int(env))
    if args.threads:
        return max(1, args.threads)
    return os.cpu_count() or 1


def _hyperparams(kind: str, k: int, beta: float, sigma_b: float) -> KernelHyperParams:
    if kind == "gntk":
        # The sweep axis for the baseline is its stacked block count.
        return KernelHyperParams(k=k, beta=0.0, gntk_blocks=max(1, k))
    if kind == "sgnk":
        return KernelHyperParams(k=k, beta=beta, sigma_b=sigma_b)
    return KernelHyperParams(k=k, beta=beta, sigma_b=sigma_b)


def _prepared_bundle(args):
    bundle = load_dataset(args.dataset)
    graphs = bundle.graphs
    if bundle.level == "graph" and (
        bundle.feature_provenance == "one_hot_degree" or graphs[0].feature_dim == 0
    ):
        graphs = one_hot_degree_features(graphs)
    if bundle.level == "node" and not args.no_row_normalize:
        graphs = [graphs[0].with_features(row_normalize(graphs[0].features))]
    bundle.graphs = graphs
    return bundle


def _provenance_lines(args, bundle, extra=None) -> list:
    lines = [
        f"gk {args.command} v{__version__}",
        f"dataset={bundle.name} fingerprint={bundle.fingerprint}",
        f"seed={getattr(args, 'seed', 0)} threads={_threads(args)}",
    ]
    if bundle.level == "node":
        lines.append(f"row_normalize={not args.no_row_normalize}")
    if extra:
        lines.extend(extra)
    return lines


def _parse_k_values(text: str) -> list:
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


# ---------------------------------------------------------------------------
# gk kernel
# ---------------------------------------------------------------------------


def cmd_kernel(args) -> int:
    bundle = _prepared_bundle(args)
    hp = _hyperparams(args.kind, args.K, args.beta, args.sigma_b)
    level = bundle.level
    items = bundle.graphs

    start = time.perf_counter()
    gram = gram_matrix(
        items,
        args.kind,
        hp,
        level=level,
        readout_mode=args.readout,
        n_jobs=_threads(args),
        dataset_fingerprint=bundle.fingerprint,
    )
    elapsed = time.perf_counter() - start

    out = Path(args.out)
    save_gram(gram, out)
    gram_to_csv(gram, out.with_suffix(out.suffix + ".csv"))
    print(
        f"kernel kind={args.kind} K={args.K} level={level} "
        f"size={gram.size} wall_time_s={elapsed:.4f} out={out}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# gk classify
# ---------------------------------------------------------------------------


def _node_split_eval(bundle, kind, k_values, beta, sigma_b, classifier, grid, split_rule):
    """Fixed-split protocol: pick (K, hyperparam) on validation, score test.

    Without a validation split the selection falls back to 3-fold CV on the
    training items. Returns (rows, best) where each row is a dict.
    """
    graph = bundle.graphs[0]
    labels = bundle.labels
    splits = materialize_splits(bundle, split_rule)
    train = np.asarray(splits["train"])
    test = np.asarray(splits["test"])
    val = np.asarray(splits["val"]) if "val" in splits else None

    rows = []
    best = None
    for k in k_values:
        hp = _hyperparams(kind, k, beta, sigma_b)
        t0 = time.perf_counter()
        k_train = node_kernel_matrix(graph, kind, hp, train, train)
        k_test = node_kernel_matrix(graph, kind, hp, test, train)
        k_val = (
            node_kernel_matrix(graph, kind, hp, val, train) if val is not None else None
        )
        for value in grid:
            model = (
                KernelRidgeClassifier(alpha=value)
                if classifier == "krr"
                else PrecomputedKernelSVC(C=value)
            )
            model.fit(k_train, labels[train])
            if k_val is not None:
                select_acc = float(np.mean(model.predict(k_val) == labels[val]))
            else:
                inner = cross_validate(
                    k_train, labels[train], classifier, folds=3, grid=[value], seed=0
                )
                select_acc = inner.mean_accuracy
            test_acc = float(np.mean(model.predict(k_test) == labels[test]))
            elapsed = time.perf_counter() - t0
            row = {
                "dataset": bundle.name,
                "kernel": kind,
                "classifier": classifier,
                "K": k,
                "beta": beta,
                "hyperparam": value,
                "select_acc": select_acc,
                "mean_acc": test_acc,
                "std_acc": 0.0,
                "wall_time_s": elapsed,
            }
            rows.append(row)
            if best is None or select_acc > best["select_acc"] + 1e-12:
                best = row
    return rows, best


def _graph_cv_eval(bundle, kind, k_values, beta, sigma_b, classifier, grid, folds, seed, jobs):
    rows = []
    best = None
    for k in k_values:
        hp = _hyperparams(kind, k, beta, sigma_b)
        t0 = time.perf_counter()
        gram = gram_matrix(
            bundle.graphs, kind, hp, level="graph", n_jobs=jobs,
            dataset_fingerprint=bundle.fingerprint,
        )
        result = cross_validate(
            gram.values, bundle.labels, classifier, folds=folds, grid=grid, seed=seed
        )
        elapsed = time.perf_counter() - t0
        row = {
            "dataset": bundle.name,
            "kernel": kind,
            "classifier": classifier,
            "K": k,
            "beta": beta,
            "hyperparam": result.best_hyperparam,
            "select_acc": result.mean_accuracy,
            "mean_acc": result.mean_accuracy,
            "std_acc": result.std_accuracy,
            "wall_time_s": elapsed,
        }
        rows.append(row)
        if best is None or row["mean_acc"] > best["mean_acc"] + 1e-12:
            best = row
    return rows, best


_CSV_COLUMNS = [
    "dataset", "kernel", "classifier", "K", "beta",
    "hyperparam", "mean_acc", "std_acc", "wall_time_s",
]


def _write_rows(rows, provenance, out_path):
    lines = [f"# {line}" for line in provenance]
    lines.append(",".join(_CSV_COLUMNS))
    for row in rows:
        lines.append(",".join(str(row[c]) for c in _CSV_COLUMNS))
    text = "\n".join(lines) + "\n"
    if out_path:
        Path(out_path).write_text(text)
    return text


def cmd_classify(args) -> int:
    bundle = _prepared_bundle(args)
    grid = list(DEFAULT_LAMBDA_GRID if args.classifier == "krr" else DEFAULT_C_GRID)
    k_values = _parse_k_values(args.K_grid) if args.K_grid else [args.K]

    if args.gram:
        gram = load_gram(args.gram)
        if gram.size != bundle.num_items:
            raise DatasetError(
                f"Gram size {gram.size} does not match dataset items "
                f"{bundle.num_items}",
                str(args.gram),
            )
        result = cross_validate(
            gram.values, bundle.labels, args.classifier,
            folds=args.folds, grid=grid, seed=args.seed,
        )
        rows = [{
            "dataset": bundle.name, "kernel": gram.kind,
            "classifier": args.classifier, "K": gram.hyperparams.k,
            "beta": gram.hyperparams.beta, "hyperparam": result.best_hyperparam,
            "select_acc": result.mean_accuracy, "mean_acc": result.mean_accuracy,
            "std_acc": result.std_accuracy, "wall_time_s": 0.0,
        }]
        best = rows[0]
    elif bundle.level == "node":
        rows, best = _node_split_eval(
            bundle, args.kind, k_values, args.beta, args.sigma_b,
            args.classifier, grid, args.split,
        )
    else:
        rows, best = _graph_cv_eval(
            bundle, args.kind, k_values, args.beta, args.sigma_b,
            args.classifier, grid, args.folds, args.seed, _threads(args),
        )

    provenance = _provenance_lines(
        args, bundle, [f"grid={grid}", f"K_values={k_values}"]
    )
    text = _write_rows(rows, provenance, args.out)
    sys.stdout.write(text)
    print(
        f"best: K={best['K']} hyperparam={best['hyperparam']} "
        f"mean_acc={best['mean_acc']:.4f} std_acc={best['std_acc']:.4f}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# gk sweep-k
# ---------------------------------------------------------------------------


def cmd_sweep_k(args) -> int:
    bundle = _prepared_bundle(args)
    kinds = [k.strip() for k in args.kind.split(",")]
    for kind in kinds:
        if kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {kind!r}")
    k_values = _parse_k_values(args.K)
    if not k_values:
        raise ValueError("empty K range")
    jobs = _threads(args)

    records = []
    for kind in kinds:
        for k in k_values:
            hp = _hyperparams(kind, k, args.beta, args.sigma_b)
            times = []
            for rep in range(args.reps + 1):  # first run is the warm-up
                start = time.perf_counter()
                gram_matrix(
                    bundle.graphs, kind, hp, level=bundle.level, n_jobs=jobs,
                    dataset_fingerprint=bundle.fingerprint,
                )
                elapsed = time.perf_counter() - start
                if rep > 0:
                    times.append(elapsed)
            records.append({
                "dataset": bundle.name,
                "kind": kind,
                "K": k,
                "phase": "gram",
                "wall_time_s": statistics.median(times),
                "accuracy": "",
                "repetitions": args.reps,
            })
            print(
                f"sweep kind={kind} K={k} median_s={statistics.median(times):.4f} "
                f"reps={args.reps}"
            )

    provenance = _provenance_lines(
        args, bundle,
        [f"kinds={kinds}", f"K_values={k_values}", f"reps={args.reps}",
         f"beta={args.beta}"],
    )
    out = Path(args.out)
    columns = ["dataset", "kind", "K", "phase", "wall_time_s", "accuracy", "repetitions"]
    lines = [f"# {line}" for line in provenance]
    lines.append(",".join(columns))
    for rec in records:
        lines.append(",".join(str(rec[c]) for c in columns))
    csv_path = out.with_suffix(".csv")
    csv_path.write_text("\n".join(lines) + "\n")

    series = {
        kind: [(r["K"], r["wall_time_s"]) for r in records if r["kind"] == kind]
        for kind in kinds
    }
    save_chart(
        series,
        out.with_suffix(".svg"),
        title=f"Gram wall time vs K ({bundle.name})",
        xlabel="K",
        ylabel="median seconds",
        comments=provenance,
    )
    print(f"wrote {csv_path} and {out.with_suffix('.svg')}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# gk dataset-validate
# ---------------------------------------------------------------------------


def cmd_dataset_validate(args) -> int:
    problems = validate_dataset(args.dataset)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return EXIT_INPUT
    bundle = load_dataset(args.dataset)
    stats = {
        "name": bundle.name,
        "level": bundle.level,
        "items": bundle.num_items,
        "classes": bundle.num_classes,
        "nodes": sum(g.num_nodes for g in bundle.graphs),
        "edges": sum(int(g.edges.shape[0]) for g in bundle.graphs),
        "feature_dim": bundle.graphs[0].feature_dim,
        "splits": {k: len(v) for k, v in bundle.splits.items()},
    }
    print(json.dumps(stats, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gk", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, kind=True):
        p.add_argument("--dataset", required=True, help="canonical dataset directory")
        if kind:
            p.add_argument("--kind", default="sgnk", help="sgtk | sgnk | gntk")
        p.add_argument("--beta", type=float, default=1.0,
                       help="bias coefficient (SGTK covariance term; optional SGNK offset)")
        p.add_argument("--sigma-b", type=float, default=1.0, dest="sigma_b",
                       help="bias scale of the erf network input layer")
        p.add_argument("--threads", type=int, default=0,
                       help="worker threads (0 = all cores); GK_THREADS overrides")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--no-row-normalize", action="store_true",
                       help="skip L1 row normalization of node-level features")

    p_kernel = sub.add_parser("kernel", help="compute a Gram matrix file")
    common(p_kernel)
    p_kernel.add_argument("--K", type=int, default=2, help="propagation steps")
    p_kernel.add_argument("--readout", default="sum", choices=["sum", "mean"])
    p_kernel.add_argument("--out", required=True, help="output .gkm path")
    p_kernel.set_defaults(func=cmd_kernel)

    p_classify = sub.add_parser("classify", help="accuracy under a split or k-fold CV")
    common(p_classify)
    p_classify.add_argument("--K", type=int, default=2)
    p_classify.add_argument("--K-grid", dest="K_grid", default="",
                            help="comma list or lo:hi range; overrides --K")
    p_classify.add_argument("--classifier", default="krr", choices=["krr", "svm"])
    p_classify.add_argument("--split", default="public",
                            choices=["public", "first20_last100"],
                            help="node-level split rule")
    p_classify.add_argument("--folds", type=int, default=10,
                            help="outer folds for graph-level CV")
    p_classify.add_argument("--gram", default="",
                            help="use a precomputed .gkm file instead of a kernel")
    p_classify.add_argument("--out", default="", help="optional CSV output path")
    p_classify.set_defaults(func=cmd_classify)

    p_sweep = sub.add_parser("sweep-k", help="Gram wall time vs K (CSV + SVG)")
    common(p_sweep, kind=False)
    p_sweep.add_argument("--kind", default="sgtk,sgnk,gntk",
                         help="comma-separated kernel kinds")
    p_sweep.add_argument("--K", default="1:5", help="comma list or lo:hi range")
    p_sweep.add_argument("--reps", type=int, default=3,
                         help="timed repetitions after one warm-up")
    p_sweep.add_argument("--out", required=True,
                         help="output prefix; writes <out>.csv and <out>.svg")
    p_sweep.set_defaults(func=cmd_sweep_k)

    p_val = sub.add_parser("dataset-validate", help="validate a dataset directory")
    p_val.add_argument("dataset", help="canonical dataset directory")
    p_val.set_defaults(func=cmd_dataset_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
