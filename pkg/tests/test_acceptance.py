"""Acceptance suite: one test per release criterion, at its stated tolerance.

Each test prints a single ``[ACCEPTANCE] <criterion>: PASS`` line (run with
``pytest tests/test_acceptance.py -v -s``). Benchmarks that require the real
converted datasets (Cora, CiteSeer, MUTAG) skip with instructions when the
data directory is absent; the complexity-shape criterion additionally runs
on a synthetic ensemble with matched statistics so the scaling claim is
always exercised.
"""

import statistics
import subprocess
import sys
import time

import numpy as np
import pytest

from sgk import (
    CovTriple,
    ActivationKind,
    DatasetBundle,
    Graph,
    KernelHyperParams,
    KernelRidgeClassifier,
    cross_validate,
    gram_matrix,
    mc_activation_oracle,
    node_kernel_matrix,
    one_hot_degree_features,
    relu_deriv_expectation,
    relu_pair_expectation,
    row_normalize,
    save_dataset,
    load_dataset,
)
from sgk.classifiers import DEFAULT_LAMBDA_GRID
from sgk.expectations import augmented_covariance, erf_pair_expectation

from conftest import canonical_dataset, random_graph
from oracles import gntk_dense_oracle, sgnk_scalar_oracle, sgtk_dense_oracle


def report(name: str, detail: str = ""):
    print(f"\n[ACCEPTANCE] {name}: PASS {detail}".rstrip())


# ---------------------------------------------------------------------------
# Criterion 1: closed forms vs Monte-Carlo oracle (100 triples, 3 sigma)
# ---------------------------------------------------------------------------


def test_closed_form_vs_monte_carlo_oracle():
    start = time.perf_counter()
    master = 1
    rng = np.random.default_rng(master)
    worst = 0.0
    for i in range(100):
        sii = rng.uniform(0.05, 3.0)
        sjj = rng.uniform(0.05, 3.0)
        rho = rng.uniform(-0.95, 0.95)
        c = CovTriple(sii, sjj, rho * np.sqrt(sii * sjj))

        mean, se = mc_activation_oracle(
            c, ActivationKind.RELU, "value", 1_000_000, seed=master * 1000 + i
        )
        z = abs(relu_pair_expectation(*c) - mean) / se
        worst = max(worst, z)
        assert z < 3.0, f"relu value off by {z:.2f} sigma at {c}"

        mean, se = mc_activation_oracle(
            c, ActivationKind.RELU, "derivative", 1_000_000, seed=master * 1000 + i
        )
        z = abs(relu_deriv_expectation(*c) - mean) / se
        worst = max(worst, z)
        assert z < 3.0, f"relu derivative off by {z:.2f} sigma at {c}"

        xi = rng.standard_normal(3)
        xj = rng.standard_normal(3)
        ca = augmented_covariance(xi, xj)
        mean, se = mc_activation_oracle(
            ca, ActivationKind.ERF, "value", 1_000_000, seed=master * 1000 + 500 + i
        )
        z = abs(float(erf_pair_expectation(*ca)) - mean) / se
        worst = max(worst, z)
        assert z < 3.0, f"erf pair kernel off by {z:.2f} sigma at {ca}"

    elapsed = time.perf_counter() - start
    assert elapsed < 120, f"oracle comparison took {elapsed:.1f}s (budget 120s)"
    report(
        "closed-form vs Monte-Carlo oracle",
        f"(100 triples x 3 forms, max |z| = {worst:.2f}, {elapsed:.1f}s)",
    )


# ---------------------------------------------------------------------------
# Criterion 2: Gram validity on 50 seeded random graphs
# ---------------------------------------------------------------------------


def test_gram_validity_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(42)
    graphs = [random_graph(rng, max_nodes=12, dim=int(rng.integers(1, 6))) for _ in range(50)]
    # a Gram needs one shared feature dimension
    dim = 5
    graphs = [
        g.with_features(np.pad(g.features, ((0, 0), (0, dim - g.feature_dim))))
        for g in graphs
    ]
    hp = KernelHyperParams(k=2, beta=0.5, gntk_blocks=2)

    for kind in ("sgtk", "sgnk", "gntk"):
        gram = gram_matrix(graphs, kind, hp)
        v = gram.values
        scale = np.abs(v).max()
        assert np.abs(v - v.T).max() <= 1e-10 * scale, f"{kind} Gram asymmetric"
        eigs = np.linalg.eigvalsh(v)
        assert eigs[0] >= -1e-8 * eigs[-1], (
            f"{kind} min eig {eigs[0]:.3e} vs max {eigs[-1]:.3e}"
        )
        perm_graphs = [g.permute(rng.permutation(g.num_nodes)) for g in graphs]
        perm_gram = gram_matrix(perm_graphs, kind, hp)
        rel = np.abs(perm_gram.values - v).max() / scale
        assert rel <= 1e-10, f"{kind} not permutation invariant: rel {rel:.3e}"

    elapsed = time.perf_counter() - start
    assert elapsed < 60, f"Gram validity suite took {elapsed:.1f}s (budget 60s)"
    report("Gram validity suite", f"(50 graphs x 3 kinds, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# Criterion 3: dense-oracle equivalence on 20 random pairs
# ---------------------------------------------------------------------------


def test_dense_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    for _ in range(20):
        g1 = random_graph(rng, max_nodes=6, dim=3)
        g2 = random_graph(rng, max_nodes=6, dim=3)

        hp = KernelHyperParams(k=2, beta=0.1)
        from sgk import sgtk_pair, sgnk_pair, gntk_pair

        nk, _ = sgtk_pair(g1, g2, hp)
        np.testing.assert_allclose(
            nk, sgtk_dense_oracle(g1, g2, 2, 0.1), atol=1e-10, rtol=0
        )

        hp_g = KernelHyperParams(gntk_blocks=2)
        nk, _ = gntk_pair(g1, g2, hp_g)
        np.testing.assert_allclose(
            nk, gntk_dense_oracle(g1, g2, 2), atol=1e-10, rtol=0
        )

        hp_s = KernelHyperParams(k=3, beta=0.0)
        nk, _ = sgnk_pair(g1, g2, hp_s)
        np.testing.assert_allclose(
            nk, sgnk_scalar_oracle(g1, g2, 3), atol=1e-12, rtol=0
        )
    elapsed = time.perf_counter() - start
    assert elapsed < 60, f"oracle equivalence took {elapsed:.1f}s (budget 60s)"
    report("dense-oracle equivalence", f"(20 pairs, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# Criterion 4: node-level accuracy reproduction (public splits, SGNK + KRR)
# ---------------------------------------------------------------------------


# Converted-benchmark statistics, re-checked whenever the data is present.
_EXPECTED_STATS = {
    "cora": {"items": 2708, "classes": 7},
    "citeseer": {"items": 3327, "classes": 6},
    "mutag": {"items": 188, "classes": 2},
}


def _load_benchmark(name: str):
    bundle = load_dataset(canonical_dataset(name))
    expected = _EXPECTED_STATS[name]
    assert bundle.num_items == expected["items"], (
        f"{name}: {bundle.num_items} items, expected {expected['items']}"
    )
    assert bundle.num_classes == expected["classes"], (
        f"{name}: {bundle.num_classes} classes, expected {expected['classes']}"
    )
    return bundle


def _node_accuracy(dataset_name: str):
    bundle = _load_benchmark(dataset_name)
    graph = bundle.graphs[0].with_features(row_normalize(bundle.graphs[0].features))
    labels = bundle.labels
    train = np.asarray(bundle.splits["train"])
    val = np.asarray(bundle.splits["val"])
    test = np.asarray(bundle.splits["test"])

    best = (-1.0, None, None)
    for k in (1, 2, 3, 4, 5):
        hp = KernelHyperParams(k=k, beta=0.0, activation=ActivationKind.ERF)
        k_train = node_kernel_matrix(graph, "sgnk", hp, train, train)
        k_val = node_kernel_matrix(graph, "sgnk", hp, val, train)
        k_test = node_kernel_matrix(graph, "sgnk", hp, test, train)
        for lam in DEFAULT_LAMBDA_GRID:
            model = KernelRidgeClassifier(alpha=lam).fit(k_train, labels[train])
            val_acc = float(np.mean(model.predict(k_val) == labels[val]))
            if val_acc > best[0]:
                test_acc = float(np.mean(model.predict(k_test) == labels[test]))
                best = (val_acc, test_acc, (k, lam))
    return best[1], best[2]


@pytest.mark.parametrize(
    "dataset,threshold",
    [("cora", 81.0), ("citeseer", 70.5)],
)
def test_node_accuracy_reproduction(dataset, threshold):
    start = time.perf_counter()
    acc, chosen = _node_accuracy(dataset)
    elapsed = time.perf_counter() - start
    assert elapsed < 120, f"{dataset} end-to-end took {elapsed:.1f}s (budget 120s)"
    assert acc * 100 >= threshold, (
        f"{dataset}: SGNK+KRR accuracy {acc * 100:.2f}% < {threshold}% "
        f"(chosen K={chosen[0]}, lambda={chosen[1]:.3g})"
    )
    report(
        f"node accuracy on {dataset}",
        f"({acc * 100:.2f}% >= {threshold}%, K={chosen[0]}, "
        f"lambda={chosen[1]:.3g}, {elapsed:.1f}s)",
    )


# ---------------------------------------------------------------------------
# Criterion 5: graph-level accuracy reproduction (MUTAG, 10-fold SVM)
# ---------------------------------------------------------------------------


def _mutag_cv(kind: str):
    bundle = _load_benchmark("mutag")
    graphs = one_hot_degree_features(bundle.graphs)
    best = (-1.0, None)
    for k in (1, 2, 3, 4, 5):
        hp = KernelHyperParams(k=k, beta=1.0, gntk_blocks=k)
        gram = gram_matrix(graphs, kind, hp)
        result = cross_validate(gram.values, bundle.labels, "svm", folds=10, seed=0)
        if result.mean_accuracy > best[0]:
            best = (result.mean_accuracy, (k, result))
    return best


@pytest.mark.parametrize("kind,threshold", [("sgnk", 80.5), ("sgtk", 79.1)])
def test_graph_accuracy_reproduction_mutag(kind, threshold):
    start = time.perf_counter()
    acc, (k, result) = _mutag_cv(kind)
    elapsed = time.perf_counter() - start
    assert elapsed < 600, f"MUTAG {kind} took {elapsed:.1f}s (budget 600s)"
    assert acc * 100 >= threshold, (
        f"MUTAG {kind}+SVM 10-fold mean accuracy {acc * 100:.2f}% < {threshold}%"
    )
    report(
        f"graph accuracy on MUTAG ({kind})",
        f"({acc * 100:.2f}% +/- {result.std_accuracy * 100:.1f} >= {threshold}%, "
        f"K={k}, {elapsed:.1f}s)",
    )


# ---------------------------------------------------------------------------
# Criterion 6: complexity shape (Gram time vs K)
# ---------------------------------------------------------------------------


def _median_gram_seconds(graphs, kind, k, reps=3):
    hp = KernelHyperParams(k=k, beta=1.0, gntk_blocks=max(1, k))
    times = []
    for rep in range(reps + 1):  # one warm-up
        start = time.perf_counter()
        gram_matrix(graphs, kind, hp)
        elapsed = time.perf_counter() - start
        if rep > 0:
            times.append(elapsed)
    return statistics.median(times)


def _assert_complexity_shape(graphs, label):
    t = {
        kind: {k: _median_gram_seconds(graphs, kind, k) for k in (1, 3, 5)}
        for kind in ("sgtk", "sgnk", "gntk")
    }
    gntk_ratio = t["gntk"][5] / t["gntk"][1]
    sgtk_ratio = max(t["sgtk"].values()) / min(t["sgtk"].values())
    sgnk_ratio = max(t["sgnk"].values()) / min(t["sgnk"].values())

    assert gntk_ratio >= 2.0, f"{label}: GNTK K5/K1 ratio {gntk_ratio:.2f} < 2.0"
    assert sgtk_ratio <= 1.25, f"{label}: SGTK max/min ratio {sgtk_ratio:.2f} > 1.25"
    assert sgnk_ratio <= 1.25, f"{label}: SGNK max/min ratio {sgnk_ratio:.2f} > 1.25"
    assert t["sgnk"][3] < t["sgtk"][3] < t["gntk"][3], (
        f"{label}: expected SGNK < SGTK < GNTK at K=3, got "
        f"{t['sgnk'][3]:.3f}, {t['sgtk'][3]:.3f}, {t['gntk'][3]:.3f}"
    )
    return t, gntk_ratio, sgtk_ratio, sgnk_ratio


def _degree_featured_ensemble(rng, count, mean_nodes=18, p_edge=0.13):
    graphs = []
    for _ in range(count):
        n = int(np.clip(rng.poisson(mean_nodes), 6, 28))
        mask = rng.random((n, n)) < p_edge
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if mask[i, j]]
        graphs.append(Graph(n, np.asarray(pairs, dtype=np.int64).reshape(-1, 2), np.zeros((n, 0))))
    return one_hot_degree_features(graphs)


def test_complexity_shape_synthetic_ensemble():
    rng = np.random.default_rng(99)
    graphs = _degree_featured_ensemble(rng, count=60)
    t, gr, str_, snr = _assert_complexity_shape(graphs, "synthetic ensemble")
    report(
        "complexity shape (synthetic ensemble)",
        f"(GNTK K5/K1 {gr:.1f} >= 2, SGTK {str_:.2f} <= 1.25, "
        f"SGNK {snr:.2f} <= 1.25, K=3 order "
        f"{t['sgnk'][3]:.3f} < {t['sgtk'][3]:.3f} < {t['gntk'][3]:.3f}s)",
    )


def test_complexity_shape_mutag():
    bundle = _load_benchmark("mutag")
    graphs = one_hot_degree_features(bundle.graphs)
    t, gr, str_, snr = _assert_complexity_shape(graphs, "MUTAG")
    report(
        "complexity shape (MUTAG)",
        f"(GNTK K5/K1 {gr:.1f} >= 2, SGTK {str_:.2f} <= 1.25, "
        f"SGNK {snr:.2f} <= 1.25)",
    )


# ---------------------------------------------------------------------------
# Criterion 7: byte-identical Gram files across thread counts
# ---------------------------------------------------------------------------


def test_kernel_files_identical_across_thread_counts(tmp_path):
    rng = np.random.default_rng(5)
    graphs = _degree_featured_ensemble(rng, count=12)
    bundle = DatasetBundle(
        name="determinism-probe",
        level="graph",
        graphs=graphs,
        labels=np.zeros(len(graphs), dtype=np.int64),
        num_classes=1,
        feature_provenance="one_hot_degree",
    )
    data_dir = tmp_path / "probe"
    save_dataset(bundle, data_dir)

    blobs = []
    for threads in ("1", "3", "7"):
        out = tmp_path / f"gram-{threads}.gkm"
        proc = subprocess.run(
            [
                sys.executable, "-m", "sgk.cli", "kernel",
                "--dataset", str(data_dir), "--kind", "sgtk", "--K", "2",
                "--threads", threads, "--out", str(out),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1] == blobs[2]
    report(
        "determinism across thread counts",
        "(gk kernel with --threads 1/3/7: byte-identical files)",
    )
