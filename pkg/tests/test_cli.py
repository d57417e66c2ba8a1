import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np

from sgk import DatasetBundle, Graph, save_dataset
from sgk.cli import main


def make_graph_dataset(tmp_path, rng, count=10, sep=True):
    """Graph-level dataset whose classes are separable by density."""
    graphs, labels = [], []
    for i in range(count):
        label = i % 2
        n = int(rng.integers(5, 9))
        p = 0.8 if (label == 0 and sep) else 0.25
        edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < p]
        if not edges:
            edges = [(0, 1)]
        graphs.append(Graph(n, np.asarray(edges, dtype=np.int64), np.zeros((n, 0))))
        labels.append(label)
    bundle = DatasetBundle(
        name="toy-graph",
        level="graph",
        graphs=graphs,
        labels=np.asarray(labels),
        num_classes=2,
        feature_provenance="one_hot_degree",
    )
    path = tmp_path / "toy-graph"
    save_dataset(bundle, path)
    return path


def make_node_dataset(tmp_path, rng, n=40):
    """Node-level dataset with two feature-separated communities."""
    labels = np.array([0] * (n // 2) + [1] * (n - n // 2))
    feats = rng.standard_normal((n, 3)) * 0.3
    feats[labels == 0, 0] += 2.0
    feats[labels == 1, 1] += 2.0
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            p = 0.2 if labels[i] == labels[j] else 0.02
            if rng.random() < p:
                edges.append((i, j))
    perm = rng.permutation(n)
    bundle = DatasetBundle(
        name="toy-node",
        level="node",
        graphs=[Graph(n, np.asarray(edges, dtype=np.int64), feats)],
        labels=labels,
        num_classes=2,
        splits={"train": perm[:12], "val": perm[12:20], "test": perm[20:]},
    )
    path = tmp_path / "toy-node"
    save_dataset(bundle, path)
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestKernelCommand:
    def test_writes_gram_and_csv(self, tmp_path, rng, capsys):
        data = make_graph_dataset(tmp_path, rng)
        out = tmp_path / "m.gkm"
        code = run_cli("kernel", "--dataset", data, "--kind", "sgnk", "--K", "2",
                       "--out", out)
        assert code == 0
        assert out.is_file() and out.with_suffix(".gkm.csv").is_file()
        assert "wall_time_s" in capsys.readouterr().out

    def test_missing_dataset_exits_2(self, tmp_path, capsys):
        code = run_cli("kernel", "--dataset", tmp_path / "absent", "--out",
                       tmp_path / "m.gkm")
        assert code == 2

    def test_bad_kind_exits_2(self, tmp_path, rng):
        data = make_graph_dataset(tmp_path, rng)
        code = run_cli("kernel", "--dataset", data, "--kind", "wl",
                       "--out", tmp_path / "m.gkm")
        assert code == 2

    def test_repeat_runs_byte_identical(self, tmp_path, rng):
        data = make_graph_dataset(tmp_path, rng)
        a, b = tmp_path / "a.gkm", tmp_path / "b.gkm"
        assert run_cli("kernel", "--dataset", data, "--kind", "sgtk", "--out", a) == 0
        assert run_cli("kernel", "--dataset", data, "--kind", "sgtk", "--out", b) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_threads_do_not_change_bytes_subprocess(self, tmp_path, rng):
        data = make_graph_dataset(tmp_path, rng)
        outputs = []
        for threads in ("1", "4"):
            out = tmp_path / f"t{threads}.gkm"
            proc = subprocess.run(
                [sys.executable, "-m", "sgk.cli", "kernel", "--dataset", str(data),
                 "--kind", "sgnk", "--K", "3", "--threads", threads,
                 "--out", str(out)],
                capture_output=True, text=True,
            )
            assert proc.returncode == 0, proc.stderr
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_node_level_kernel_file(self, tmp_path, rng):
        data = make_node_dataset(tmp_path, rng, n=25)
        out = tmp_path / "node.gkm"
        code = run_cli("kernel", "--dataset", data, "--kind", "sgnk", "--K", "2",
                       "--out", out)
        assert code == 0
        from sgk import load_gram

        gram = load_gram(out)
        assert gram.item_level == "node"
        assert gram.size == 25

    def test_mean_readout_flag(self, tmp_path, rng):
        data = make_graph_dataset(tmp_path, rng, count=6)
        a, b = tmp_path / "sum.gkm", tmp_path / "mean.gkm"
        assert run_cli("kernel", "--dataset", data, "--kind", "sgnk", "--out", a) == 0
        assert run_cli("kernel", "--dataset", data, "--kind", "sgnk",
                       "--readout", "mean", "--out", b) == 0
        from sgk import load_gram

        assert load_gram(a).values[0, 1] != load_gram(b).values[0, 1]

    def test_gk_threads_env_override(self, tmp_path, rng):
        data = make_graph_dataset(tmp_path, rng)
        out = tmp_path / "env.gkm"
        env = dict(os.environ, GK_THREADS="2")
        proc = subprocess.run(
            [sys.executable, "-m", "sgk.cli", "kernel", "--dataset", str(data),
             "--kind", "sgnk", "--threads", "8", "--out", str(out)],
            capture_output=True, text=True, env=env,
        )
        assert proc.returncode == 0, proc.stderr
        assert out.is_file()


class TestClassifyCommand:
    def test_graph_level_svm(self, tmp_path, rng, capsys):
        data = make_graph_dataset(tmp_path, rng, count=14)
        out = tmp_path / "acc.csv"
        code = run_cli("classify", "--dataset", data, "--kind", "sgnk",
                       "--classifier", "svm", "--folds", "3", "--K", "2",
                       "--out", out)
        assert code == 0
        text = out.read_text()
        assert "mean_acc" in text
        rows = [l for l in text.splitlines() if l and not l.startswith("#")]
        assert len(rows) == 2  # header + one K row

    def test_node_level_krr_public_split(self, tmp_path, rng, capsys):
        data = make_node_dataset(tmp_path, rng)
        code = run_cli("classify", "--dataset", data, "--kind", "sgnk",
                       "--classifier", "krr", "--split", "public",
                       "--K-grid", "1:2")
        assert code == 0
        out = capsys.readouterr().out
        assert "best:" in out

    def test_node_level_first20_last100(self, tmp_path, rng, capsys):
        # large enough for 120 items per class; no val split, so grid
        # selection falls back to inner CV on the training block
        n = 280
        labels = np.array([0, 1] * (n // 2))
        feats = rng.standard_normal((n, 2))
        feats[labels == 0, 0] += 2.5
        feats[labels == 1, 1] += 2.5
        bundle = DatasetBundle(
            name="toy-split",
            level="node",
            graphs=[Graph(n, [(i, i + 1) for i in range(n - 1)], feats)],
            labels=labels,
            num_classes=2,
        )
        path = tmp_path / "toy-split"
        save_dataset(bundle, path)
        code = run_cli("classify", "--dataset", path, "--kind", "sgtk",
                       "--classifier", "krr", "--split", "first20_last100",
                       "--K", "1")
        assert code == 0
        assert "best:" in capsys.readouterr().out

    def test_graph_level_gntk(self, tmp_path, rng, capsys):
        data = make_graph_dataset(tmp_path, rng, count=10)
        code = run_cli("classify", "--dataset", data, "--kind", "gntk",
                       "--classifier", "krr", "--folds", "2", "--K", "2")
        assert code == 0
        assert "best:" in capsys.readouterr().out

    def test_gram_reuse_roundtrip(self, tmp_path, rng, capsys):
        data = make_graph_dataset(tmp_path, rng, count=12)
        gram_path = tmp_path / "m.gkm"
        assert run_cli("kernel", "--dataset", data, "--kind", "sgnk",
                       "--out", gram_path) == 0
        code = run_cli("classify", "--dataset", data, "--gram", gram_path,
                       "--classifier", "svm", "--folds", "3")
        assert code == 0

    def test_mismatched_gram_exits_2(self, tmp_path, rng):
        data_a = make_graph_dataset(tmp_path, rng, count=12)
        rng2 = np.random.default_rng(4)
        data_b = make_graph_dataset(tmp_path / "other", rng2, count=6)
        gram_path = tmp_path / "a.gkm"
        assert run_cli("kernel", "--dataset", data_a, "--kind", "sgnk",
                       "--out", gram_path) == 0
        code = run_cli("classify", "--dataset", data_b, "--gram", gram_path,
                       "--classifier", "svm", "--folds", "2")
        assert code == 2

    def test_csv_provenance_header(self, tmp_path, rng):
        data = make_graph_dataset(tmp_path, rng, count=10)
        out = tmp_path / "acc.csv"
        run_cli("classify", "--dataset", data, "--kind", "sgtk",
                "--classifier", "krr", "--folds", "2", "--K", "1",
                "--seed", "5", "--out", out)
        head = out.read_text().splitlines()[:6]
        joined = "\n".join(head)
        assert "fingerprint=" in joined and "seed=5" in joined and "grid=" in joined


class TestSweepCommand:
    def test_rows_and_svg(self, tmp_path, rng):
        data = make_graph_dataset(tmp_path, rng, count=6)
        out = tmp_path / "sweep"
        code = run_cli("sweep-k", "--dataset", data, "--kind", "sgtk,sgnk,gntk",
                       "--K", "1:5", "--reps", "1", "--out", out)
        assert code == 0
        rows = [
            l for l in (tmp_path / "sweep.csv").read_text().splitlines()
            if l and not l.startswith("#") and not l.startswith("dataset")
        ]
        assert len(rows) == 15  # kinds x K values
        svg = (tmp_path / "sweep.svg").read_text()
        ET.fromstring(svg)  # well-formed XML
        assert "polyline" in svg

    def test_node_level_sweep(self, tmp_path, rng):
        data = make_node_dataset(tmp_path, rng, n=25)
        out = tmp_path / "nodesweep"
        code = run_cli("sweep-k", "--dataset", data, "--kind", "sgnk,sgtk",
                       "--K", "1,2", "--reps", "1", "--out", out)
        assert code == 0
        text = (tmp_path / "nodesweep.csv").read_text()
        assert "row_normalize=True" in text
        rows = [l for l in text.splitlines()
                if l and not l.startswith("#") and not l.startswith("dataset")]
        assert len(rows) == 4

    def test_empty_k_range_exits_2(self, tmp_path, rng):
        data = make_graph_dataset(tmp_path, rng, count=4)
        code = run_cli("sweep-k", "--dataset", data, "--K", "", "--reps", "1",
                       "--out", tmp_path / "s")
        assert code == 2


class TestDatasetValidateCommand:
    def test_valid_dataset(self, tmp_path, rng, capsys):
        data = make_graph_dataset(tmp_path, rng)
        assert run_cli("dataset-validate", data) == 0
        stats = json.loads(capsys.readouterr().out)
        assert stats["items"] == 10 and stats["level"] == "graph"

    def test_corrupted_dataset_exits_2(self, tmp_path, rng, capsys):
        data = make_graph_dataset(tmp_path, rng)
        payload = bytearray((data / "edges.bin").read_bytes())
        payload[-1] ^= 0x01
        (data / "edges.bin").write_bytes(bytes(payload))
        assert run_cli("dataset-validate", data) == 2
        assert "HashMismatch" in capsys.readouterr().err
