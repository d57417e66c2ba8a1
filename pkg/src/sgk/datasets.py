"""Canonical on-disk dataset format: loaders, writers, validators, splits.

A dataset is a directory with a ``meta.json`` manifest plus little-endian
binary payloads:

* ``edges.bin``            magic ``GKE1``, u64 edge count, then (u32, u32)
                           canonical (u <= v) pairs over global node ids.
* ``features.bin``         magic ``GKF1``, u32 rows, u32 cols, row-major f32.
* ``graph_indicator.bin``  magic ``GKG1``, one u32 per node (0-based graph
                           id, non-decreasing); present for graph-level
                           datasets only.

The manifest records counts, labels, class count, optional named splits,
feature provenance, and sha256 hashes of the sibling binaries. Loading
validates everything and widens features to float64; loaded bundles are
immutable in spirit (arrays are not written back).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import (
    BadMagicError,
    DatasetError,
    HashMismatchError,
    IndexRangeError,
    ManifestError,
    TruncatedFileError,
)
from .graphs import Graph

__all__ = [
    "DatasetBundle",
    "load_dataset",
    "save_dataset",
    "validate_dataset",
    "one_hot_degree_features",
    "materialize_splits",
    "row_normalize",
    "dataset_fingerprint",
]

_EDGE_MAGIC = b"GKE1"
_FEAT_MAGIC = b"GKF1"
_IND_MAGIC = b"GKG1"


@dataclass
class DatasetBundle:
    """A node-level or graph-level benchmark in memory.

    Node level: ``graphs`` holds exactly one Graph, ``labels`` one class id
    per node, ``splits`` named index lists. Graph level: one Graph and one
    label per item; splits are usually produced later by
    ``materialize_splits``.
    """

    name: str
    level: str  # "node" | "graph"
    graphs: list
    labels: np.ndarray
    num_classes: int
    splits: dict = field(default_factory=dict)
    feature_provenance: str = "native"  # "native" | "one_hot_degree"
    fingerprint: str = ""

    @property
    def num_items(self) -> int:
        return self.graphs[0].num_nodes if self.level == "node" else len(self.graphs)

    def check(self):
        if self.level not in ("node", "graph"):
            raise ManifestError(f"unknown level {self.level!r}", "meta.json")
        if self.level == "node" and len(self.graphs) != 1:
            raise ManifestError("node-level bundle must hold exactly one graph", "meta.json")
        if len(self.labels) != self.num_items:
            raise ManifestError(
                f"{len(self.labels)} labels for {self.num_items} items", "meta.json"
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise IndexRangeError(
                f"label outside [0, {self.num_classes})", "meta.json"
            )
        for g in self.graphs:
            if g.num_nodes == 0:
                raise ManifestError("dataset contains an empty graph", "meta.json")
        seen = set()
        for split_name, idx in self.splits.items():
            idx = np.asarray(idx)
            if idx.size and (idx.min() < 0 or idx.max() >= self.num_items):
                raise IndexRangeError(
                    f"split {split_name!r} index out of range", "meta.json"
                )
            dup = seen.intersection(idx.tolist())
            if dup:
                raise ManifestError(
                    f"split {split_name!r} overlaps another split", "meta.json"
                )
            seen.update(idx.tolist())
        return self


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _read_exact(buf: bytes, offset: int, count: int, filename: str) -> bytes:
    if offset + count > len(buf):
        raise TruncatedFileError(
            f"expected {count} bytes at offset {offset}, file has {len(buf)}",
            filename,
        )
    return buf[offset : offset + count]


def _read_edges(path: Path) -> np.ndarray:
    buf = path.read_bytes()
    name = path.name
    if _read_exact(buf, 0, 4, name) != _EDGE_MAGIC:
        raise BadMagicError(f"expected magic {_EDGE_MAGIC!r}", name)
    (count,) = struct.unpack_from("<Q", buf, 4)
    data = _read_exact(buf, 12, count * 8, name)
    edges = np.frombuffer(data, dtype="<u4").astype(np.int64).reshape(-1, 2)
    return edges


def _read_features(path: Path) -> np.ndarray:
    buf = path.read_bytes()
    name = path.name
    if _read_exact(buf, 0, 4, name) != _FEAT_MAGIC:
        raise BadMagicError(f"expected magic {_FEAT_MAGIC!r}", name)
    rows, cols = struct.unpack_from("<II", buf, 4)
    data = _read_exact(buf, 12, rows * cols * 4, name)
    feats = np.frombuffer(data, dtype="<f4").astype(np.float64).reshape(rows, cols)
    return feats


def _read_indicator(path: Path) -> np.ndarray:
    buf = path.read_bytes()
    name = path.name
    if _read_exact(buf, 0, 4, name) != _IND_MAGIC:
        raise BadMagicError(f"expected magic {_IND_MAGIC!r}", name)
    data = buf[4:]
    if len(data) % 4:
        raise TruncatedFileError("payload is not a whole number of u32 values", name)
    ind = np.frombuffer(data, dtype="<u4").astype(np.int64)
    if ind.size and np.any(np.diff(ind) < 0):
        raise IndexRangeError("graph ids must be non-decreasing", name)
    return ind


def dataset_fingerprint(meta: dict) -> str:
    """Stable content hash of a dataset: hash of the manifest's file hashes."""
    h = hashlib.sha256()
    for fname in sorted(meta.get("hashes", {})):
        h.update(fname.encode())
        h.update(meta["hashes"][fname].encode())
    return h.hexdigest()


def load_dataset(path) -> DatasetBundle:
    """Load and fully validate a canonical dataset directory."""
    root = Path(path)
    meta_path = root / "meta.json"
    if not meta_path.is_file():
        raise ManifestError("manifest not found", str(meta_path))
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"unparseable manifest: {exc}", "meta.json") from None

    for key in ("name", "level", "num_nodes", "num_classes", "labels", "hashes"):
        if key not in meta:
            raise ManifestError(f"manifest missing key {key!r}", "meta.json")

    for fname, expected in meta["hashes"].items():
        fpath = root / fname
        if not fpath.is_file():
            raise ManifestError("hashed payload missing", fname)
        actual = _sha256(fpath)
        if actual != expected:
            raise HashMismatchError(
                f"sha256 {actual[:12]}... != manifest {expected[:12]}...", fname
            )

    edges = _read_edges(root / "edges.bin")
    feats = _read_features(root / "features.bin")
    num_nodes = int(meta["num_nodes"])
    if feats.shape[0] != num_nodes:
        raise ManifestError(
            f"features.bin has {feats.shape[0]} rows, manifest says {num_nodes}",
            "features.bin",
        )
    if edges.size and edges.max() >= num_nodes:
        raise IndexRangeError(
            f"edge endpoint {int(edges.max())} >= {num_nodes}", "edges.bin"
        )

    labels = np.asarray(meta["labels"], dtype=np.int64)
    level = meta["level"]

    if level == "graph":
        indicator = _read_indicator(root / "graph_indicator.bin")
        if indicator.size != num_nodes:
            raise ManifestError(
                f"graph_indicator.bin covers {indicator.size} nodes, manifest "
                f"says {num_nodes}",
                "graph_indicator.bin",
            )
        graphs = _split_by_indicator(edges, feats, indicator)
    else:
        graphs = [Graph(num_nodes, edges, feats)]

    bundle = DatasetBundle(
        name=meta["name"],
        level=level,
        graphs=graphs,
        labels=labels,
        num_classes=int(meta["num_classes"]),
        splits={k: np.asarray(v, dtype=np.int64) for k, v in meta.get("splits", {}).items()},
        feature_provenance=meta.get("feature_provenance", "native"),
        fingerprint=dataset_fingerprint(meta),
    )
    return bundle.check()


def _split_by_indicator(edges, feats, indicator) -> list:
    """Partition global nodes into per-graph ``Graph`` objects."""
    num_graphs = int(indicator.max()) + 1 if indicator.size else 0
    starts = np.searchsorted(indicator, np.arange(num_graphs))
    ends = np.searchsorted(indicator, np.arange(num_graphs), side="right")
    if edges.size:
        owner = indicator[edges[:, 0]]
        cross = indicator[edges[:, 1]] != owner
        if np.any(cross):
            bad = int(np.flatnonzero(cross)[0])
            raise IndexRangeError(
                f"edge {bad} connects two different graphs", "edges.bin"
            )
        order = np.argsort(owner, kind="stable")
        edges_sorted = edges[order]
        owner_sorted = owner[order]
        e_starts = np.searchsorted(owner_sorted, np.arange(num_graphs))
        e_ends = np.searchsorted(owner_sorted, np.arange(num_graphs), side="right")
    graphs = []
    for gid in range(num_graphs):
        lo, hi = int(starts[gid]), int(ends[gid])
        local_edges = (
            edges_sorted[e_starts[gid] : e_ends[gid]] - lo
            if edges.size
            else np.empty((0, 2), dtype=np.int64)
        )
        graphs.append(Graph(hi - lo, local_edges, feats[lo:hi]))
    return graphs


def save_dataset(bundle: DatasetBundle, path) -> dict:
    """Write a bundle in canonical form; returns the manifest dict.

    Output is byte-stable: edges are canonicalized and sorted, the manifest
    is serialized with sorted keys, and hashes cover the binary payloads.
    A load -> save -> load round trip is bit-identical.
    """
    bundle.check()
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)

    if bundle.level == "graph":
        sizes = [g.num_nodes for g in bundle.graphs]
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        indicator = np.repeat(np.arange(len(sizes)), sizes)
        feats = np.vstack([g.features for g in bundle.graphs])
        all_edges = [
            g.edges + offsets[i] for i, g in enumerate(bundle.graphs) if g.edges.size
        ]
        edges = (
            np.vstack(all_edges) if all_edges else np.empty((0, 2), dtype=np.int64)
        )
        num_nodes = int(offsets[-1])
    else:
        g = bundle.graphs[0]
        edges, feats, num_nodes = g.edges, g.features, g.num_nodes
        indicator = None

    order = np.lexsort((edges[:, 1], edges[:, 0])) if edges.size else []
    edges = edges[order] if edges.size else edges

    (root / "edges.bin").write_bytes(
        _EDGE_MAGIC
        + struct.pack("<Q", edges.shape[0])
        + edges.astype("<u4").tobytes()
    )
    (root / "features.bin").write_bytes(
        _FEAT_MAGIC
        + struct.pack("<II", feats.shape[0], feats.shape[1])
        + feats.astype("<f4").tobytes()
    )
    hashes = {
        "edges.bin": _sha256(root / "edges.bin"),
        "features.bin": _sha256(root / "features.bin"),
    }
    if indicator is not None:
        (root / "graph_indicator.bin").write_bytes(
            _IND_MAGIC + indicator.astype("<u4").tobytes()
        )
        hashes["graph_indicator.bin"] = _sha256(root / "graph_indicator.bin")

    meta = {
        "name": bundle.name,
        "level": bundle.level,
        "num_nodes": num_nodes,
        "num_edges": int(edges.shape[0]),
        "num_graphs": len(bundle.graphs) if bundle.level == "graph" else 1,
        "num_classes": bundle.num_classes,
        "feature_dim": int(feats.shape[1]),
        "feature_provenance": bundle.feature_provenance,
        "labels": [int(v) for v in bundle.labels],
        "splits": {k: [int(i) for i in v] for k, v in bundle.splits.items()},
        "hashes": hashes,
    }
    meta_path = root / "meta.json"
    meta_path.write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return meta


def validate_dataset(path) -> list:
    """Return a list of problem strings; empty means the directory is valid."""
    problems = []
    try:
        bundle = load_dataset(path)
    except DatasetError as exc:
        return [f"{type(exc).__name__}: {exc}"]
    meta = json.loads((Path(path) / "meta.json").read_text())
    recomputed = {
        "num_edges": sum(int(g.edges.shape[0]) for g in bundle.graphs),
        "num_graphs": len(bundle.graphs) if bundle.level == "graph" else 1,
        "feature_dim": bundle.graphs[0].feature_dim,
    }
    for key, actual in recomputed.items():
        if key in meta and int(meta[key]) != actual:
            problems.append(
                f"ManifestError: meta.json: {key} is {meta[key]}, payload has {actual}"
            )
    return problems


def one_hot_degree_features(graphs) -> list:
    """Replace features with one-hot degree indicators, shared dimension.

    The dimension is (max degree over the entire collection) + 1; a node of
    degree g gets the indicator at position g. Degrees exclude self-loops.
    """
    graphs = list(graphs)
    degrees = [g.degrees() for g in graphs]
    max_degree = max((int(d.max()) for d in degrees if d.size), default=0)
    dim = max_degree + 1
    out = []
    for g, deg in zip(graphs, degrees):
        feats = np.zeros((g.num_nodes, dim))
        feats[np.arange(g.num_nodes), deg] = 1.0
        out.append(g.with_features(feats))
    return out


def row_normalize(features: np.ndarray) -> np.ndarray:
    """Scale each row to unit L1 mass; all-zero rows are left unchanged."""
    features = np.asarray(features, dtype=np.float64)
    sums = np.abs(features).sum(axis=1, keepdims=True)
    sums[sums == 0] = 1.0
    return features / sums


def materialize_splits(bundle: DatasetBundle, rule: str, seed: int = 0, folds: int = 10):
    """Produce deterministic index splits under a named rule.

    "public": pass through the splits shipped in the manifest.
    "first20_last100": per class, the 20 smallest item ids train and the
    100 largest test (ascending id order is the only reproducible reading
    of first/last).
    "k_fold": seed-shuffled fold assignment, returned as a list of
    (train, test) pairs.
    """
    labels = np.asarray(bundle.labels)
    if rule == "public":
        if not bundle.splits:
            raise DatasetError(
                f"dataset {bundle.name!r} ships no public splits", "meta.json"
            )
        return dict(bundle.splits)
    if rule == "first20_last100":
        train, test = [], []
        for cls in range(bundle.num_classes):
            members = np.flatnonzero(labels == cls)
            if members.size < 120:
                raise DatasetError(
                    f"class {cls} has {members.size} items; first20_last100 "
                    "needs at least 120"
                )
            train.extend(members[:20].tolist())
            test.extend(members[-100:].tolist())
        return {"train": np.asarray(train), "test": np.asarray(test)}
    if rule == "k_fold":
        rng = np.random.default_rng(seed)
        perm = rng.permutation(bundle.num_items)
        chunks = np.array_split(perm, folds)
        return [
            (np.sort(np.concatenate(chunks[:i] + chunks[i + 1 :])), np.sort(chunks[i]))
            for i in range(folds)
        ]
    raise ValueError(f"unknown split rule {rule!r}")
