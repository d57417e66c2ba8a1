"""Shared fixtures: random graph factories and canonical dataset discovery."""

import os
from pathlib import Path

import numpy as np
import pytest

from sgk import Graph

DATA_ENV = "GK_DATA"
DEFAULT_DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def data_root() -> Path:
    return Path(os.environ.get(DATA_ENV, DEFAULT_DATA_DIR))


def canonical_dataset(name: str) -> Path:
    """Path of a converted benchmark dataset, or skip the test if absent."""
    path = data_root() / name
    if not (path / "meta.json").is_file():
        pytest.skip(
            f"canonical dataset {name!r} not found under {data_root()} "
            f"(network-restricted environments cannot fetch the upstream "
            f"archives; run the converters in converters/ against the "
            f"upstream files and point {DATA_ENV} at the output)"
        )
    return path


def random_graph(rng, max_nodes=10, dim=3, p_edge=0.35, min_nodes=2) -> Graph:
    n = int(rng.integers(min_nodes, max_nodes + 1))
    mask = rng.random((n, n)) < p_edge
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if mask[i, j]]
    feats = rng.standard_normal((n, dim))
    return Graph(n, np.asarray(pairs, dtype=np.int64).reshape(-1, 2), feats)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def graph_factory():
    return random_graph
