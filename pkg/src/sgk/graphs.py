"""Graph container, degree-normalized adjacency, and K-step sparse propagation.

The propagation operator is the self-loop-augmented, symmetrically
degree-normalized adjacency D^{-1/2} (A + I) D^{-1/2}. Applying it K times to
node features (or from both sides to a covariance matrix) enlarges each
node's receptive field without any nonlinearity; this is the only structural
ingredient the kernels consume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import EmptyGraphError

__all__ = [
    "Graph",
    "normalize_adjacency",
    "propagate",
    "propagate_covariance",
]


def _canonical_edges(edges, num_nodes: int) -> np.ndarray:
    """Return edges as a unique, sorted (E, 2) int64 array with u <= v."""
    arr = np.asarray(edges, dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"edge list must have shape (E, 2), got {arr.shape}")
    if arr.min() < 0 or arr.max() >= num_nodes:
        raise ValueError(
            f"edge endpoint out of range [0, {num_nodes}): "
            f"min={arr.min()}, max={arr.max()}"
        )
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    return np.unique(np.stack([lo, hi], axis=1), axis=0)


@dataclass(frozen=True)
class Graph:
    """Undirected graph with dense node features.

    Edges are canonicalized on construction: endpoints swapped into u <= v
    order, duplicates dropped, rows sorted. Node ids are 0-based. ``features``
    must have one row per node; a (num_nodes, 0) matrix is the featureless
    sentinel used before synthetic degree features are attached. Instances
    are immutable and safe to share across threads.
    """

    num_nodes: int
    edges: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        if self.num_nodes < 0:
            raise ValueError("num_nodes must be non-negative")
        edges = _canonical_edges(self.edges, self.num_nodes)
        features = np.array(self.features, dtype=np.float64, order="C", copy=True)
        if features.ndim != 2:
            raise ValueError(f"features must be 2-D, got ndim={features.ndim}")
        if features.shape[0] != self.num_nodes:
            raise ValueError(
                f"features has {features.shape[0]} rows for {self.num_nodes} nodes"
            )
        edges.setflags(write=False)
        features.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "features", features)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def degrees(self) -> np.ndarray:
        """Per-node degree, counting each undirected edge once and no self-loops."""
        deg = np.zeros(self.num_nodes, dtype=np.int64)
        if self.edges.size:
            mask = self.edges[:, 0] != self.edges[:, 1]
            np.add.at(deg, self.edges[mask, 0], 1)
            np.add.at(deg, self.edges[mask, 1], 1)
        return deg

    def permute(self, perm) -> "Graph":
        """Relabel nodes: new id of old node i is perm[i]."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.num_nodes)):
            raise ValueError("perm must be a permutation of node ids")
        inv = np.empty_like(perm)
        inv[perm] = np.arange(self.num_nodes)
        new_edges = perm[self.edges] if self.edges.size else self.edges
        return Graph(self.num_nodes, new_edges, self.features[inv])

    def with_features(self, features) -> "Graph":
        return Graph(self.num_nodes, self.edges, features)


def adjacency_with_self_loops(g: Graph) -> sp.csr_matrix:
    """Binary symmetric adjacency with the diagonal forced to exactly one.

    The self-loop is inserted exactly once even when the input edge list
    already contains (i, i); otherwise the degree vector would silently
    double-count it.
    """
    if g.num_nodes == 0:
        raise EmptyGraphError("graph has no nodes")
    n = g.num_nodes
    off = g.edges[g.edges[:, 0] != g.edges[:, 1]]
    rows = np.concatenate([off[:, 0], off[:, 1], np.arange(n)])
    cols = np.concatenate([off[:, 1], off[:, 0], np.arange(n)])
    data = np.ones(rows.shape[0], dtype=np.float64)
    mat = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    mat.sort_indices()
    return mat


def normalize_adjacency(g: Graph) -> sp.csr_matrix:
    """Degree-normalized propagation operator D^{-1/2} (A + I) D^{-1/2}.

    Degrees are taken after the self-loop is added, so every node has degree
    at least one and no division by zero can occur. The result is exactly
    symmetric (each stored entry is 1/sqrt(d_i d_j)), has a strictly positive
    diagonal, and all entries lie in (0, 1]. Stored row-compressed with
    sorted column indices for cache-friendly repeated products.
    """
    a_tilde = adjacency_with_self_loops(g)
    deg = np.asarray(a_tilde.sum(axis=1)).ravel()
    d_inv_sqrt = 1.0 / np.sqrt(deg)
    a_hat = a_tilde.multiply(d_inv_sqrt[:, None]).multiply(d_inv_sqrt[None, :])
    a_hat = sp.csr_matrix(a_hat)
    a_hat.sort_indices()
    return a_hat


def _check_steps(k: int) -> int:
    if k < 0 or int(k) != k:
        raise ValueError(f"step count must be a non-negative integer, got {k}")
    return int(k)


def propagate(adj: sp.spmatrix, features: np.ndarray, k: int) -> np.ndarray:
    """Apply the propagation operator k times to a dense feature matrix.

    Computes adj^k @ features as k successive sparse-dense products; the
    dense power adj^k is never materialized. k = 0 returns a float64 copy.
    """
    k = _check_steps(k)
    out = np.array(features, dtype=np.float64, copy=True)
    if adj.shape[1] != out.shape[0]:
        raise ValueError(
            f"adjacency is {adj.shape[0]}x{adj.shape[1]} but features has "
            f"{out.shape[0]} rows"
        )
    for _ in range(k):
        out = adj @ out
    return out


def propagate_covariance(
    adj1: sp.spmatrix, adj2: sp.spmatrix, sigma: np.ndarray, k: int
) -> np.ndarray:
    """k-step aggregation of a cross-covariance: adj1^k @ sigma @ (adj2^k)^T.

    Both sides are applied by repeated sparse-dense products. sigma must be
    n x m with n matching adj1 and m matching adj2.
    """
    k = _check_steps(k)
    sigma = np.array(sigma, dtype=np.float64, copy=True)
    if sigma.ndim != 2:
        raise ValueError("sigma must be a 2-D matrix")
    if adj1.shape[1] != sigma.shape[0] or adj2.shape[1] != sigma.shape[1]:
        raise ValueError(
            f"sigma is {sigma.shape[0]}x{sigma.shape[1]} but operators are "
            f"{adj1.shape[0]}x{adj1.shape[1]} and {adj2.shape[0]}x{adj2.shape[1]}"
        )
    for _ in range(k):
        sigma = adj1 @ sigma
    sigma_t = sigma.T
    for _ in range(k):
        sigma_t = adj2 @ sigma_t
    return np.ascontiguousarray(sigma_t.T)
