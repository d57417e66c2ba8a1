"""Simplified graph kernels with a layer-stacked baseline and kernel classifiers.

Public surface: the ``Graph`` container, the kernel estimators ``SGTK`` /
``SGNK`` / ``GNTK`` (sklearn fit/transform over precomputed Grams), pair and
Gram functions, the ``KernelRidgeClassifier`` and ``PrecomputedKernelSVC``
classifiers, and dataset loading in the canonical binary format.
"""

__version__ = "0.1.0"

from .classifiers import (
    CrossValResult,
    KernelRidgeClassifier,
    PrecomputedKernelSVC,
    cross_validate,
)
from .datasets import (
    DatasetBundle,
    load_dataset,
    materialize_splits,
    one_hot_degree_features,
    row_normalize,
    save_dataset,
    validate_dataset,
)
from .expectations import (
    ActivationKind,
    CovTriple,
    KernelHyperParams,
    erf_pair_kernel,
    mc_activation_oracle,
    relu_deriv_expectation,
    relu_pair_expectation,
)
from .gram_io import gram_to_csv, load_gram, save_gram
from .graphs import Graph, normalize_adjacency, propagate, propagate_covariance
from .kernels import (
    GNTK,
    SGNK,
    SGTK,
    GramMatrix,
    cross_gram,
    fingerprint_graphs,
    gntk_pair,
    gram_matrix,
    node_kernel_matrix,
    readout,
    sgnk_pair,
    sgtk_pair,
)

__all__ = [
    "__version__",
    "ActivationKind",
    "CovTriple",
    "CrossValResult",
    "DatasetBundle",
    "GNTK",
    "Graph",
    "GramMatrix",
    "KernelHyperParams",
    "KernelRidgeClassifier",
    "PrecomputedKernelSVC",
    "SGNK",
    "SGTK",
    "cross_gram",
    "cross_validate",
    "erf_pair_kernel",
    "fingerprint_graphs",
    "gntk_pair",
    "gram_matrix",
    "gram_to_csv",
    "load_dataset",
    "load_gram",
    "materialize_splits",
    "mc_activation_oracle",
    "node_kernel_matrix",
    "normalize_adjacency",
    "one_hot_degree_features",
    "propagate",
    "propagate_covariance",
    "readout",
    "relu_deriv_expectation",
    "relu_pair_expectation",
    "row_normalize",
    "save_dataset",
    "save_gram",
    "sgnk_pair",
    "sgtk_pair",
    "validate_dataset",
]
