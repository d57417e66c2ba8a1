"""Kernel-consuming classifiers and cross-validation drivers.

Both classifiers operate on precomputed Gram matrices: multiclass kernel
ridge regression (one-hot targets, Cholesky solve, argmax decode) and a
one-vs-rest soft-margin SVM trained by sequential minimal optimization over
the Gram. ``cross_validate`` runs stratified k-fold evaluation with nested
grid selection on each training fold.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import KFold, StratifiedKFold
from sklearn.utils import check_array, column_or_1d

from .exceptions import NumericError

__all__ = [
    "KernelRidgeClassifier",
    "PrecomputedKernelSVC",
    "cross_validate",
    "CrossValResult",
    "DEFAULT_LAMBDA_GRID",
    "DEFAULT_C_GRID",
]

# Default hyperparameter search ranges: ridge regularization over
# [1e-2, 1e2], SVM box constraint over [1e-2, 1e4].
DEFAULT_LAMBDA_GRID = tuple(np.logspace(-2, 2, 9))
DEFAULT_C_GRID = tuple(np.logspace(-2, 4, 7))


def _check_gram(K, square=True):
    K = check_array(K, dtype=np.float64)
    if square and K.shape[0] != K.shape[1]:
        raise ValueError(f"training Gram matrix must be square, got {K.shape}")
    return K


class KernelRidgeClassifier(BaseEstimator, ClassifierMixin):
    """Multiclass ridge regression on a precomputed kernel.

    fit solves (K + alpha*I) dual = Y for one-hot targets Y via a symmetric
    positive-definite factorization; predict takes the argmax of the decision
    scores, breaking ties toward the smaller class id. If the factorization
    fails, a single jitter of 1e-10 * trace/n is added (and logged); a second
    failure raises ``NumericError`` naming the smallest eigenvalue.
    """

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def fit(self, K, y):
        K = _check_gram(K)
        y = column_or_1d(y)
        if y.shape[0] != K.shape[0]:
            raise ValueError("label count does not match Gram size")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise ValueError("training data must contain at least 2 classes")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")

        n = K.shape[0]
        targets = np.zeros((n, self.classes_.size))
        targets[np.arange(n), y_idx] = 1.0

        shifted = K + self.alpha * np.eye(n)
        try:
            factor = scipy.linalg.cho_factor(shifted, lower=True)
        except np.linalg.LinAlgError:
            jitter = 1e-10 * max(np.trace(K), 0.0) / n
            warnings.warn(
                f"Gram factorization failed; retrying with jitter {jitter:.3e}"
            )
            try:
                factor = scipy.linalg.cho_factor(
                    shifted + jitter * np.eye(n), lower=True
                )
            except np.linalg.LinAlgError:
                smallest = float(np.linalg.eigvalsh(shifted)[0])
                raise NumericError(
                    "Gram + alpha*I is not positive definite even after "
                    f"jitter; smallest eigenvalue ~ {smallest:.6e}"
                ) from None
        self.dual_coef_ = scipy.linalg.cho_solve(factor, targets)
        return self

    def decision_function(self, K_cross):
        if not hasattr(self, "dual_coef_"):
            raise NotFittedError("KernelRidgeClassifier is not fitted yet")
        K_cross = check_array(K_cross, dtype=np.float64)
        if K_cross.shape[1] != self.dual_coef_.shape[0]:
            raise ValueError(
                f"cross Gram has {K_cross.shape[1]} columns, expected "
                f"{self.dual_coef_.shape[0]}"
            )
        return K_cross @ self.dual_coef_

    def predict(self, K_cross):
        scores = self.decision_function(K_cross)
        return self.classes_[np.argmax(scores, axis=1)]


def _smo_solve(Q, y, C, tol, max_iter):
    """Maximal-violating-pair SMO for the binary soft-margin dual.

    Minimizes 0.5 a^T Q a - e^T a subject to 0 <= a <= C and y^T a = 0,
    where Q[i, j] = y_i y_j K[i, j]. Returns (alpha, bias, iterations,
    final KKT violation).
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the dual objective at alpha = 0
    eps = 1e-12

    it = 0
    violation = np.inf
    while it < max_iter:
        neg_y_grad = -y * grad
        up = ((alpha < C - eps) & (y > 0)) | ((alpha > eps) & (y < 0))
        low = ((alpha < C - eps) & (y < 0)) | ((alpha > eps) & (y > 0))
        if not up.any() or not low.any():
            violation = 0.0
            break
        i = np.flatnonzero(up)[np.argmax(neg_y_grad[up])]
        j = np.flatnonzero(low)[np.argmin(neg_y_grad[low])]
        violation = neg_y_grad[i] - neg_y_grad[j]
        if violation < tol:
            break

        quad = Q[i, i] + Q[j, j] - 2.0 * y[i] * y[j] * Q[i, j]
        quad = max(quad, 1e-12)
        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            delta = (neg_y_grad[i] * y[i] + neg_y_grad[j] * y[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0 and aj < 0:
                ai, aj = diff, 0.0
            elif diff <= 0 and ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0 and ai > C:
                ai, aj = C, C - diff
            elif diff <= 0 and aj > C:
                ai, aj = C + diff, C
        else:
            delta = (neg_y_grad[j] * y[j] - neg_y_grad[i] * y[i]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > C and ai > C:
                ai, aj = C, total - C
            elif total <= C and aj < 0:
                ai, aj = total, 0.0
            if total > C and aj > C:
                ai, aj = total - C, C
            elif total <= C and ai < 0:
                ai, aj = 0.0, total

        alpha[i], alpha[j] = ai, aj
        grad += Q[:, i] * (ai - ai_old) + Q[:, j] * (aj - aj_old)
        it += 1

    neg_y_grad = -y * grad
    free = (alpha > eps) & (alpha < C - eps)
    if free.any():
        bias = float(np.mean(neg_y_grad[free]))
    else:
        up = ((alpha < C - eps) & (y > 0)) | ((alpha > eps) & (y < 0))
        low = ((alpha < C - eps) & (y < 0)) | ((alpha > eps) & (y > 0))
        hi = neg_y_grad[up].max() if up.any() else 0.0
        lo = neg_y_grad[low].min() if low.any() else 0.0
        bias = float((hi + lo) / 2.0)
    return alpha, bias, it, float(max(violation, 0.0))


@dataclass
class _BinaryModel:
    coef: np.ndarray  # alpha_i * y_i over all training items
    bias: float
    support: np.ndarray  # indices with alpha > 0


class PrecomputedKernelSVC(BaseEstimator, ClassifierMixin):
    """One-vs-rest soft-margin SVM on a precomputed Gram matrix.

    Each binary subproblem is solved by sequential minimal optimization with
    maximal-violating-pair working-set selection, which makes the dual
    objective non-decreasing across updates. Prediction takes the class with
    the highest decision value, ties broken toward the smaller class id.
    """

    def __init__(self, C=1.0, tol=1e-3, max_passes=100_000):
        self.C = C
        self.tol = tol
        self.max_passes = max_passes

    def fit(self, K, y):
        K = _check_gram(K)
        y = column_or_1d(y)
        if y.shape[0] != K.shape[0]:
            raise ValueError("label count does not match Gram size")
        if self.C <= 0 or self.tol <= 0:
            raise ValueError("C and tol must be > 0")
        self.classes_ = np.unique(y)
        if self.classes_.size < 2:
            raise ValueError("training data must contain at least 2 classes")

        self.models_ = []
        for cls in self.classes_:
            y_bin = np.where(y == cls, 1.0, -1.0)
            Q = K * np.outer(y_bin, y_bin)
            alpha, bias, iters, violation = _smo_solve(
                Q, y_bin, self.C, self.tol, self.max_passes
            )
            if iters >= self.max_passes and violation >= self.tol:
                warnings.warn(
                    f"SMO did not converge for class {cls} after "
                    f"{self.max_passes} updates; final KKT violation "
                    f"{violation:.3e}"
                )
            self.models_.append(
                _BinaryModel(
                    coef=alpha * y_bin,
                    bias=bias,
                    support=np.flatnonzero(alpha > 1e-12),
                )
            )
        return self

    def decision_function(self, K_cross):
        if not hasattr(self, "models_"):
            raise NotFittedError("PrecomputedKernelSVC is not fitted yet")
        K_cross = check_array(K_cross, dtype=np.float64)
        if K_cross.shape[1] != self.models_[0].coef.shape[0]:
            raise ValueError("cross Gram column count does not match training size")
        cols = [K_cross @ m.coef + m.bias for m in self.models_]
        return np.stack(cols, axis=1)

    def predict(self, K_cross):
        return self.classes_[np.argmax(self.decision_function(K_cross), axis=1)]

    @staticmethod
    def dual_objective(K, y_bin, alpha):
        """Dual value sum(alpha) - 0.5 alpha^T Q alpha for a binary problem."""
        Q = K * np.outer(y_bin, y_bin)
        return float(alpha.sum() - 0.5 * alpha @ Q @ alpha)


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------


@dataclass
class CrossValResult:
    mean_accuracy: float
    std_accuracy: float
    best_hyperparam: float
    fold_accuracies: list = field(default_factory=list)
    fold_choices: list = field(default_factory=list)


def _make_classifier(classifier: str, value: float):
    if classifier == "krr":
        return KernelRidgeClassifier(alpha=value)
    if classifier == "svm":
        return PrecomputedKernelSVC(C=value)
    raise ValueError(f"unknown classifier {classifier!r}")


def _fit_accuracy(classifier, value, gram, labels, train, test) -> float:
    model = _make_classifier(classifier, value)
    model.fit(gram[np.ix_(train, train)], labels[train])
    pred = model.predict(gram[np.ix_(test, train)])
    return float(np.mean(pred == labels[test]))


def _grid_pick(classifier, grid, gram, labels, train, inner_folds, seed) -> float:
    """Mean inner-fold accuracy per grid value; ties go to the first value."""
    labels_tr = labels[train]
    n_splits = min(inner_folds, np.bincount(np.unique(labels_tr, return_inverse=True)[1]).min())
    if n_splits >= 2:
        splitter = StratifiedKFold(n_splits=n_splits, shuffle=True, random_state=seed)
        split_iter = splitter.split(np.zeros(train.size), labels_tr)
    else:
        splitter = KFold(n_splits=2, shuffle=True, random_state=seed)
        split_iter = splitter.split(np.zeros(train.size))
    folds = [(train[tr], train[te]) for tr, te in split_iter]

    best_value, best_score = grid[0], -1.0
    for value in grid:
        scores = [
            _fit_accuracy(classifier, value, gram, labels, tr, te)
            for tr, te in folds
        ]
        score = float(np.mean(scores))
        if score > best_score + 1e-12:
            best_value, best_score = value, score
    return best_value


def cross_validate(
    gram,
    labels,
    classifier: str = "svm",
    folds: int = 10,
    grid=None,
    seed: int = 0,
    inner_folds: int = 3,
) -> CrossValResult:
    """Stratified k-fold accuracy with nested hyperparameter selection.

    Each outer training fold picks its hyperparameter by an inner
    ``inner_folds``-fold search over ``grid``, then scores the held-out
    fold. Folds are seed-deterministic. Classes with fewer members than
    ``folds`` trigger a stratification warning and fall back to plain
    k-fold.
    """
    gram = _check_gram(np.asarray(gram, dtype=np.float64))
    labels = column_or_1d(np.asarray(labels))
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if gram.shape[0] < folds:
        raise ValueError("fewer items than folds")
    if grid is None:
        grid = DEFAULT_C_GRID if classifier == "svm" else DEFAULT_LAMBDA_GRID
    grid = [float(v) for v in grid]

    class_counts = np.bincount(np.unique(labels, return_inverse=True)[1])
    if class_counts.min() < folds:
        warnings.warn(
            f"smallest class has {class_counts.min()} members < {folds} folds; "
            "using unstratified folds"
        )
        splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
        split_iter = splitter.split(np.zeros(labels.size))
    else:
        splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
        split_iter = splitter.split(np.zeros(labels.size), labels)

    accuracies, choices = [], []
    for train, test in split_iter:
        value = _grid_pick(classifier, grid, gram, labels, train, inner_folds, seed)
        accuracies.append(_fit_accuracy(classifier, value, gram, labels, train, test))
        choices.append(value)

    accuracies = np.asarray(accuracies)
    modal = max(set(choices), key=lambda v: (choices.count(v), -v))
    return CrossValResult(
        mean_accuracy=float(accuracies.mean()),
        std_accuracy=float(accuracies.std()),
        best_hyperparam=float(modal),
        fold_accuracies=[float(a) for a in accuracies],
        fold_choices=choices,
    )
