"""Closed-form Gaussian expectations of activations and their derivatives.

These are the scalar building blocks of the kernels: for (u, v) drawn from a
centered bivariate normal with covariance [[sii, sij], [sij, sjj]] they give
E[psi(u) psi(v)] and E[psi'(u) psi'(v)] analytically, for ReLU (arc-cosine
forms) and for the error function (arcsine forms). A Monte-Carlo oracle with
the same interface exists so the test suite can cross-check every closed
form against brute-force sampling.

All functions broadcast over numpy arrays and are stateless, hence safe to
call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.special import erf as _erf

from .exceptions import InvalidCovarianceError

__all__ = [
    "ActivationKind",
    "KernelHyperParams",
    "CovTriple",
    "relu_pair_expectation",
    "relu_deriv_expectation",
    "erf_pair_expectation",
    "erf_deriv_expectation",
    "erf_pair_kernel",
    "mc_activation_oracle",
]

# Below this product of variances the pre-activations are numerically zero
# almost surely; both expectations collapse to 0 and the correlation is 0/0.
_ZERO_VARIANCE = 1e-300


class ActivationKind(Enum):
    RELU = "relu"
    ERF = "erf"


class CovTriple(NamedTuple):
    """One 2x2 covariance: self variances sii, sjj and cross term sij."""

    sii: float
    sjj: float
    sij: float

    def validate(self, slack: float = 1e-12) -> "CovTriple":
        if self.sii < 0 or self.sjj < 0:
            raise InvalidCovarianceError(
                f"negative diagonal in covariance triple {self}"
            )
        if self.sij * self.sij > self.sii * self.sjj + slack:
            raise InvalidCovarianceError(
                f"cross term exceeds Cauchy-Schwarz bound in {self}"
            )
        return self


@dataclass(frozen=True)
class KernelHyperParams:
    """Every scalar hyperparameter the kernels consume.

    k: propagation step count (>= 0).
    beta: bias-influence coefficient added as beta**2 to covariances (>= 0).
    sigma_b: bias standard deviation of the erf network's input layer (> 0).
    activation: nonlinearity whose Gaussian expectations drive the kernel.
    gntk_blocks: stacked aggregation+update blocks of the baseline (>= 1).
    """

    k: int = 2
    beta: float = 1.0
    sigma_b: float = 1.0
    activation: ActivationKind = ActivationKind.RELU
    gntk_blocks: int = 2

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.sigma_b <= 0:
            raise ValueError("sigma_b must be > 0")
        if self.gntk_blocks < 1:
            raise ValueError("gntk_blocks must be >= 1")


def _as_valid_diagonals(sii, sjj):
    sii = np.asarray(sii, dtype=np.float64)
    sjj = np.asarray(sjj, dtype=np.float64)
    if np.any(sii < 0) or np.any(sjj < 0):
        raise InvalidCovarianceError("variance entries must be non-negative")
    return sii, sjj


def _clipped_correlation(sii, sjj, sij):
    """Correlation sij / sqrt(sii*sjj), clipped into [-1, 1].

    Round-off routinely pushes |corr| marginally past 1 for perfectly
    aligned inputs; arccos/arcsin would reject that, so clip after the
    division. Degenerate (near-zero-variance) entries report corr 0 plus a
    mask identifying them.
    """
    prod = sii * sjj
    degenerate = prod < _ZERO_VARIANCE
    root = np.sqrt(np.where(degenerate, 1.0, prod))
    lam = np.clip(np.asarray(sij, dtype=np.float64) / root, -1.0, 1.0)
    return np.where(degenerate, 0.0, lam), root, degenerate


def _maybe_scalar(x, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return float(x)
    return x


def relu_pair_expectation(sii, sjj, sij):
    """E[relu(u) relu(v)] under a centered bivariate normal.

    Arc-cosine form: with theta = arccos(corr),
    sqrt(sii*sjj) / (2*pi) * (sin(theta) + (pi - theta) * cos(theta)).
    Zero variance on either side gives 0. Broadcasts over arrays.
    """
    sii, sjj = _as_valid_diagonals(sii, sjj)
    lam, root, degenerate = _clipped_correlation(sii, sjj, sij)
    theta = np.arccos(lam)
    out = root / (2.0 * np.pi) * (np.sin(theta) + (np.pi - theta) * np.cos(theta))
    out = np.where(degenerate, 0.0, out)
    return _maybe_scalar(out, sii, sjj, sij)


def relu_deriv_expectation(sii, sjj, sij):
    """P(u > 0 and v > 0) = (pi - arccos(corr)) / (2*pi).

    Scale-invariant in the covariance; zero variance gives 0 (the step
    function of an a.s.-zero variable vanishes).
    """
    sii, sjj = _as_valid_diagonals(sii, sjj)
    lam, _, degenerate = _clipped_correlation(sii, sjj, sij)
    out = (np.pi - np.arccos(lam)) / (2.0 * np.pi)
    out = np.where(degenerate, 0.0, out)
    return _maybe_scalar(out, sii, sjj, sij)


def erf_pair_expectation(sii, sjj, sij):
    """E[erf(u) erf(v)] under a centered bivariate normal.

    Arcsine form: (2/pi) * arcsin(2*sij / sqrt((1+2*sii)*(1+2*sjj))). The
    ratio is clipped into [-1, 1] before arcsin.
    """
    sii, sjj = _as_valid_diagonals(sii, sjj)
    ratio = 2.0 * np.asarray(sij, dtype=np.float64)
    ratio = ratio / np.sqrt((1.0 + 2.0 * sii) * (1.0 + 2.0 * sjj))
    out = (2.0 / np.pi) * np.arcsin(np.clip(ratio, -1.0, 1.0))
    return _maybe_scalar(out, sii, sjj, sij)


def erf_deriv_expectation(sii, sjj, sij):
    """E[erf'(u) erf'(v)] with erf'(x) = (2/sqrt(pi)) exp(-x^2).

    Gaussian integral: (4/pi) / sqrt((1+2*sii)*(1+2*sjj) - 4*sij^2).
    """
    sii, sjj = _as_valid_diagonals(sii, sjj)
    det = (1.0 + 2.0 * sii) * (1.0 + 2.0 * sjj) - 4.0 * np.square(
        np.asarray(sij, dtype=np.float64)
    )
    out = (4.0 / np.pi) / np.sqrt(np.maximum(det, _ZERO_VARIANCE))
    return _maybe_scalar(out, sii, sjj, sij)


def augmented_covariance(xi, xj, sigma_b: float = 1.0) -> CovTriple:
    """Covariance triple of an infinite-width erf network's pre-activations.

    Each input row is augmented with a constant 1; input-layer weights have
    unit variance per feature coordinate and sigma_b**2 on the bias
    coordinate, so the inner products reduce to x.y + sigma_b**2.
    """
    xi = np.asarray(xi, dtype=np.float64).ravel()
    xj = np.asarray(xj, dtype=np.float64).ravel()
    if xi.shape != xj.shape:
        raise ValueError(f"dimension mismatch: {xi.shape} vs {xj.shape}")
    sb2 = float(sigma_b) ** 2
    return CovTriple(
        sii=float(xi @ xi) + sb2,
        sjj=float(xj @ xj) + sb2,
        sij=float(xi @ xj) + sb2,
    )


def erf_pair_kernel(xi, xj, hp: KernelHyperParams | None = None) -> float:
    """Closed-form infinite-width erf-network kernel of two feature rows.

    (2/pi) * arcsin(2*t(xi, xj) / sqrt((1 + 2*t(xi, xi)) * (1 + 2*t(xj, xj))))
    with t(a, b) = a.b + sigma_b**2 from the bias augmentation. The value
    always lies strictly inside (-1, 1).
    """
    sigma_b = 1.0 if hp is None else hp.sigma_b
    c = augmented_covariance(xi, xj, sigma_b)
    return float(erf_pair_expectation(c.sii, c.sjj, c.sij))


def mc_activation_oracle(
    c: CovTriple,
    activation: ActivationKind,
    mode: str = "value",
    samples: int = 1_000_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte-Carlo estimate of an activation-pair expectation.

    Draws ``samples`` bivariate-normal pairs via a Cholesky factor and
    averages psi(u)*psi(v) (mode "value") or psi'(u)*psi'(v) (mode
    "derivative"). Returns (mean, standard error). Deterministic for a
    given seed; this is the independent reference the closed forms are
    tested against.
    """
    if samples < 10_000:
        raise ValueError("need at least 10_000 samples for a usable estimate")
    if mode not in ("value", "derivative"):
        raise ValueError(f"unknown mode {mode!r}")
    c = CovTriple(*c).validate()

    rng = np.random.default_rng(seed)
    z = rng.standard_normal((samples, 2))
    a = math.sqrt(c.sii)
    b = c.sij / a if a > 0 else 0.0
    rem = max(c.sjj - b * b, 0.0)
    u = a * z[:, 0]
    v = b * z[:, 0] + math.sqrt(rem) * z[:, 1]

    if activation is ActivationKind.RELU:
        if mode == "value":
            prod = np.maximum(u, 0.0) * np.maximum(v, 0.0)
        else:
            prod = ((u > 0) & (v > 0)).astype(np.float64)
    else:
        if mode == "value":
            prod = _erf(u) * _erf(v)
        else:
            prod = (4.0 / np.pi) * np.exp(-(u * u) - (v * v))

    mean = float(prod.mean())
    stderr = float(prod.std(ddof=1) / math.sqrt(samples))
    return mean, stderr
