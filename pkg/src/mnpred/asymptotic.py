"""Normal-approximation interval constructions.

All three methods here take the prediction y_hat +/- q * sep with a
multiplier q from the standard normal: the pointwise per-category
quantile, the Bonferroni-corrected quantile, and the equicoordinate
quantile of the multivariate normal with the prediction correlation
structure (estimated by Monte Carlo, since the singular C-dimensional
law has no closed form).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .empirical import nearest_rank_quantile
from .errors import NotPSD, ValidationError
from .model import (
    FutureSpec,
    ModelFit,
    PredictionIntervalSet,
    prediction_point,
    scaled_interval_set,
)
from .rng import as_generator

__all__ = [
    "PredCovariance",
    "prediction_covariance",
    "equicoordinate_quantile",
    "pointwise_interval",
    "bonferroni_interval",
    "mvn_interval",
]

# Eigenvalues of the prediction correlation below this are treated as
# exact zeros (the matrix always has one by construction); anything
# more negative than -1e-8 means the input was not a covariance at all.
_EIG_DROP = 1e-10
_EIG_NEG = -1e-8


@dataclass(frozen=True)
class PredCovariance:
    """Covariance and correlation of the future count prediction errors."""

    sigma: np.ndarray
    corr: np.ndarray


def prediction_covariance(fit: ModelFit, spec: FutureSpec) -> PredCovariance:
    """Singular (rank C-1) covariance of y - y_hat under the fitted model."""
    pi = fit.pi_hat
    v = np.diag(pi) - np.outer(pi, pi)
    sigma = fit.phi_hat * spec.m * (1.0 + spec.m / fit.n_total) * v
    d = np.sqrt(np.diag(sigma))
    if np.any(d <= 0.0):
        raise ValidationError("degenerate category with zero prediction variance")
    corr = sigma / np.outer(d, d)
    return PredCovariance(sigma=sigma, corr=corr)


def equicoordinate_quantile(
    corr: np.ndarray,
    alpha: float,
    rng,
    n_draws: int = 100_000,
) -> float:
    """(1-alpha) quantile of max_c |Z_c| for Z ~ N(0, corr), by Monte Carlo.

    The correlation may be singular, so draws are built from the
    eigendecomposition with near-zero eigenvalues dropped.
    """
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise ValidationError("correlation must be a square matrix")
    if n_draws < 1000:
        raise ValidationError("equicoordinate quantile needs at least 1000 draws")
    eigvals, eigvecs = np.linalg.eigh((corr + corr.T) / 2.0)
    if eigvals.min() < _EIG_NEG:
        raise NotPSD(f"most negative eigenvalue {eigvals.min():.3e} is below {_EIG_NEG}")
    keep = eigvals > _EIG_DROP
    root = eigvecs[:, keep] * np.sqrt(eigvals[keep])[None, :]
    gen = as_generator(rng)
    shocks = gen.standard_normal((int(n_draws), int(keep.sum())))
    max_abs = np.abs(shocks @ root.T).max(axis=1)
    return nearest_rank_quantile(max_abs, 1.0 - alpha)


def pointwise_interval(fit: ModelFit, spec: FutureSpec, clip: bool = True) -> PredictionIntervalSet:
    """Per-category normal interval with no multiplicity adjustment."""
    q = float(norm.ppf(1.0 - spec.alpha / 2.0))
    return scaled_interval_set("pointwise", prediction_point(fit, spec), q, q, spec, clip=clip)


def bonferroni_interval(fit: ModelFit, spec: FutureSpec, clip: bool = True) -> PredictionIntervalSet:
    """Normal interval at the Bonferroni-corrected level alpha / C."""
    C = fit.pi_hat.shape[0]
    q = float(norm.ppf(1.0 - spec.alpha / (2.0 * C)))
    return scaled_interval_set("bonferroni", prediction_point(fit, spec), q, q, spec, clip=clip)


def mvn_interval(
    fit: ModelFit,
    spec: FutureSpec,
    rng,
    n_draws: int = 100_000,
    clip: bool = True,
) -> PredictionIntervalSet:
    """Equicoordinate normal interval honouring the prediction correlations."""
    cov = prediction_covariance(fit, spec)
    q = equicoordinate_quantile(cov.corr, spec.alpha, rng, n_draws=n_draws)
    return scaled_interval_set("mvn", prediction_point(fit, spec), q, q, spec, clip=clip)
