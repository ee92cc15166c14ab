"""Parametric bootstrap calibration of simultaneous prediction intervals.

The ensemble refits the quasi-multinomial model to B synthetic
historical datasets drawn at the fitted parameters, draws a future
cluster for each, and keeps the studentised residuals
z_b = (y*_b - y_hat*_b) / sep*_b.  Interval multipliers are then read
off the ensemble: by bisection on empirical simultaneous coverage (the
three calibration variants), as the quantile of the max-|z| statistic,
or through the distribution-free rank construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dm import repair_zero_columns, sample_dm_counts, sample_dm_matrix
from .empirical import nearest_rank_quantile, rank_summary
from .errors import (
    BracketError,
    ConvergenceWarning,
    DegenerateRankWarning,
    ValidationError,
)
from .model import (
    FutureSpec,
    HistoricalDataset,
    ModelFit,
    PredictionIntervalSet,
    clamp_dispersion,
    prediction_point,
    residual_df,
    scaled_interval_set,
)
from .rng import as_generator

__all__ = [
    "BootstrapEnsemble",
    "CalibrationSettings",
    "build_ensemble",
    "bisection_calibrate",
    "symmetric_multiplier",
    "asymmetric_multipliers",
    "marginal_multipliers",
    "masr_multiplier",
    "rank_multipliers",
    "symmetric_calibration",
    "asymmetric_calibration",
    "marginal_calibration",
    "masr_interval",
    "rank_scs_interval",
]


@dataclass(frozen=True)
class BootstrapEnsemble:
    """Refitted predictions, futures, and studentised residuals, one row per replicate."""

    y_hat_star: np.ndarray
    sep_star: np.ndarray
    y_star: np.ndarray
    z: np.ndarray

    @property
    def n_replicates(self) -> int:
        return self.z.shape[0]

    @property
    def n_categories(self) -> int:
        return self.z.shape[1]


@dataclass(frozen=True)
class CalibrationSettings:
    """Bisection controls: coverage tolerance, multiplier bracket, iteration caps."""

    tolerance: float = 0.0025
    bracket: tuple[float, float] = (0.0, 20.0)
    max_iterations: int = 60
    max_doublings: int = 10

    def __post_init__(self) -> None:
        if self.tolerance <= 0.0:
            raise ValidationError("tolerance must be positive")
        lo, hi = self.bracket
        if not 0.0 <= lo < hi:
            raise ValidationError(f"bracket must satisfy 0 <= lo < hi, got {self.bracket}")
        if self.max_iterations < 1 or self.max_doublings < 0:
            raise ValidationError("iteration caps must be positive")


def build_ensemble(
    fit: ModelFit,
    data: HistoricalDataset,
    spec: FutureSpec,
    B: int,
    rng,
) -> BootstrapEnsemble:
    """Draw and refit B synthetic replicates of the whole prediction problem.

    Each replicate redraws the historical matrix at the fitted
    parameters (empty categories repaired so the refit is always
    defined), refits pooled probabilities and dispersion exactly as
    ``fit_model`` does, and draws one future cluster of m units with
    the dispersion re-truncated to 97.5% of m.
    """
    B = int(B)
    if B < 2:
        raise ValidationError("ensemble needs at least 2 replicates")
    gen = as_generator(rng)
    K, C = data.counts.shape
    m = spec.m
    sizes = data.cluster_sizes

    counts = sample_dm_matrix(sizes, fit.pi_hat, fit.phi_hat, gen, size=B)
    counts = repair_zero_columns(counts, gen)

    # Vectorised refit, replicating fit_model row for row.
    n_star = counts.sum(axis=2)                          # (B, K)
    totals = counts.sum(axis=1)                          # (B, C)
    N_star = n_star.sum(axis=1).astype(float)            # (B,)
    pi_star = totals / N_star[:, None]
    expected = n_star[:, :, None] * pi_star[:, None, :]
    resid = counts - expected
    chi2 = (resid * resid / expected).sum(axis=(1, 2))
    s_bar = (resid / expected).sum(axis=(1, 2)) / (K * C - K)
    df = residual_df(K, C)
    denom = 1.0 + s_bar
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_raw = np.where(denom != 0.0, (chi2 / df) / denom, np.inf)
    cap = 0.975 * n_star.min(axis=1)
    phi_star = np.where(phi_raw > 1.0, np.minimum(phi_raw, cap), 1.01)

    y_hat_star = m * pi_star
    var = phi_star[:, None] * m * pi_star * (1.0 - pi_star) * (1.0 + m / N_star[:, None])
    sep_star = np.sqrt(np.maximum(var, 0.0))

    phi_future = clamp_dispersion(fit.phi_hat, m) if m >= 2 else fit.phi_hat
    y_star = sample_dm_counts(m, fit.pi_hat, phi_future, gen, size=B)

    z = (y_star - y_hat_star) / sep_star
    return BootstrapEnsemble(y_hat_star=y_hat_star, sep_star=sep_star, y_star=y_star, z=z)


def bisection_calibrate(coverage_fn, target: float, settings: CalibrationSettings | None = None) -> float:
    """Smallest multiplier whose empirical coverage is within tolerance of target.

    ``coverage_fn`` must be non-decreasing.  The bracket is doubled until
    it straddles the target (BracketError if it never does); afterwards
    plain bisection runs until the coverage at the midpoint is within
    tolerance.  If the iteration cap is hit first, the conservative end
    of the final bracket is returned under a ConvergenceWarning.
    """
    s = settings or CalibrationSettings()
    if not 0.0 < target <= 1.0:
        raise ValidationError(f"coverage target must lie in (0, 1], got {target}")
    lo, hi = s.bracket
    cov_hi = coverage_fn(hi)
    doublings = 0
    while cov_hi < target:
        if doublings >= s.max_doublings:
            raise BracketError(
                f"coverage {cov_hi:.4f} at multiplier {hi} still below target "
                f"{target:.4f} after {s.max_doublings} bracket doublings"
            )
        lo, hi = hi, 2.0 * hi
        cov_hi = coverage_fn(hi)
        doublings += 1
    for _ in range(s.max_iterations):
        mid = 0.5 * (lo + hi)
        cov = coverage_fn(mid)
        if abs(cov - target) <= s.tolerance:
            return mid
        if cov >= target:
            hi = mid
        else:
            lo = mid
    warnings.warn(
        f"bisection stopped after {s.max_iterations} iterations without hitting "
        f"the target within {s.tolerance}; returning the conservative bracket end",
        ConvergenceWarning,
        stacklevel=2,
    )
    return hi


def _exceedance_curve(stat: np.ndarray):
    """Coverage function q -> fraction of replicates with stat <= q."""
    stat = np.sort(stat)
    B = stat.shape[0]

    def coverage(q: float) -> float:
        return float(np.searchsorted(stat, q, side="right")) / B

    return coverage


def symmetric_multiplier(
    z: np.ndarray, alpha: float, settings: CalibrationSettings | None = None
) -> float:
    """Single multiplier calibrated so that |z| <= q in all categories at rate 1-alpha."""
    q = bisection_calibrate(
        _exceedance_curve(np.abs(z).max(axis=1)), 1.0 - alpha, settings
    )
    return float(q)


def asymmetric_multipliers(
    z: np.ndarray, alpha: float, settings: CalibrationSettings | None = None
) -> tuple[float, float]:
    """Separate lower and upper multipliers, each calibrated to 1 - alpha/2."""
    target = 1.0 - alpha / 2.0
    q_lo = bisection_calibrate(_exceedance_curve((-z).max(axis=1)), target, settings)
    q_hi = bisection_calibrate(_exceedance_curve(z.max(axis=1)), target, settings)
    return float(q_lo), float(q_hi)


def marginal_multipliers(
    z: np.ndarray, alpha: float, settings: CalibrationSettings | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Per-category, per-side multipliers calibrated to 1 - alpha/(2C)."""
    C = z.shape[1]
    target = 1.0 - alpha / (2.0 * C)
    q_lo = np.array(
        [bisection_calibrate(_exceedance_curve(-z[:, c]), target, settings) for c in range(C)]
    )
    q_hi = np.array(
        [bisection_calibrate(_exceedance_curve(z[:, c]), target, settings) for c in range(C)]
    )
    return q_lo, q_hi


def masr_multiplier(z: np.ndarray, alpha: float) -> float:
    """(1-alpha) nearest-rank quantile of the max absolute studentised residual."""
    return nearest_rank_quantile(np.abs(z).max(axis=1), 1.0 - alpha)


def rank_multipliers(z: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-category multipliers from the rank-based simultaneous construction.

    The critical rank tau* picks one order statistic per tail of each
    category's residuals: the lower multiplier is the absolute value of
    the (B+1-tau*)-th order statistic, the upper multiplier the tau*-th.
    An upper order statistic can be negative when a category's residual
    distribution is strongly skewed; it is then floored at zero (with a
    diagnostic) so the interval still includes the point prediction.
    """
    summary = rank_summary(z, alpha)
    B = summary.n_rows
    tau = summary.tau_star
    z_sorted = np.sort(z, axis=0)
    q_lo = np.abs(z_sorted[B - tau, :])
    q_hi = z_sorted[tau - 1, :]
    if np.any(q_hi < 0.0):
        bad = np.flatnonzero(q_hi < 0.0)
        warnings.warn(
            f"upper rank order statistic negative in categories {bad + 1}; "
            "floored at the point prediction",
            DegenerateRankWarning,
            stacklevel=2,
        )
        q_hi = np.maximum(q_hi, 0.0)
    return q_lo, q_hi


def symmetric_calibration(
    ensemble: BootstrapEnsemble,
    fit: ModelFit,
    spec: FutureSpec,
    settings: CalibrationSettings | None = None,
    clip: bool = True,
) -> PredictionIntervalSet:
    q = symmetric_multiplier(ensemble.z, spec.alpha, settings)
    return scaled_interval_set("symmetric", prediction_point(fit, spec), q, q, spec, clip=clip)


def asymmetric_calibration(
    ensemble: BootstrapEnsemble,
    fit: ModelFit,
    spec: FutureSpec,
    settings: CalibrationSettings | None = None,
    clip: bool = True,
) -> PredictionIntervalSet:
    q_lo, q_hi = asymmetric_multipliers(ensemble.z, spec.alpha, settings)
    return scaled_interval_set(
        "asymmetric", prediction_point(fit, spec), q_lo, q_hi, spec, clip=clip
    )


def marginal_calibration(
    ensemble: BootstrapEnsemble,
    fit: ModelFit,
    spec: FutureSpec,
    settings: CalibrationSettings | None = None,
    clip: bool = True,
) -> PredictionIntervalSet:
    q_lo, q_hi = marginal_multipliers(ensemble.z, spec.alpha, settings)
    return scaled_interval_set(
        "marginal", prediction_point(fit, spec), q_lo, q_hi, spec, clip=clip
    )


def masr_interval(
    ensemble: BootstrapEnsemble,
    fit: ModelFit,
    spec: FutureSpec,
    clip: bool = True,
) -> PredictionIntervalSet:
    q = masr_multiplier(ensemble.z, spec.alpha)
    return scaled_interval_set("masr", prediction_point(fit, spec), q, q, spec, clip=clip)


def rank_scs_interval(
    ensemble: BootstrapEnsemble,
    fit: ModelFit,
    spec: FutureSpec,
    clip: bool = True,
) -> PredictionIntervalSet:
    q_lo, q_hi = rank_multipliers(ensemble.z, spec.alpha)
    return scaled_interval_set(
        "rank-scs", prediction_point(fit, spec), q_lo, q_hi, spec, clip=clip
    )
