"""Distance-weighted power-law regression and dB-domain normal fits.

The power-law model is value = alpha + 10 beta log10(d) + eps with
eps ~ N(0, sigma).  To counter non-uniform distance sampling, each sample can
be weighted by the inverse occupancy of its 0.1-decade log10-distance bin
(bins anchored at the smallest distance).  Confidence intervals use a
t distribution on the Kish effective sample size and the weighted sandwich
covariance, which keeps near-nominal coverage for balance weights under
homoskedastic noise; sigma intervals use the matching chi-square bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .errors import FitError, ValidationError

WEIGHTING_UNIFORM = "uniform"
WEIGHTING_LOGBINS = "logbins"


@dataclass(frozen=True)
class DistanceWeighting:
    scheme: str = WEIGHTING_LOGBINS
    bin_decades: float = 0.1

    def __post_init__(self):
        if self.scheme not in (WEIGHTING_UNIFORM, WEIGHTING_LOGBINS):
            raise ValidationError(f"unknown weighting scheme {self.scheme!r}")
        if not self.bin_decades > 0:
            raise ValidationError("bin_decades must be positive")


def sample_weights(distances_m: np.ndarray, weighting: DistanceWeighting) -> np.ndarray:
    """Per-sample weights; 1/(bin occupancy) for log-distance bins."""
    d = np.asarray(distances_m, dtype=np.float64)
    if weighting.scheme == WEIGHTING_UNIFORM:
        return np.ones_like(d)
    logd = np.log10(d)
    idx = np.floor((logd - logd.min()) / weighting.bin_decades).astype(int)
    counts = np.bincount(idx)
    return 1.0 / counts[idx]


@dataclass(frozen=True)
class PowerLawFit:
    """alpha + 10 beta log10(d) fit with shadowing sigma and 95% CIs.

    ``ci95`` holds (alpha_lo, alpha_hi, beta_lo, beta_hi, sigma_lo, sigma_hi).
    """

    alpha_db: float
    beta: float
    sigma_shadow_db: float
    ci95: tuple[float, float, float, float, float, float]
    n_points: int
    band_label: str = ""
    metric_id: str = ""
    weighting: DistanceWeighting = DistanceWeighting()

    def __post_init__(self):
        a_lo, a_hi, b_lo, b_hi, s_lo, s_hi = self.ci95
        if not (a_lo <= self.alpha_db <= a_hi and b_lo <= self.beta <= b_hi):
            raise ValidationError("confidence bounds must bracket the point estimates")
        if self.sigma_shadow_db < 0:
            raise ValidationError("sigma_shadow_db must be non-negative")

    @property
    def alpha_lo(self): return self.ci95[0]
    @property
    def alpha_hi(self): return self.ci95[1]
    @property
    def beta_lo(self): return self.ci95[2]
    @property
    def beta_hi(self): return self.ci95[3]
    @property
    def sigma_lo(self): return self.ci95[4]
    @property
    def sigma_hi(self): return self.ci95[5]

    def predict_db(self, distance_m) -> np.ndarray:
        return self.alpha_db + 10.0 * self.beta * np.log10(np.asarray(distance_m, float))


@dataclass(frozen=True)
class NormalFit:
    """Sample mean/standard deviation with 95% CIs
    (``ci95`` = (mu_lo, mu_hi, sigma_lo, sigma_hi))."""

    mu: float
    sigma: float
    ci95: tuple[float, float, float, float]
    n: int
    band_label: str = ""
    metric_id: str = ""

    def __post_init__(self):
        mu_lo, mu_hi, s_lo, s_hi = self.ci95
        if not (mu_lo <= self.mu <= mu_hi and s_lo <= self.sigma <= s_hi):
            raise ValidationError("confidence bounds must bracket the point estimates")
        if self.sigma < 0:
            raise ValidationError("sigma must be non-negative")

    @property
    def mu_lo(self): return self.ci95[0]
    @property
    def mu_hi(self): return self.ci95[1]
    @property
    def sigma_lo(self): return self.ci95[2]
    @property
    def sigma_hi(self): return self.ci95[3]


def _sigma_ci(sigma: float, dof: float) -> tuple[float, float]:
    if dof <= 0 or sigma == 0.0:
        return (0.0 if sigma == 0.0 else -np.inf, np.inf if sigma > 0 else 0.0)
    lo = sigma * np.sqrt(dof / stats.chi2.ppf(0.975, dof))
    hi = sigma * np.sqrt(dof / stats.chi2.ppf(0.025, dof))
    return float(lo), float(hi)


def fit_power_law(samples: Iterable[tuple[float, float]],
                  weighting: DistanceWeighting = DistanceWeighting(),
                  band_label: str = "", metric_id: str = "") -> PowerLawFit:
    """Weighted least squares of dB values on 10 log10(distance).

    Needs at least two samples at two distinct distances; with fewer than
    three samples the point estimates are exact and the intervals are
    unbounded (the effective dof for a CI is then zero).
    """
    pairs = [(float(d), float(v)) for d, v in samples]
    if len(pairs) < 2:
        raise FitError(f"need >= 2 samples to fit a power law, got {len(pairs)}")
    d = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    if np.any(d <= 0):
        raise FitError("distances must be positive")
    if np.unique(d).size < 2:
        raise FitError("need >= 2 distinct distances to fit a power law")

    w = sample_weights(d, weighting)
    x = np.log10(d)
    X = np.column_stack([np.ones_like(x), x])
    A = X.T @ (X * w[:, None])
    theta = np.linalg.solve(A, X.T @ (w * y))
    alpha, slope = float(theta[0]), float(theta[1])
    beta = slope / 10.0

    r = y - X @ theta
    n_eff = float(w.sum() ** 2 / (w * w).sum())
    dof = n_eff - 2.0
    msr = float((w * r * r).sum() / w.sum())
    if dof > 0:
        sigma = float(np.sqrt(msr * n_eff / dof))
        a_inv = np.linalg.inv(A)
        bread = X.T @ (X * (w * w)[:, None])
        cov = sigma**2 * (a_inv @ bread @ a_inv)
        tq = float(stats.t.ppf(0.975, dof))
        se_a, se_s = np.sqrt(np.diag(cov))
        ci = (alpha - tq * se_a, alpha + tq * se_a,
              beta - tq * se_s / 10.0, beta + tq * se_s / 10.0,
              *_sigma_ci(sigma, dof))
    else:
        sigma = float(np.sqrt(msr))
        ci = (-np.inf, np.inf, -np.inf, np.inf, *_sigma_ci(sigma, dof))
    return PowerLawFit(alpha, beta, sigma, tuple(float(c) for c in ci),
                       n_points=len(pairs), band_label=band_label,
                       metric_id=metric_id, weighting=weighting)


def fit_normal(values: Sequence[float], band_label: str = "",
               metric_id: str = "") -> NormalFit:
    """Sample mean and (n-1)-normalized standard deviation with t / chi-square
    95% intervals."""
    v = np.asarray(list(values), dtype=np.float64)
    if v.size < 2:
        raise FitError(f"need >= 2 values for a normal fit, got {v.size}")
    n = v.size
    mu = float(v.mean())
    sigma = float(v.std(ddof=1))
    tq = float(stats.t.ppf(0.975, n - 1))
    half = tq * sigma / np.sqrt(n)
    ci = (mu - half, mu + half, *_sigma_ci(sigma, n - 1))
    return NormalFit(mu, sigma, tuple(float(c) for c in ci), n=n,
                     band_label=band_label, metric_id=metric_id)


def shadowing_residuals(samples: Iterable[tuple[float, float]],
                        fit: PowerLawFit) -> np.ndarray:
    """dB deviations of each sample from the fitted power law."""
    pairs = [(float(d), float(v)) for d, v in samples]
    d = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    return y - fit.predict_db(d)
