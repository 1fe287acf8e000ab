"""Weighted linear least squares for the constant, linear and power-law fits."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FitResult:
    params: np.ndarray
    cov: np.ndarray
    chi2: float
    dof: int
    residuals: np.ndarray

    @property
    def errors(self):
        return np.sqrt(np.diag(self.cov))

    @property
    def reduced_chi2(self):
        return self.chi2 / self.dof if self.dof > 0 else float("nan")


def weighted_polyfit(x, y, sigma, degree):
    """Fit y = sum_k p_k x^k (k = 0..degree) with per-point standard errors.

    ``sigma=None`` gives unit weights. Parameters come back lowest order first.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma = np.ones_like(y) if sigma is None else np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("standard errors must be positive")
    if x.size <= degree:
        raise ValueError(f"need more than {degree} points for a degree-{degree} fit")
    design = np.vander(x, degree + 1, increasing=True)
    w = 1.0 / sigma
    params, *_ = np.linalg.lstsq(design * w[:, None], y * w, rcond=None)
    cov = np.linalg.inv((design * (w ** 2)[:, None]).T @ design)
    residuals = y - design @ params
    chi2 = float(np.sum((residuals * w) ** 2))
    return FitResult(params, cov, chi2, x.size - degree - 1, residuals)


def power_law_fit(x, y, sigma=None):
    """Fit y = a x^b on log axes; returns the FitResult of (log a, b)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive data")
    log_sigma = None if sigma is None else np.asarray(sigma, dtype=float) / y
    return weighted_polyfit(np.log(x), np.log(y), log_sigma, 1)
