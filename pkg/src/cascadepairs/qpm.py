"""
Quasi-phase-matched SHG: phase mismatch, sinc^2 tuning curve, and the
mapping between tuning-curve width and effective interaction length.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .constants import SINC2_HALF_MAX_ROOT
from .dispersion import refractive_index
from .errors import DomainError


@dataclass(frozen=True)
class QpmGrating:
    """Poled grating. Period in microns, lengths in metres."""

    poling_period: float
    interaction_length: float
    sample_length: float
    qpm_order: int = 1

    def __post_init__(self):
        if not self.poling_period > 0:
            raise DomainError("poling_period must be positive")
        if int(self.qpm_order) != self.qpm_order or self.qpm_order < 1 or self.qpm_order % 2 == 0:
            raise DomainError("qpm_order must be a positive odd integer")
        if not 0 < self.interaction_length <= self.sample_length:
            raise DomainError("need 0 < interaction_length <= sample_length")


def phase_mismatch(model, grating, pump_wavelength, temperature):
    """Delta k = k(2w) - 2 k(w) - 2 pi m / period, in m^-1.

    ``pump_wavelength`` in microns (scalar or array). Positive when the
    harmonic index term dominates the grating term.
    """
    lam = np.asarray(pump_wavelength, dtype=float)
    n_w = refractive_index(model, lam, temperature)
    n_2w = refractive_index(model, lam / 2.0, temperature)
    lam_m = lam * 1e-6
    grating_term = 2.0 * np.pi * grating.qpm_order / (grating.poling_period * 1e-6)
    dk = 4.0 * np.pi / lam_m * (n_2w - n_w) - grating_term
    return dk if np.ndim(dk) else float(dk)


def sinc2(x):
    """sin(x)^2 / x^2 with the removable singularity filled."""
    return np.sinc(np.asarray(x, dtype=float) / np.pi) ** 2


def tuning_curve(model, grating, wavelengths, temperature):
    """Normalized SHG efficiency sinc^2(dk L / 2) at each pump wavelength.

    Returns ``(wavelengths, efficiency)`` as arrays; wavelengths in microns.
    """
    lam = np.atleast_1d(np.asarray(wavelengths, dtype=float))
    if lam.size == 0:
        raise DomainError("wavelength list is empty")
    dk = phase_mismatch(model, grating, lam, temperature)
    return lam, sinc2(dk * grating.interaction_length / 2.0)


def curve_fwhm(x, y):
    """Full width at half maximum of a sampled single-peaked curve.

    Crossings are located by linear interpolation between the bracketing
    samples on each side of the maximum.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i = int(np.argmax(y))
    half = y[i] / 2.0
    left = i
    while left > 0 and y[left - 1] > half:
        left -= 1
    right = i
    while right < len(y) - 1 and y[right + 1] > half:
        right += 1
    if left == 0 or right == len(y) - 1:
        raise DomainError("curve does not fall below half maximum on both sides")
    x_lo = np.interp(half, [y[left - 1], y[left]], [x[left - 1], x[left]])
    x_hi = np.interp(half, [y[right + 1], y[right]], [x[right + 1], x[right]])
    return x_hi - x_lo


def phase_match_wavelength(model, grating, temperature, guess, search_half_width=0.05):
    """Pump wavelength (um) of zero mismatch, searched within guess +/- half width."""
    f = lambda lam: phase_mismatch(model, grating, lam, temperature)
    return brentq(f, guess - search_half_width, guess + search_half_width, xtol=1e-15)


def _crossing(f, start, direction, step=1e-5):
    # expand outward from start until f changes sign, then refine
    a, fa = start, f(start)
    for _ in range(60):
        b = start + direction * step
        fb = f(b)
        if np.sign(fb) != np.sign(fa):
            return brentq(f, min(a, b), max(a, b), xtol=1e-15)
        a, fa = b, fb
        step *= 2.0
    raise DomainError("half-maximum crossing not found")


def analytic_fwhm(model, grating, temperature, center):
    """Exact wavelength FWHM (um) of the sinc^2 curve around ``center``.

    Solves |dk(lam)| L / 2 = x0 on both sides of the phase-match point, with
    x0 the half-maximum root of sinc^2.
    """
    half_length = grating.interaction_length / 2.0
    g = lambda lam: (phase_mismatch(model, grating, lam, temperature) * half_length) ** 2 \
        - SINC2_HALF_MAX_ROOT ** 2
    return _crossing(g, center, +1.0) - _crossing(g, center, -1.0)


def fwhm_to_length(model, grating, measured_fwhm, temperature, pump_wavelength=None):
    """Interaction length (m) whose tuning curve has the given FWHM (nm).

    ``pump_wavelength`` (um) seeds the search for the phase-match point; it
    defaults to the anchor wavelength of the dispersion model.
    """
    if not measured_fwhm > 0:
        raise DomainError("measured FWHM must be positive")
    guess = model.offset_anchor_um if pump_wavelength is None else pump_wavelength
    center = phase_match_wavelength(model, grating, temperature, guess)
    target_um = measured_fwhm * 1e-3

    def residual(log_length):
        length = np.exp(log_length)
        g = replace(grating, interaction_length=length, sample_length=max(length, grating.sample_length))
        return np.log(analytic_fwhm(model, g, temperature, center) / target_um)

    # linear-slope estimate brackets the root
    h = 1e-4
    slope = abs(phase_mismatch(model, grating, center + h, temperature)
                - phase_mismatch(model, grating, center - h, temperature)) / (2 * h * 1e-6)
    estimate = 4.0 * SINC2_HALF_MAX_ROOT / (slope * target_um * 1e-6)
    return float(np.exp(brentq(residual, np.log(estimate / 3), np.log(estimate * 3), xtol=1e-13)))
