"""
Temperature-dependent refractive index of the poled substrate.

The index is a two-pole Sellmeier form with an infrared correction term,

    n0(lam)^2 = A + B / (lam^2 - C^2) + D / (lam^2 - E^2) - F lam^2,

with lam in microns, plus a wavelength-independent thermo-optic polynomial
about a reference temperature and a calibration offset that scales with
optical frequency:

    n(lam, T) = n0(lam) + t1 (T - T0) + t2 (T - T0)^2 + offset * lam_a / lam

The offset is the index correction at the anchor wavelength ``lam_a``.
Because it grows with frequency it shifts the harmonic index more than the
fundamental index, which is what lets it absorb residual phase-matching
error (an offset constant in wavelength would cancel out of the mismatch).
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import bisect

from .errors import CalibrationError, DomainError

TRANSPARENCY_WINDOW_UM = (0.35, 5.0)

OFFSET_SEARCH_HALF_WIDTH = 0.05
OFFSET_TOLERANCE = 1e-14
MISMATCH_TOLERANCE = 1e-6  # m^-1, already phase-matched short circuit


@dataclass(frozen=True)
class DispersionModel:
    """Sellmeier-form index model with thermo-optic and calibration terms.

    Parameters
    ----------
    sellmeier_coefficients : tuple of float
        ``(A, B, C, D, E, F)``; B, D in um^2, C, E in um, F in um^-2.
    thermo_optic_coefficients : tuple of float
        ``(t1, t2)`` in K^-1 and K^-2.
    reference_temperature : float
        Temperature (deg C) at which the Sellmeier coefficients apply.
    index_offset : float
        Calibration correction at ``offset_anchor_um``.
    offset_anchor_um : float
        Anchor wavelength of the offset.
    valid_range : tuple of float
        Wavelength interval (um) where the model may be evaluated.
    valid_temperature : tuple of float
        Temperature interval (deg C) where the model may be evaluated.
    """

    sellmeier_coefficients: tuple
    thermo_optic_coefficients: tuple = (0.0, 0.0)
    reference_temperature: float = 24.5
    index_offset: float = 0.0
    offset_anchor_um: float = 1.55
    valid_range: tuple = TRANSPARENCY_WINDOW_UM
    valid_temperature: tuple = (0.0, 200.0)

    def __post_init__(self):
        object.__setattr__(self, "sellmeier_coefficients",
                           tuple(float(v) for v in self.sellmeier_coefficients))
        object.__setattr__(self, "thermo_optic_coefficients",
                           tuple(float(v) for v in self.thermo_optic_coefficients))
        object.__setattr__(self, "valid_range", tuple(float(v) for v in self.valid_range))
        object.__setattr__(self, "valid_temperature",
                           tuple(float(v) for v in self.valid_temperature))
        if len(self.sellmeier_coefficients) != 6:
            raise DomainError("sellmeier_coefficients must hold six values (A, B, C, D, E, F)")
        if len(self.thermo_optic_coefficients) != 2:
            raise DomainError("thermo_optic_coefficients must hold (t1, t2)")
        lo, hi = self.valid_range
        wlo, whi = TRANSPARENCY_WINDOW_UM
        if not (wlo <= lo < hi <= whi):
            raise DomainError(
                f"valid_range {self.valid_range} must lie inside the transparency "
                f"window {TRANSPARENCY_WINDOW_UM} um")
        tlo, thi = self.valid_temperature
        if not tlo < thi:
            raise DomainError(f"valid_temperature {self.valid_temperature} is empty")
        _, _, pole1, _, pole2, _ = self.sellmeier_coefficients
        for pole in (abs(pole1), abs(pole2)):
            if lo <= pole <= hi:
                raise DomainError(f"Sellmeier pole at {pole} um lies inside valid_range")
        grid = np.linspace(lo, hi, 257)
        n2 = _sellmeier_n2(self.sellmeier_coefficients, grid)
        if not np.all(np.isfinite(n2)) or np.any(n2 <= 1.0):
            raise DomainError("Sellmeier form must give n > 1 across valid_range")


def _sellmeier_n2(coefficients, wavelength):
    a, b, c, d, e, f = coefficients
    lam2 = wavelength * wavelength
    return a + b / (lam2 - c * c) + d / (lam2 - e * e) - f * lam2


def sellmeier_index(model, wavelength):
    """Bare Sellmeier index at the reference temperature, no offset."""
    return np.sqrt(_sellmeier_n2(model.sellmeier_coefficients, np.asarray(wavelength, float)))


def _check_domain(model, wavelength, temperature):
    lo, hi = model.valid_range
    lam = np.asarray(wavelength, dtype=float)
    if np.any(~np.isfinite(lam)) or np.any(lam < lo):
        raise DomainError(f"wavelength below valid_range lower bound {lo} um")
    if np.any(lam > hi):
        raise DomainError(f"wavelength above valid_range upper bound {hi} um")
    tlo, thi = model.valid_temperature
    if not np.isfinite(temperature) or temperature < tlo:
        raise DomainError(f"temperature below validity lower bound {tlo} C")
    if temperature > thi:
        raise DomainError(f"temperature above validity upper bound {thi} C")
    return lam


def refractive_index(model, wavelength, temperature):
    """Refractive index n(wavelength, temperature).

    ``wavelength`` is in microns and may be an array; ``temperature`` in deg C.
    """
    lam = _check_domain(model, wavelength, temperature)
    t1, t2 = model.thermo_optic_coefficients
    dt = temperature - model.reference_temperature
    n = np.sqrt(_sellmeier_n2(model.sellmeier_coefficients, lam))
    n = n + t1 * dt + t2 * dt * dt + model.index_offset * model.offset_anchor_um / lam
    return n if np.ndim(n) else float(n)


def calibrate_to_phase_match(model, target_wavelength, temperature, grating):
    """Return a copy of ``model`` whose QPM mismatch vanishes at the target.

    The offset is found by bisection over +/-0.05 index units. A model that is
    already phase-matched is returned unchanged.

    Raises
    ------
    CalibrationError
        If the mismatch does not change sign over the search interval.
    """
    from .qpm import phase_mismatch

    # evaluate once up front so domain errors surface as such
    current = phase_mismatch(model, grating, target_wavelength, temperature)
    if abs(current) <= MISMATCH_TOLERANCE:
        return model

    def mismatch(offset):
        return phase_mismatch(replace(model, index_offset=offset), grating,
                              target_wavelength, temperature)

    lo, hi = -OFFSET_SEARCH_HALF_WIDTH, OFFSET_SEARCH_HALF_WIDTH
    f_lo, f_hi = mismatch(lo), mismatch(hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise CalibrationError(
            f"phase mismatch keeps one sign for index offsets in [{lo}, {hi}] "
            f"(ranging {f_lo:.4g} to {f_hi:.4g} m^-1)")
    offset = bisect(mismatch, lo, hi, xtol=OFFSET_TOLERANCE, rtol=4 * np.finfo(float).eps,
                    maxiter=200)
    return replace(model, index_offset=offset)
