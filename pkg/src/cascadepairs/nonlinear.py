"""
SHG power law and cascaded pair-generation rate in the undepleted-pump regime.

Units follow the SI internally; the device record stores d33 in pm/V, the
effective area in um^2 and wavelengths in um for readability.
"""

from dataclasses import dataclass, replace

import numpy as np

from .constants import SPEED_OF_LIGHT as C0, VACUUM_PERMITTIVITY as EPS0
from .dispersion import refractive_index
from .errors import DomainError

MAX_RELATIVE_BANDWIDTH = 0.01
MAX_RELATIVE_DETUNING = 0.05


@dataclass(frozen=True)
class NonlinearDevice:
    """Waveguide with its nonlinear, geometric and material description.

    Parameters
    ----------
    d33 : float
        Nonlinear coefficient, pm/V.
    effective_area : float
        Effective interaction area, um^2.
    grating : QpmGrating
    dispersion : DispersionModel
    temperature : float
        Operating temperature, deg C.
    pump_wavelength : float
        Pump wavelength in um, normally the phase-match wavelength.
    insertion_loss_db : float
        Total fibre-to-fibre insertion loss, dB.
    """

    d33: float
    effective_area: float
    grating: object
    dispersion: object
    temperature: float
    pump_wavelength: float
    insertion_loss_db: float = 0.0

    def __post_init__(self):
        if not self.d33 > 0:
            raise DomainError("d33 must be positive")
        if not self.effective_area > 0:
            raise DomainError("effective_area must be positive")
        if self.insertion_loss_db < 0:
            raise DomainError("insertion_loss_db must be non-negative")

    @property
    def d_eff(self):
        """First-order QPM effective coefficient (2/pi) d33, in m/V."""
        return 2.0 / np.pi * self.d33 * 1e-12

    @property
    def pump_angular_frequency(self):
        return 2.0 * np.pi * C0 / (self.pump_wavelength * 1e-6)

    def indices(self, pump_wavelength=None):
        lam = self.pump_wavelength if pump_wavelength is None else pump_wavelength
        n_w = refractive_index(self.dispersion, lam, self.temperature)
        n_2w = refractive_index(self.dispersion, lam / 2.0, self.temperature)
        return n_w, n_2w


def shg_normalized_efficiency(device, pump_wavelength=None):
    """eta_norm = 2 pi^2 d_eff^2 / (lam^2 eps0 c n_2w^2 n_w A_eff), in W^-1 m^-2."""
    lam = device.pump_wavelength if pump_wavelength is None else pump_wavelength
    n_w, n_2w = device.indices(lam)
    area = device.effective_area * 1e-12
    lam_m = lam * 1e-6
    return 2.0 * np.pi ** 2 * device.d_eff ** 2 / (lam_m ** 2 * EPS0 * C0 * n_2w ** 2 * n_w * area)


def _check_power_and_length(device, pump_power, z):
    if pump_power < 0:
        raise DomainError("pump power must be non-negative")
    if z < 0:
        raise DomainError("propagation length z must be non-negative")
    if z > device.grating.sample_length:
        raise DomainError("propagation length z exceeds the sample length")


def shg_power(device, pump_power, z):
    """Phase-matched harmonic power eta_norm z^2 P^2 (W) after length z (m)."""
    _check_power_and_length(device, pump_power, z)
    return shg_normalized_efficiency(device) * z ** 2 * pump_power ** 2


def pair_rate(device, pump_power, z, signal_angular_frequency, bandwidth):
    """Cascaded pair rate (pairs/s) into a bandwidth (rad/s) around the signal.

    C = d_eff^2 eta_norm w_s^2 z^4 P^2 dw / (4 pi eps0 c^3 n_2w^2 n_w A_eff),
    valid for dw << 2 w and near-degenerate signal and idler.
    """
    _check_power_and_length(device, pump_power, z)
    w_p = device.pump_angular_frequency
    if bandwidth < 0:
        raise DomainError("bandwidth must be non-negative")
    if bandwidth >= MAX_RELATIVE_BANDWIDTH * w_p:
        raise DomainError(
            f"bandwidth {bandwidth:.4g} rad/s violates the narrow-band assumption "
            f"(must be < {MAX_RELATIVE_BANDWIDTH} x pump angular frequency)")
    if abs(signal_angular_frequency / w_p - 1.0) > MAX_RELATIVE_DETUNING:
        raise DomainError(
            "signal frequency violates the near-degenerate assumption "
            f"(must lie within {MAX_RELATIVE_DETUNING:.0%} of the pump frequency)")
    n_w, n_2w = device.indices()
    area = device.effective_area * 1e-12
    eta = shg_normalized_efficiency(device)
    prefactor = device.d_eff ** 2 * eta * signal_angular_frequency ** 2 / (
        4.0 * np.pi * EPS0 * C0 ** 3 * n_2w ** 2 * n_w * area)
    return prefactor * z ** 4 * pump_power ** 2 * bandwidth


def effective_area_from_peak(measured_peak, device, z):
    """Effective area (um^2) reproducing a measured P_2w / P_w^2 peak (W^-1).

    The device's own ``effective_area`` is ignored.
    """
    if not measured_peak > 0:
        raise DomainError("measured peak must be positive")
    unit_area = replace(device, effective_area=1.0)
    return shg_normalized_efficiency(unit_area) * z ** 2 / measured_peak
