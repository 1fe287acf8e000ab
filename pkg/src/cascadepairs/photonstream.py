"""
Monte Carlo synthesis of detector click streams for the two-arm measurement
chain: pair emission, filter and coupling losses, fibre delay, detector
efficiency, dark counts, a pump-proportional background, timing jitter and
dead time.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import dead_time_mask
from .constants import SPEED_OF_LIGHT as C0
from .errors import DomainError
from .nonlinear import pair_rate

MAX_PUMP_POWER = 0.2  # W, single-mode damage limit
DEFAULT_EXTINCTION_FLOOR = 1e-5
FILTER_KINDS = ("bandpass", "longpass", "awg_channel")
ARM_LABELS = ("signal", "idler")


@dataclass(frozen=True)
class FilterElement:
    """One spectral element of an arm. Wavelengths in nm; ``fwhm`` in ``fwhm_unit``."""

    kind: str
    peak_transmission: float = 1.0
    center_wavelength: float = None
    fwhm: float = None
    fwhm_unit: str = "nm"
    cutoff_wavelength: float = None
    extinction_floor: float = DEFAULT_EXTINCTION_FLOOR

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise DomainError(f"unknown filter kind {self.kind!r}")
        if not 0 < self.peak_transmission <= 1:
            raise DomainError("peak_transmission must lie in (0, 1]")
        if not 0 <= self.extinction_floor <= 1:
            raise DomainError("extinction_floor must lie in [0, 1]")
        if self.kind == "longpass":
            if self.cutoff_wavelength is None or not self.cutoff_wavelength > 0:
                raise DomainError("longpass filter needs a positive cutoff_wavelength")
        else:
            if self.center_wavelength is None or not self.center_wavelength > 0:
                raise DomainError(f"{self.kind} filter needs a positive center_wavelength")
            if self.fwhm is None or not self.fwhm > 0:
                raise DomainError(f"{self.kind} filter needs a positive fwhm")
            if self.fwhm_unit not in ("nm", "GHz"):
                raise DomainError("fwhm_unit must be 'nm' or 'GHz'")

    def transmission(self, wavelength):
        wavelength = np.asarray(wavelength, dtype=float)
        if self.kind == "longpass":
            return np.where(wavelength >= self.cutoff_wavelength, self.peak_transmission, 0.0)
        if self.fwhm_unit == "GHz":
            detuning = (C0 / wavelength - C0 / self.center_wavelength)  # GHz, with lambda in nm
        else:
            detuning = wavelength - self.center_wavelength
        shape = np.exp(-4.0 * np.log(2.0) * (detuning / self.fwhm) ** 2)
        return self.peak_transmission * np.maximum(shape, self.extinction_floor)

    def bandwidth_hz(self):
        """FWHM expressed as an optical frequency interval in Hz."""
        if self.kind == "longpass":
            raise DomainError("a longpass filter has no bandwidth")
        if self.fwhm_unit == "GHz":
            return self.fwhm * 1e9
        lam = self.center_wavelength * 1e-9
        return C0 * self.fwhm * 1e-9 / lam ** 2


@dataclass(frozen=True)
class DetectorModel:
    """Single-photon detector: efficiency, dark rate (1/s), Gaussian jitter sigma (s), dead time (s)."""

    efficiency: float
    dark_rate: float = 0.0
    jitter_sigma: float = 0.0
    dead_time: float = 0.0

    def __post_init__(self):
        if not 0 <= self.efficiency <= 1:
            raise DomainError("detector efficiency must lie in [0, 1]")
        if self.dark_rate < 0 or self.jitter_sigma < 0 or self.dead_time < 0:
            raise DomainError("dark_rate, jitter_sigma and dead_time must be non-negative")


@dataclass(frozen=True)
class Arm:
    filters: tuple
    detector: DetectorModel

    def __post_init__(self):
        object.__setattr__(self, "filters", tuple(self.filters))
        if not self.filters:
            raise DomainError("an arm needs at least one filter element")

    @property
    def channel(self):
        """The element that defines the arm's wavelength channel."""
        for kind in ("awg_channel", "bandpass"):
            for element in self.filters:
                if element.kind == kind:
                    return element
        raise DomainError("arm has no AWG channel or bandpass element")


@dataclass(frozen=True)
class MeasurementChain:
    """Signal and idler arms plus the idler fibre delay (s).

    ``background_rate_per_watt`` holds detected background counts per second
    per watt of launched pump for the (signal, idler) arms.
    """

    signal: Arm
    idler: Arm
    delay: float = 0.0
    background_rate_per_watt: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.delay < 0:
            raise DomainError("delay must be non-negative")
        bg = tuple(float(v) for v in self.background_rate_per_watt)
        if len(bg) != 2 or min(bg) < 0:
            raise DomainError("background_rate_per_watt needs two non-negative values")
        object.__setattr__(self, "background_rate_per_watt", bg)

    def arm(self, label):
        return self.signal if label == "signal" else self.idler

    @property
    def pair_bandwidth_hz(self):
        return self.signal.channel.bandwidth_hz()


@dataclass(frozen=True, eq=False)
class ClickStream:
    """Sorted click timestamps (s) of one arm over [0, duration)."""

    timestamps: np.ndarray
    duration: float
    seed: int
    arm_label: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.ascontiguousarray(self.timestamps, dtype=float)
        object.__setattr__(self, "timestamps", t)
        if self.arm_label not in ARM_LABELS:
            raise DomainError(f"arm_label must be one of {ARM_LABELS}")
        if not self.duration > 0:
            raise DomainError("duration must be positive")
        if t.size:
            if t[0] < 0 or t[-1] >= self.duration:
                raise DomainError("timestamps must lie in [0, duration)")
            if not np.all(t[1:] > t[:-1]):
                raise DomainError("timestamps must be strictly increasing")

    def __len__(self):
        return self.timestamps.size

    @property
    def rate(self):
        return len(self) / self.duration

    def __eq__(self, other):
        if not isinstance(other, ClickStream):
            return NotImplemented
        return (self.duration == other.duration and self.seed == other.seed
                and self.arm_label == other.arm_label
                and np.array_equal(self.timestamps, other.timestamps))


def arm_transmission(filters, wavelength):
    """Product of element transmissions at ``wavelength`` (nm)."""
    if not wavelength > 0:
        raise DomainError("wavelength must be positive")
    t = 1.0
    for element in filters:
        t = t * element.transmission(wavelength)
    return float(t)


def coupling_share(device):
    """Transmission of one facet when insertion loss splits evenly over both."""
    return 10.0 ** (-device.insertion_loss_db / 20.0)


def photon_survival(device, chain, label):
    """Probability that a pair photon produces a click on the given arm."""
    arm = chain.arm(label)
    return (arm_transmission(arm.filters, arm.channel.center_wavelength)
            * arm.detector.efficiency * coupling_share(device))


def generated_pair_rate(device, chain, pump_power):
    """Pairs/s emitted into the signal channel bandwidth for a launched pump power (W)."""
    in_guide = pump_power * coupling_share(device)
    signal_w = 2.0 * np.pi * C0 / (chain.signal.channel.center_wavelength * 1e-9)
    return pair_rate(device, in_guide, device.grating.interaction_length,
                     signal_w, 2.0 * np.pi * chain.pair_bandwidth_hz)


def coincidence_rate_model(device, chain, pump_power):
    """Expected detected true-coincidence rate (1/s)."""
    return (generated_pair_rate(device, chain, pump_power)
            * photon_survival(device, chain, "signal") * photon_survival(device, chain, "idler"))


def singles_rate_model(device, chain, pump_power):
    """Expected (signal, idler) singles rates: dark + background P + pair photons."""
    _check_pump(pump_power)
    pairs = generated_pair_rate(device, chain, pump_power)
    rates = []
    for k, label in enumerate(ARM_LABELS):
        arm = chain.arm(label)
        rates.append(arm.detector.dark_rate + chain.background_rate_per_watt[k] * pump_power
                     + pairs * photon_survival(device, chain, label))
    return tuple(rates)


def calibrate_background(device, chain, pump_power, target_car, window):
    """Symmetric background (counts s^-1 W^-1) giving ``target_car`` at ``pump_power``.

    Uses the flat-accidental model CAR = R_c / (r_s r_i window), where R_c is
    the true coincidence rate and r the singles rates, both in 1/s, and
    ``window`` the peak integration width (s).
    """
    if not (pump_power > 0 and target_car > 0 and window > 0):
        raise DomainError("pump_power, target_car and window must be positive")
    r_c = coincidence_rate_model(device, chain, pump_power)
    free = MeasurementChain(chain.signal, chain.idler, chain.delay, (0.0, 0.0))
    a_s, a_i = singles_rate_model(device, free, pump_power)
    product = r_c / (target_car * window)
    if product <= a_s * a_i:
        raise DomainError(
            f"CAR without background is already below {target_car}; no background fits")
    total = a_s + a_i
    x = 0.5 * (-total + np.sqrt(total * total - 4.0 * (a_s * a_i - product)))
    return x / pump_power


def _check_pump(pump_power):
    if pump_power < 0:
        raise DomainError("pump power must be non-negative")
    if pump_power > MAX_PUMP_POWER:
        raise DomainError(f"pump power exceeds the {MAX_PUMP_POWER} W damage limit")


def _sorted_uniform(rng, rate, duration):
    """Event times of a homogeneous Poisson process on [0, duration), already sorted."""
    n = rng.poisson(rate * duration)
    # normalized exponential spacings are the order statistics of n uniforms
    spacings = rng.standard_exponential(n + 1)
    times = np.cumsum(spacings[:-1])
    times *= duration / (times[-1] + spacings[-1]) if n else 0.0
    return times


def _finish(times, rng, detector, duration):
    if detector.jitter_sigma > 0:
        jitter = rng.standard_normal(times.size, dtype=np.float32)
        jitter *= np.float32(detector.jitter_sigma)
        times += jitter
    times.sort(kind="stable")
    return times[dead_time_mask(times, detector.dead_time, 0.0, duration)]


def generate_run(device, chain, pump_power, duration, seed):
    """Simulate one acquisition and return the (signal, idler) click streams.

    Pair emission is a homogeneous Poisson process at the cascaded pair rate;
    every photon of a pair is kept independently with its arm's survival
    probability; idler photons are delayed; dark and background counts are
    independent Poisson processes; all clicks are jittered and then thinned
    by the detector dead time. The output is a pure function of the inputs.

    Parameters
    ----------
    pump_power : float
        Launched pump power, W.
    duration : float
        Acquisition time, s.
    seed : int
        Unsigned 64-bit seed.
    """
    _check_pump(pump_power)
    if not duration > 0:
        raise DomainError("duration must be positive")
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise DomainError("seed must be an unsigned 64-bit integer")
    rng = np.random.default_rng(seed)

    rate = generated_pair_rate(device, chain, pump_power) if pump_power > 0 else 0.0
    emitted = _sorted_uniform(rng, rate, duration)
    keep_s = rng.random(emitted.size) < photon_survival(device, chain, "signal")
    keep_i = rng.random(emitted.size) < photon_survival(device, chain, "idler")
    pair_clicks = {"signal": emitted[keep_s], "idler": emitted[keep_i] + chain.delay}

    noise = {}
    for k, label in enumerate(ARM_LABELS):
        noise_rate = (chain.arm(label).detector.dark_rate
                      + chain.background_rate_per_watt[k] * pump_power)
        noise[label] = _sorted_uniform(rng, noise_rate, duration)

    streams = []
    for label in ARM_LABELS:
        times = np.concatenate([pair_clicks[label], noise[label]])
        times = _finish(times, rng, chain.arm(label).detector, duration)
        streams.append(ClickStream(times, duration, seed, label,
                                   {"pump_power_W": pump_power}))
    return tuple(streams)


def write_clickstream(stream, path):
    """Write the newline-delimited text format (12 significant digits)."""
    path = Path(path)
    with path.open("w", encoding="ascii") as fh:
        fh.write(f"# arm={stream.arm_label} seed={stream.seed} duration_s={stream.duration!r}\n")
        fh.writelines(f"{t:.12g}\n" for t in stream.timestamps.tolist())
    return path


def read_clickstream(path):
    """Parse a click-stream text file written by :func:`write_clickstream` or by hand."""
    header = {}
    values = []
    with Path(path).open("r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    key, _, value = token.partition("=")
                    header[key] = value
                continue
            values.append(float(line))
    missing = {"arm", "seed", "duration_s"} - header.keys()
    if missing:
        raise DomainError(f"click-stream header lacks {sorted(missing)}")
    return ClickStream(np.array(values, dtype=float), float(header["duration_s"]),
                       int(header["seed"]), header["arm"])
