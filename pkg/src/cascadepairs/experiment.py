"""
Experiment orchestration: configuration loading, SHG wavelength sweeps,
power sweeps, single operating-point runs, scaling fits and table output.
"""

import copy
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .constants import FWHM_PER_SIGMA, SPEED_OF_LIGHT as C0
from .dispersion import DispersionModel, calibrate_to_phase_match
from .errors import ConfigError, DomainError
from .fitting import power_law_fit, weighted_polyfit
from .nonlinear import NonlinearDevice, shg_normalized_efficiency, shg_power
from .photonstream import (
    MAX_PUMP_POWER, Arm, DetectorModel, FilterElement, MeasurementChain,
    calibrate_background, generate_run, singles_rate_model, write_clickstream,
)
from .qpm import QpmGrating, curve_fwhm, phase_mismatch, sinc2
from .tia import (
    analyze, build_histogram, car_curve, integration_window_bins, merge_histograms,
    write_histogram_csv, write_result_csv,
)


def _load_default_tree():
    text = resources.files("cascadepairs").joinpath("data/default_config.yaml").read_text()
    return yaml.safe_load(text)


def _merge_strict(base, override, path=""):
    """Overlay ``override`` on ``base``; keys absent from ``base`` are errors."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown configuration key '{where}'")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"'{where}' must be a mapping")
            merged[key] = _merge_strict(base[key], value, where)
        else:
            merged[key] = value
    return merged


def config_hash(tree):
    canonical = json.dumps(tree, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass(frozen=True)
class RunSpec:
    """Acquisition settings, SI units."""

    operating_power: float
    powers: tuple
    duration: float
    seeds: tuple
    bin_width: float
    window: tuple
    peak_exclusion_half_width: float
    workers: int = 1
    shg_span: float = 2.0
    shg_step: float = 0.005


@dataclass(frozen=True)
class ExperimentConfig:
    tree: dict
    dispersion: DispersionModel
    device: NonlinearDevice
    chain: MeasurementChain
    run: RunSpec
    awg_spacing_hz: float

    @property
    def sha256(self):
        return config_hash(self.tree)

    @property
    def expected_peak_fwhm(self):
        sigma = np.hypot(self.chain.signal.detector.jitter_sigma,
                         self.chain.idler.detector.jitter_sigma)
        return FWHM_PER_SIGMA * sigma


def _detector(section):
    return DetectorModel(efficiency=section["efficiency"], dark_rate=section["dark_rate_per_s"],
                         jitter_sigma=section["jitter_sigma_ps"] * 1e-12,
                         dead_time=section["dead_time_ns"] * 1e-9)


def _arm(chain, channel_nm, detector):
    floor = chain["extinction_floor"]
    awg = chain["awg"]
    return Arm(
        filters=(
            FilterElement("longpass", peak_transmission=chain["longpass"]["peak_transmission"],
                          cutoff_wavelength=chain["longpass"]["cutoff_nm"]),
            FilterElement("awg_channel", peak_transmission=awg["peak_transmission"],
                          center_wavelength=channel_nm, fwhm=awg["channel_fwhm_GHz"],
                          fwhm_unit="GHz", extinction_floor=floor),
            FilterElement("bandpass", peak_transmission=chain["bandpass"]["peak_transmission"],
                          center_wavelength=channel_nm, fwhm=chain["bandpass"]["fwhm_nm"],
                          extinction_floor=floor),
        ),
        detector=detector)


def build_config(tree):
    """Validate a full configuration tree and construct the model objects.

    Calibrates the dispersion offset and, when requested, the background.
    """
    try:
        return _build(tree)
    except ConfigError:
        raise
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def _build(tree):
    d, dv, ch, rn = tree["dispersion"], tree["device"], tree["chain"], tree["run"]
    model = DispersionModel(
        sellmeier_coefficients=d["sellmeier_coefficients"],
        thermo_optic_coefficients=(d["thermo_optic_per_K"], d["thermo_optic_per_K2"]),
        reference_temperature=d["reference_temperature_C"],
        index_offset=d["index_offset"], offset_anchor_um=d["offset_anchor_um"],
        valid_range=d["valid_range_um"], valid_temperature=d["valid_temperature_C"])
    grating = QpmGrating(poling_period=dv["poling_period_um"],
                         interaction_length=dv["interaction_length_cm"] * 1e-2,
                         sample_length=dv["sample_length_cm"] * 1e-2,
                         qpm_order=dv["qpm_order"])
    pump_um = dv["phase_match_wavelength_nm"] * 1e-3
    temperature = dv["temperature_C"]
    if d["calibrate_to_phase_match"]:
        model = calibrate_to_phase_match(model, pump_um, temperature, grating)
    device = NonlinearDevice(d33=dv["d33_pm_per_V"], effective_area=dv["effective_area_um2"],
                             grating=grating, dispersion=model, temperature=temperature,
                             pump_wavelength=pump_um, insertion_loss_db=dv["insertion_loss_dB"])

    awg = ch["awg"]
    if awg["channel_count"] < 2 or not awg["channel_spacing_GHz"] > 0:
        raise ConfigError("AWG needs at least two channels and a positive spacing")
    if not 0 < awg["channel_fwhm_GHz"] < awg["channel_spacing_GHz"]:
        raise ConfigError("AWG channel FWHM must be positive and below the channel spacing")
    spacing_hz = awg["channel_spacing_GHz"] * 1e9
    nu_p = C0 / (pump_um * 1e-6)
    nu_s = C0 / (ch["signal_channel_nm"] * 1e-9)
    nu_i = C0 / (ch["idler_channel_nm"] * 1e-9)
    if abs(0.5 * (nu_s + nu_i) - nu_p) > 0.5 * spacing_hz:
        raise ConfigError("signal and idler channels are not symmetric about the pump "
                          "frequency within half a channel spacing")

    dets = ch["detectors"]
    chain = MeasurementChain(
        signal=_arm(ch, ch["signal_channel_nm"], _detector(dets["signal"])),
        idler=_arm(ch, ch["idler_channel_nm"], _detector(dets["idler"])),
        delay=ch["idler_delay_ns"] * 1e-9)

    run = RunSpec(
        operating_power=rn["operating_power_mW"] * 1e-3,
        powers=tuple(p * 1e-3 for p in rn["powers_mW"]),
        duration=float(rn["duration_s"]),
        seeds=tuple(int(s) for s in rn["seeds"]),
        bin_width=rn["bin_width_ps"] * 1e-12,
        window=tuple(w * 1e-9 for w in rn["window_ns"]),
        peak_exclusion_half_width=rn["peak_exclusion_half_width_ns"] * 1e-9,
        workers=int(rn["workers"]),
        shg_span=float(rn["shg_span_nm"]), shg_step=float(rn["shg_step_nm"]))
    for p in (run.operating_power, *run.powers):
        if not 0 < p <= MAX_PUMP_POWER:
            raise ConfigError(f"pump power {p * 1e3:g} mW outside (0, {MAX_PUMP_POWER * 1e3:g}] mW")
    if not run.seeds:
        raise ConfigError("run.seeds must not be empty")
    if any(not 0 <= s < 2 ** 64 for s in run.seeds):
        raise ConfigError("seeds must be unsigned 64-bit integers")
    if run.workers < 1:
        raise ConfigError("run.workers must be at least 1")
    _check_duration(run.duration, run.bin_width)

    cfg = ExperimentConfig(tree, model, device, chain, run, spacing_hz)
    background = ch["background_per_s_per_W"]
    if background == "auto":
        window = integration_window_bins(cfg.expected_peak_fwhm, run.bin_width) * run.bin_width
        rate = calibrate_background(device, chain, run.operating_power,
                                    ch["background_target_car"], window)
        background = (rate, rate)
    elif np.isscalar(background):
        background = (float(background), float(background))
    return replace(cfg, chain=replace(chain, background_rate_per_watt=tuple(background)))


def _check_duration(duration, bin_width):
    if not duration > bin_width:
        raise ConfigError(f"duration {duration:g} s must exceed one bin width ({bin_width:g} s)")


def load_config(path=None, overrides=None):
    """Load a YAML configuration, overlaid on the shipped defaults.

    ``path=None`` gives the defaults. Unknown keys raise :class:`ConfigError`.
    """
    tree = _load_default_tree()
    if path is not None:
        user = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(user, dict):
            raise ConfigError("configuration file must hold a mapping")
        tree = _merge_strict(tree, user)
    if overrides:
        tree = _merge_strict(tree, overrides)
    return build_config(tree)


def default_config():
    return load_config()


def run_seed(seed, point_index):
    """Per-point 64-bit seed so sweep points never share a random stream."""
    state = np.random.SeedSequence([int(seed), int(point_index)]).generate_state(1, np.uint64)
    return int(state[0])


@dataclass
class SweepResult:
    """One row per input point plus fit summaries and a provenance block."""

    columns: dict
    fits: dict
    provenance: dict

    def __len__(self):
        return len(next(iter(self.columns.values())))

    def rows(self):
        names = list(self.columns)
        return [dict(zip(names, values)) for values in zip(*self.columns.values())]


def _provenance(config, command, **params):
    return {"command": command, "config_sha256": config.sha256, "version": __version__,
            "parameters": params, "config": config.tree}


def calibrate(config):
    """Calibration summary: dispersion offset, residual mismatch, background, rates."""
    from .photonstream import coincidence_rate_model, generated_pair_rate

    dev, chain, run = config.device, config.chain, config.run
    mismatch = phase_mismatch(dev.dispersion, dev.grating, dev.pump_wavelength, dev.temperature)
    singles = singles_rate_model(dev, chain, run.operating_power)
    return {
        "index_offset": dev.dispersion.index_offset,
        "residual_phase_mismatch_per_m": mismatch,
        "background_per_s_per_W": list(chain.background_rate_per_watt),
        "eta_norm_per_W_per_m2": shg_normalized_efficiency(dev),
        "shg_power_W": shg_power(dev, run.operating_power * 10 ** (-dev.insertion_loss_db / 20),
                                 dev.grating.interaction_length),
        "generated_pair_rate_per_s": generated_pair_rate(dev, chain, run.operating_power),
        "coincidence_rate_per_s": coincidence_rate_model(dev, chain, run.operating_power),
        "singles_per_s": list(singles),
        "operating_power_W": run.operating_power,
        "config_sha256": config.sha256,
    }


def run_shg_sweep(config, wavelengths=None, pump_power=None):
    """SHG ratio P_2w / P_w^2 (W^-1) across pump wavelengths (nm).

    The default grid spans +/- shg_span_nm about the phase-match wavelength
    with shg_step_nm spacing and contains the phase-match point exactly.
    """
    dev = config.device
    if wavelengths is None:
        center = dev.pump_wavelength * 1e3
        k = int(round(config.run.shg_span / config.run.shg_step))
        wavelengths = center + config.run.shg_step * np.arange(-k, k + 1)
    wavelengths = np.asarray(wavelengths, dtype=float)
    pump_power = config.run.operating_power if pump_power is None else pump_power
    length = dev.grating.interaction_length
    lam_um = wavelengths * 1e-3
    ratio = np.empty_like(lam_um)
    for j, lam in enumerate(lam_um):
        at = replace(dev, pump_wavelength=lam)
        ratio[j] = shg_power(at, pump_power, length) / pump_power ** 2
    dk = phase_mismatch(dev.dispersion, dev.grating, lam_um, dev.temperature)
    ratio *= sinc2(dk * length / 2.0)
    peak = int(np.argmax(ratio))
    fits = {"peak_wavelength_nm": float(wavelengths[peak]), "peak_ratio_per_W": float(ratio[peak]),
            "fwhm_nm": float(curve_fwhm(wavelengths, ratio))}
    prov = _provenance(config, "shg-sweep", pump_power_W=pump_power,
                       wavelengths_nm=[float(w) for w in wavelengths])
    return SweepResult({"wavelength_nm": wavelengths, "shg_ratio_per_W": ratio}, fits, prov)


@dataclass
class SinglePoint:
    histogram: object
    result: object
    singles: tuple
    streams: tuple = field(default=(), repr=False)
    provenance: dict = field(default_factory=dict)


def run_single_point(config, power=None, duration=None, seed=None, keep_streams=False):
    """Simulate, histogram and analyse one operating point."""
    run = config.run
    power = run.operating_power if power is None else power
    duration = run.duration if duration is None else duration
    seed = run.seeds[0] if seed is None else int(seed)
    _check_duration(duration, run.bin_width)
    signal, idler = generate_run(config.device, config.chain, power, duration, seed)
    hist = build_histogram(signal, idler, run.bin_width, run.window)
    result = analyze(hist, run.peak_exclusion_half_width)
    prov = _provenance(config, "single-point", power_W=power, duration_s=duration, seed=seed)
    return SinglePoint(hist, result, (signal.rate, idler.rate),
                       (signal, idler) if keep_streams else (), prov)


def _power_point(config, index, power, duration, seeds):
    run = config.run
    hists = []
    counts = np.zeros(2)
    for seed in seeds:
        signal, idler = generate_run(config.device, config.chain, power, duration,
                                     run_seed(seed, index))
        hists.append(build_histogram(signal, idler, run.bin_width, run.window))
        counts += (len(signal), len(idler))
    hist = merge_histograms(hists)
    return analyze(hist, run.peak_exclusion_half_width), counts, duration * len(seeds)


def _quadratic_share(powers, rates, errors):
    fit = weighted_polyfit(powers, rates, errors, 2)
    p_max = powers.max()
    total = fit.params[0] + fit.params[1] * p_max + fit.params[2] * p_max ** 2
    return fit.params[2] * p_max ** 2 / total, fit


def run_power_sweep(config, powers=None, duration=None, seeds=None, workers=None):
    """Full Monte Carlo chain at each pump power (W), seeds aggregated per point.

    Returns per-point net coincidences, CAR and singles, and fits: the
    log-log exponent of net coincidences, the constant and linear CAR fits,
    and linear plus quadratic singles fits per arm.
    """
    run = config.run
    powers = np.asarray(run.powers if powers is None else powers, dtype=float)
    duration = run.duration if duration is None else duration
    seeds = tuple(run.seeds if seeds is None else seeds)
    workers = run.workers if workers is None else workers
    if powers.size < 4:
        raise DomainError("a power sweep needs at least four points")
    for p in powers:
        if not 0 < p <= MAX_PUMP_POWER:
            raise DomainError(f"pump power {p * 1e3:g} mW outside (0, {MAX_PUMP_POWER * 1e3:g}] mW")
    _check_duration(duration, run.bin_width)

    args = [(config, k, float(p), duration, seeds) for k, p in enumerate(powers)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_power_point, *a) for a in args]
            points = []
            for a, fut in zip(args, futures):
                try:
                    points.append(fut.result())
                except Exception as exc:
                    raise RuntimeError(f"power point {a[2] * 1e3:g} mW failed: {exc}") from exc
    else:
        points = []
        for a in args:
            try:
                points.append(_power_point(*a))
            except Exception as exc:
                raise RuntimeError(f"power point {a[2] * 1e3:g} mW failed: {exc}") from exc

    results = [r for r, _, _ in points]
    exposure = np.array([t for _, _, t in points])
    singles = np.array([c for _, c, _ in points]) / exposure[:, None]
    singles_err = np.sqrt(np.array([c for _, c, _ in points])) / exposure[:, None]
    net = np.array([r.net_coincidences for r in results])
    net_err = np.array([r.net_err for r in results])
    car = np.array([r.car for r in results])
    car_err = np.array([r.car_err for r in results])

    columns = {
        "pump_power_mW": powers * 1e3,
        "net_coincidences": net, "net_err": net_err,
        "net_rate_per_s": net / exposure,
        "raw_coincidences": np.array([r.raw_coincidences for r in results]),
        "accidentals": np.array([r.accidentals for r in results]),
        "car": car, "car_err": car_err,
        "peak_fwhm_ps": np.array([r.peak_fwhm for r in results]) * 1e12,
        "peak_delay_ns": np.array([r.peak_delay for r in results]) * 1e9,
        "singles_signal_per_s": singles[:, 0], "singles_idler_per_s": singles[:, 1],
    }

    fits = {}
    positive = net > 0
    if positive.sum() >= 2:
        law = power_law_fit(powers[positive], net[positive], net_err[positive])
        fits.update(coincidence_exponent=float(law.params[1]),
                    coincidence_exponent_err=float(law.errors[1]),
                    coincidence_reduced_chi2=law.reduced_chi2)
    curve = car_curve(list(zip(powers, results)))
    fits.update(car_constant=curve.constant, car_constant_err=curve.constant_err,
                car_constant_reduced_chi2=curve.chi2 / max(len(curve.car) - 1, 1),
                car_slope_per_W=curve.slope, car_slope_err=curve.slope_err,
                car_loglog_slope=curve.loglog_slope)
    for k, label in enumerate(("signal", "idler")):
        line = weighted_polyfit(powers, singles[:, k], singles_err[:, k], 1)
        share, _ = _quadratic_share(powers, singles[:, k], singles_err[:, k])
        fits.update({f"singles_{label}_intercept_per_s": float(line.params[0]),
                     f"singles_{label}_slope_per_s_per_W": float(line.params[1]),
                     f"singles_{label}_linear_reduced_chi2": line.reduced_chi2,
                     f"singles_{label}_quadratic_share": float(share)})

    prov = _provenance(config, "power-sweep", powers_W=[float(p) for p in powers],
                       duration_s=duration, seeds=list(seeds))
    return SweepResult(columns, fits, prov)


def _table_comment(provenance):
    return (f"config_sha256={provenance['config_sha256']} version={provenance['version']} "
            f"command={provenance['command']}")


def write_sweep(result, out_dir, name):
    """Write ``<name>.csv``, ``<name>_fits.json`` and ``<name>.provenance.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = list(result.columns)
    table = out / f"{name}.csv"
    with table.open("w", encoding="ascii") as fh:
        fh.write(f"# {_table_comment(result.provenance)}\n")
        fh.write(",".join(names) + "\n")
        for row in zip(*result.columns.values()):
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
    _write_json(out / f"{name}_fits.json", result.fits)
    _write_json(out / f"{name}.provenance.json", result.provenance)
    return table


def write_single_point(point, out_dir, write_streams=False):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    comment = _table_comment(point.provenance)
    write_histogram_csv(point.histogram, out / "histogram.csv", comment)
    write_result_csv(point.result, out / "result.csv", comment)
    _write_json(out / "single_point.provenance.json", point.provenance)
    if write_streams and point.streams:
        for stream in point.streams:
            write_clickstream(stream, out / f"{stream.arm_label}.clicks")
    return out


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n")


def reproduce(provenance_path, out_dir):
    """Re-run the command recorded in a provenance sidecar into ``out_dir``."""
    prov = json.loads(Path(provenance_path).read_text())
    config = build_config(prov["config"])
    if config.sha256 != prov["config_sha256"]:
        raise ConfigError("embedded configuration does not match its recorded hash")
    params = prov["parameters"]
    command = prov["command"]
    if command == "shg-sweep":
        result = run_shg_sweep(config, params["wavelengths_nm"], params["pump_power_W"])
        return write_sweep(result, out_dir, "shg_sweep")
    if command == "power-sweep":
        result = run_power_sweep(config, params["powers_W"], params["duration_s"], params["seeds"])
        return write_sweep(result, out_dir, "power_sweep")
    if command == "single-point":
        point = run_single_point(config, params["power_W"], params["duration_s"], params["seed"])
        return write_single_point(point, out_dir)
    raise ConfigError(f"cannot reproduce command {command!r}")
