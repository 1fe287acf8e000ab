import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascadepairs.errors import DomainError
from cascadepairs.photonstream import (
    Arm, ClickStream, DetectorModel, FilterElement, MeasurementChain, arm_transmission,
    coincidence_rate_model, generate_run, generated_pair_rate, photon_survival,
    read_clickstream, singles_rate_model, write_clickstream,
)
from cascadepairs.tia import build_histogram

C0 = 299792458.0


def simple_chain(efficiency=(0.5, 0.5), dark=0.0, jitter=0.0, dead_time=0.0, delay=11e-9,
                 background=(0.0, 0.0)):
    arms = []
    for eff, center in zip(efficiency, (1542.9, 1560.6)):
        bpf = FilterElement("bandpass", 1.0, center_wavelength=center, fwhm=0.4)
        arms.append(Arm((bpf,), DetectorModel(eff, dark, jitter, dead_time)))
    return MeasurementChain(arms[0], arms[1], delay, background)


def test_channel_filter_examples():
    awg = FilterElement("awg_channel", 0.5, center_wavelength=1542.9, fwhm=50.0, fwhm_unit="GHz")
    nu0 = C0 / 1542.9  # GHz with wavelengths in nm
    assert awg.transmission(1542.9) == pytest.approx(0.5)
    assert awg.transmission(C0 / (nu0 + 25.0)) == pytest.approx(0.25, rel=1e-6)
    bpf = FilterElement("bandpass", 0.8, center_wavelength=1542.9, fwhm=0.5)
    assert bpf.transmission(1543.15) == pytest.approx(0.4, rel=1e-12)
    assert bpf.transmission(1600.0) == pytest.approx(0.8e-5)
    lp = FilterElement("longpass", 0.9, cutoff_wavelength=1100.0)
    assert lp.transmission(1550.0) == 0.9 and lp.transmission(775.0) == 0.0


def test_pump_harmonic_rejected(config):
    arm = config.chain.signal
    floorless = [replace(f, extinction_floor=0.0) for f in arm.filters]
    assert arm_transmission(floorless, 1551.71 / 2) < 1e-6
    assert arm_transmission(arm.filters, 1551.71 / 2) < 1e-6


def test_filter_invariants():
    with pytest.raises(DomainError):
        FilterElement("notch", center_wavelength=1550.0, fwhm=1.0)
    with pytest.raises(DomainError):
        FilterElement("bandpass", 1.5, center_wavelength=1550.0, fwhm=1.0)
    with pytest.raises(DomainError):
        FilterElement("bandpass", center_wavelength=1550.0, fwhm=0.0)
    with pytest.raises(DomainError):
        arm_transmission([], 0.0)


def test_detector_invariants():
    with pytest.raises(DomainError):
        DetectorModel(1.2)
    with pytest.raises(DomainError):
        DetectorModel(0.5, dark_rate=-1.0)


def test_nothing_in_nothing_out(device):
    chain = simple_chain()
    s, i = generate_run(device, chain, 0.0, 1.0, seed=3)
    assert len(s) == 0 and len(i) == 0


def test_dark_counts_are_poisson(device):
    chain = simple_chain(dark=1e5)
    s, i = generate_run(device, chain, 0.0, 1.0, seed=11)
    for stream in (s, i):
        assert abs(len(stream) - 1e5) < 4 * math.sqrt(1e5)


def test_pair_thinning_matches_model(device):
    chain = simple_chain(efficiency=(0.3, 0.6))
    power = 0.1
    expected = coincidence_rate_model(device, chain, power)
    counts = []
    for seed in range(10):
        s, i = generate_run(device, chain, power, 0.2, seed)
        # bin 10 spans 10.5-11.5 ns, centred on the delay
        hist = build_histogram(s, i, 1e-9, (0.5e-9, 20.5e-9))
        counts.append(hist.counts[10])
    counts = np.array(counts, dtype=float)
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() / 0.2 - expected) < 3 * se / 0.2


def test_survival_is_filter_detector_and_facet(device):
    chain = simple_chain(efficiency=(0.3, 0.6))
    facet = 10 ** (-device.insertion_loss_db / 20)
    assert photon_survival(device, chain, "signal") == pytest.approx(0.3 * facet)
    assert photon_survival(device, chain, "idler") == pytest.approx(0.6 * facet)


def test_singles_model_at_zero_power(config):
    chain = config.chain
    s, i = singles_rate_model(config.device, chain, 0.0)
    assert s == chain.signal.detector.dark_rate and i == chain.idler.detector.dark_rate


def test_singles_model_is_linear_plus_pairs(config):
    device, chain = config.device, config.chain
    for power in (0.03, 0.09, 0.15):
        pairs = generated_pair_rate(device, chain, power)
        for k, label in enumerate(("signal", "idler")):
            expected = (chain.arm(label).detector.dark_rate
                        + chain.background_rate_per_watt[k] * power
                        + pairs * photon_survival(device, chain, label))
            assert singles_rate_model(device, chain, power)[k] == pytest.approx(expected, rel=1e-12)


def test_monte_carlo_singles_match_model(config):
    # dead time removed so the model is exact
    chain = config.chain
    chain = replace(chain,
                    signal=replace(chain.signal, detector=replace(chain.signal.detector, dead_time=0.0)),
                    idler=replace(chain.idler, detector=replace(chain.idler.detector, dead_time=0.0)))
    s, i = generate_run(config.device, chain, 0.093, 2.0, seed=5)
    model = singles_rate_model(config.device, chain, 0.093)
    for stream, rate in zip((s, i), model):
        n_expected = rate * 2.0
        assert abs(len(stream) - n_expected) < 3 * math.sqrt(n_expected)


def test_runs_are_deterministic(config):
    a = generate_run(config.device, config.chain, 0.08, 0.5, seed=42)
    b = generate_run(config.device, config.chain, 0.08, 0.5, seed=42)
    c = generate_run(config.device, config.chain, 0.08, 0.5, seed=43)
    assert a[0] == b[0] and a[1] == b[1]
    assert a[0].timestamps.tobytes() == b[0].timestamps.tobytes()
    assert not np.array_equal(a[0].timestamps, c[0].timestamps)


def test_run_preconditions(device):
    chain = simple_chain()
    with pytest.raises(DomainError, match="damage"):
        generate_run(device, chain, 0.25, 1.0, 1)
    with pytest.raises(DomainError):
        generate_run(device, chain, 0.1, 0.0, 1)
    with pytest.raises(DomainError):
        generate_run(device, chain, 0.1, 1.0, -1)


@settings(max_examples=30, deadline=None)
@given(power=st.floats(0.0, 0.2), dark=st.floats(0.0, 2e4), dead_time=st.floats(0.0, 1e-6),
       jitter=st.floats(0.0, 1e-9), duration=st.floats(1e-3, 0.05),
       seed=st.integers(0, 2 ** 64 - 1))
def test_stream_invariants(device, power, dark, dead_time, jitter, duration, seed):
    chain = simple_chain(dark=dark, jitter=jitter, dead_time=dead_time, background=(1e4, 2e4))
    for stream in generate_run(device, chain, power, duration, seed):
        t = stream.timestamps
        assert np.all((t >= 0) & (t < duration))
        assert np.all(np.diff(t) > 0)
        assert np.all(np.diff(t) >= dead_time)


def test_clickstream_rejects_bad_input():
    with pytest.raises(DomainError):
        ClickStream(np.array([0.2, 0.1]), 1.0, 0, "signal")
    with pytest.raises(DomainError):
        ClickStream(np.array([0.1, 0.1]), 1.0, 0, "signal")
    with pytest.raises(DomainError):
        ClickStream(np.array([0.1, 1.0]), 1.0, 0, "signal")
    with pytest.raises(DomainError):
        ClickStream(np.array([0.1]), 1.0, 0, "pump")


def test_text_round_trip(tmp_path, config):
    s, _ = generate_run(config.device, config.chain, 0.05, 0.01, seed=9)
    path = write_clickstream(s, tmp_path / "signal.clicks")
    lines = path.read_text().splitlines()
    assert lines[0] == f"# arm=signal seed=9 duration_s={s.duration!r}"
    back = read_clickstream(path)
    assert back.arm_label == "signal" and back.seed == 9 and back.duration == s.duration
    assert np.allclose(back.timestamps, s.timestamps, rtol=1e-11, atol=0)


def test_read_hand_written_file(tmp_path):
    path = tmp_path / "idler.clicks"
    path.write_text("# arm=idler seed=0 duration_s=1.0\n1.5e-08\n\n0.25\n")
    stream = read_clickstream(path)
    assert stream.timestamps.tolist() == [1.5e-08, 0.25]
