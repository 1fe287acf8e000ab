import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascadepairs.errors import AnalysisError, DomainError
from cascadepairs.photonstream import (
    Arm, ClickStream, DetectorModel, FilterElement, MeasurementChain, generate_run,
)
from cascadepairs.tia import (
    RESULT_COLUMNS, CoincidenceHistogram, CoincidenceResult, analyze, build_histogram, car_curve,
    merge_histograms, read_histogram_csv, write_histogram_csv, write_result_csv,
)

BW = 50e-12
WINDOW = (0.0, 50e-9)


def stream(times, label, duration=1.0, seed=0):
    return ClickStream(np.asarray(times, dtype=float), duration, seed, label)


def uniform_stream(rng, rate, duration, label):
    t = np.unique(rng.uniform(0, duration, rng.poisson(rate * duration)))
    return stream(t, label, duration)


def all_pairs_histogram(starts, stops, lo, bin_width, n_bins):
    """Every (start, stop) pairing, evaluated without any pointer bookkeeping."""
    hi = lo + n_bins * bin_width
    d = np.subtract.outer(stops, starts).ravel()
    d = d[(d >= lo) & (d < hi)]
    b = np.minimum(((d - lo) / bin_width).astype(np.int64), n_bins - 1)
    return np.bincount(b, minlength=n_bins)


def synthetic_peak(n_bins=1000, floor=20.0, height=400.0, center=220, sigma_bins=2.1):
    k = np.arange(n_bins)
    counts = floor + height * np.exp(-0.5 * ((k - center) / sigma_bins) ** 2)
    return CoincidenceHistogram(BW, 0.0, np.round(counts).astype(np.int64), 10 ** 6, 60.0)


def make_result(car, err, saturated=False):
    return CoincidenceResult(11e-9, 250e-12, 100.0, 1.0, 50.0, car, 10.0, 0.1, 10.0, err, 21,
                             saturated, 60.0)


def test_empty_idler_stream():
    s = stream([0.1, 0.2], "signal")
    i = stream([], "idler")
    hist = build_histogram(s, i, BW, WINDOW)
    assert hist.counts.sum() == 0 and hist.n_bins == 1000


def test_single_pair_lands_in_its_bin():
    s = stream([0.5], "signal")
    i = stream([0.5 + 11.025e-9], "idler")
    hist = build_histogram(s, i, BW, WINDOW)
    assert hist.counts.sum() == 1
    assert np.argmax(hist.counts) == 220
    assert hist.edges[220] <= 11.025e-9 < hist.edges[221]


def test_literal_double_loop():
    rng = np.random.default_rng(1)
    starts = np.sort(rng.uniform(0, 1e-6, 40))
    stops = np.sort(rng.uniform(0, 1e-6, 60))
    expected = np.zeros(100, dtype=np.int64)
    for a in starts:
        for b in stops:
            d = b - a
            if 0.0 <= d < 100 * 1e-9:
                expected[min(int(d / 1e-9), 99)] += 1
    hist = build_histogram(stream(starts, "signal", 1e-5), stream(stops, "idler", 1e-5),
                           1e-9, (0.0, 100e-9))
    assert np.array_equal(hist.counts, expected)


@settings(max_examples=40, deadline=None)
@given(n_s=st.integers(0, 1000), n_i=st.integers(0, 1000), lo_bins=st.integers(-200, 200),
       n_bins=st.integers(1, 400), seed=st.integers(0, 2 ** 32))
def test_kernel_equals_all_pairs(n_s, n_i, lo_bins, n_bins, seed):
    rng = np.random.default_rng(seed)
    duration = 2e-6
    starts = np.unique(rng.uniform(0, duration, n_s))
    stops = np.unique(rng.uniform(0, duration, n_i))
    bw = 1e-9
    lo = lo_bins * bw
    hist = build_histogram(stream(starts, "signal", duration), stream(stops, "idler", duration),
                           bw, (lo, lo + n_bins * bw))
    assert np.array_equal(hist.counts, all_pairs_histogram(starts, stops, lo, bw, n_bins))


def test_shift_invariance():
    rng = np.random.default_rng(4)
    tick = 2.0 ** -40
    s = np.unique(rng.integers(0, 2 ** 38, 3000)) * tick
    i = np.unique(rng.integers(0, 2 ** 38, 3000)) * tick
    shift = 2.0 ** -5
    a = build_histogram(stream(s, "signal"), stream(i, "idler"), 1e-9, (0.0, 1e-6))
    b = build_histogram(stream(s + shift, "signal"), stream(i + shift, "idler"), 1e-9, (0.0, 1e-6))
    assert a == b


def test_flat_histogram_expectation():
    # independent Poisson streams: mean count per bin is r_s r_i T bw
    r, duration, bw = 5e4, 2.0, 1e-9
    means = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        s = uniform_stream(rng, r, duration, "signal")
        i = uniform_stream(rng, r, duration, "idler")
        means.append(build_histogram(s, i, bw, (0.0, 100e-9)).counts.mean())
    means = np.array(means)
    expected = r * r * duration * bw
    se = means.std(ddof=1) / math.sqrt(means.size)
    assert abs(means.mean() - expected) < 3 * se


def test_accidental_estimate_unbiased_on_simulated_peak(device):
    arms = []
    for center in (1542.9, 1560.6):
        bpf = FilterElement("bandpass", 1.0, center_wavelength=center, fwhm=0.4)
        arms.append(Arm((bpf,), DetectorModel(0.1, 5e4, 75e-12, 0.0)))
    chain = MeasurementChain(arms[0], arms[1], 11e-9, (1e5, 1e5))
    floors, expected = [], []
    for seed in range(20):
        s, i = generate_run(device, chain, 0.1, 1.0, seed)
        res = analyze(build_histogram(s, i, BW, WINDOW), 1.25e-9)
        floors.append(res.accidentals_per_bin)
        expected.append(len(s) * len(i) * BW / 1.0)
    floors, expected = np.array(floors), np.array(expected)
    diff = floors - expected
    assert abs(diff.mean()) < 3 * diff.std(ddof=1) / math.sqrt(diff.size)


def test_single_bin_peak_saturates():
    counts = np.zeros(1000, dtype=np.int64)
    counts[220] = 50
    res = analyze(CoincidenceHistogram(BW, 0.0, counts, 50, 1.0), 1.25e-9)
    assert res.car_saturated and math.isinf(res.car)
    assert res.raw_coincidences == 50 and res.net_coincidences == 50


def test_structureless_histogram_has_no_peak():
    counts = np.full(1000, 7, dtype=np.int64)
    with pytest.raises(AnalysisError):
        analyze(CoincidenceHistogram(BW, 0.0, counts, 100, 1.0), 1.25e-9)


def test_poisson_flat_histogram_has_no_net_excess():
    rng = np.random.default_rng(3)
    counts = rng.poisson(1e4, 1000)
    counts[:5] = 0  # keep the maximum away from the window edge
    counts[-5:] = 0
    res = analyze(CoincidenceHistogram(BW, 0.0, counts, 10 ** 6, 1.0), 1.25e-9)
    assert abs(res.net_coincidences) < 3 * res.net_err


def test_synthetic_peak_analysis():
    hist = synthetic_peak()
    res = analyze(hist, 1.25e-9)
    assert res.peak_delay == pytest.approx(hist.centers[220], abs=1e-15)
    assert res.peak_fwhm == pytest.approx(2.1 * 2.3548 * BW, rel=0.05)
    assert res.accidentals_per_bin == pytest.approx(20.0, abs=0.01)
    assert res.window_bins == 2 * round(2 * res.peak_fwhm / BW) + 1
    expected_raw = hist.counts[220 - res.window_bins // 2: 221 + res.window_bins // 2].sum()
    assert res.raw_coincidences == expected_raw
    assert res.car == pytest.approx(res.net_coincidences / res.accidentals, rel=1e-12)


def test_peak_at_window_edge_is_reported():
    hist = synthetic_peak(center=1)
    with pytest.raises(AnalysisError, match="half maximum"):
        analyze(hist, 1.25e-9)


def test_histogram_binning_errors():
    s, i = stream([0.1], "signal"), stream([0.1], "idler")
    with pytest.raises(DomainError):
        build_histogram(s, i, 30e-12, (0.0, 1e-9 + 1e-12))
    with pytest.raises(DomainError):
        build_histogram(s, i, 50e-12, (1e-9, 0.0))


def test_merge_adds_counts():
    a, b = synthetic_peak(), synthetic_peak(floor=5.0)
    merged = merge_histograms([a, b])
    assert np.array_equal(merged.counts, a.counts + b.counts)
    assert merged.duration == 120.0


def test_car_curve_constant_data():
    results = [(p, make_result(0.7, 0.02)) for p in (0.02, 0.06, 0.1, 0.14)]
    fit = car_curve(results)
    assert fit.constant == pytest.approx(0.7, rel=1e-12)
    assert np.allclose(fit.residuals, 0.0, atol=1e-12)
    assert fit.constant_err == pytest.approx(0.02 / 2, rel=1e-9)
    assert fit.slope == pytest.approx(0.0, abs=1e-9)


def test_car_curve_skips_saturated_points():
    results = [(0.02, make_result(math.inf, math.nan, True)),
               (0.06, make_result(0.8, 0.05)), (0.1, make_result(0.6, 0.05))]
    fit = car_curve(results)
    assert fit.powers.tolist() == [0.06, 0.1]
    with pytest.raises(AnalysisError):
        car_curve([(0.02, make_result(math.inf, math.nan, True))] * 3)
    with pytest.raises(AnalysisError):
        car_curve([(0.02, make_result(0.7, 0.1))])


def test_background_free_car_falls_as_inverse_power(device):
    # with only pair photons, accidentals grow as P^4 and true coincidences
    # as P^2, so CAR scales as P^-2
    arms = []
    for center in (1542.9, 1560.6):
        bpf = FilterElement("bandpass", 1.0, center_wavelength=center, fwhm=0.4)
        arms.append(Arm((bpf,), DetectorModel(1.0, 0.0, 1e-9, 0.0)))
    chain = MeasurementChain(arms[0], arms[1], 50e-9, (0.0, 0.0))
    results = []
    for power in (0.1, 0.13, 0.16, 0.2):
        s, i = generate_run(device, chain, power, 2.0, seed=int(power * 1000))
        results.append((power, analyze(build_histogram(s, i, 1e-9, (0.0, 200e-9)), 20e-9)))
    fit = car_curve(results)
    assert fit.loglog_slope == pytest.approx(-2.0, abs=0.2)


def test_csv_formats(tmp_path):
    hist = synthetic_peak()
    path = write_histogram_csv(hist, tmp_path / "h.csv", comment="config_sha256=abc")
    lines = path.read_text().splitlines()
    assert lines[0] == "# config_sha256=abc" and lines[1] == "delay_s,count"
    assert len(lines) == 2 + hist.n_bins
    back = read_histogram_csv(path)
    assert np.array_equal(back.counts, hist.counts)
    assert back.window_start == pytest.approx(0.0, abs=1e-18)

    res_path = write_result_csv(analyze(hist, 1.25e-9), tmp_path / "r.csv")
    header, row = res_path.read_text().splitlines()
    assert header == ",".join(RESULT_COLUMNS) and len(row.split(",")) == len(RESULT_COLUMNS)
