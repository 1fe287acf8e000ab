"""
Time-interval-analyzer emulation: start-multi-stop histogramming of
idler-minus-signal delays, peak location, off-peak accidental estimate,
net coincidences and CAR with Poisson error propagation.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import start_multistop_counts
from .errors import AnalysisError, DomainError
from .fitting import power_law_fit, weighted_polyfit

INTEGRATION_HALF_WIDTH_FWHM = 2.0
RESULT_COLUMNS = ("peak_delay_s", "fwhm_s", "raw", "accidentals_per_bin", "net", "car", "car_err")


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    """Counts of (idler - signal) delays on a uniform grid starting at ``window_start`` (s)."""

    bin_width: float
    window_start: float
    counts: np.ndarray
    total_start_events: int
    duration: float = float("nan")

    @property
    def n_bins(self):
        return self.counts.size

    @property
    def edges(self):
        return self.window_start + self.bin_width * np.arange(self.n_bins + 1)

    @property
    def centers(self):
        return self.window_start + self.bin_width * (np.arange(self.n_bins) + 0.5)

    @property
    def window(self):
        return (self.window_start, self.window_start + self.n_bins * self.bin_width)

    def __eq__(self, other):
        if not isinstance(other, CoincidenceHistogram):
            return NotImplemented
        return (self.bin_width == other.bin_width and self.window_start == other.window_start
                and self.total_start_events == other.total_start_events
                and np.array_equal(self.counts, other.counts))


@dataclass(frozen=True)
class CoincidenceResult:
    """Analysis of one histogram. Counts are totals over the acquisition.

    ``car`` is net coincidences over accidentals in the integration window;
    with no accidentals it is ``inf`` and ``car_saturated`` is set.
    """

    peak_delay: float
    peak_fwhm: float
    raw_coincidences: float
    accidentals_per_bin: float
    net_coincidences: float
    car: float
    raw_err: float
    accidentals_per_bin_err: float
    net_err: float
    car_err: float
    window_bins: int
    car_saturated: bool = False
    duration: float = float("nan")

    @property
    def accidentals(self):
        return self.accidentals_per_bin * self.window_bins

    @property
    def net_rate(self):
        return self.net_coincidences / self.duration


def _bin_count(window, bin_width):
    lo, hi = window
    if not bin_width > 0:
        raise DomainError("bin_width must be positive")
    if not hi > lo:
        raise DomainError("window must satisfy start < stop")
    ratio = (hi - lo) / bin_width
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise DomainError("window length must be an integer multiple of bin_width")
    return n


def build_histogram(signal, idler, bin_width, window):
    """Start-multi-stop histogram: every idler click with lo <= t_i - t_s < hi counts."""
    n_bins = _bin_count(window, bin_width)
    counts = start_multistop_counts(signal.timestamps, idler.timestamps,
                                    float(window[0]), float(bin_width), n_bins)
    return CoincidenceHistogram(float(bin_width), float(window[0]), counts,
                                len(signal), float(signal.duration))


def merge_histograms(histograms):
    """Sum histograms that share a binning (different seeds or stream partitions)."""
    histograms = list(histograms)
    first = histograms[0]
    for h in histograms[1:]:
        if h.bin_width != first.bin_width or h.window_start != first.window_start \
                or h.n_bins != first.n_bins:
            raise DomainError("histograms must share bin width and window")
    return CoincidenceHistogram(
        first.bin_width, first.window_start,
        np.sum([h.counts for h in histograms], axis=0),
        sum(h.total_start_events for h in histograms),
        sum(h.duration for h in histograms))


def _half_max_crossing(counts, x, peak, level, step, bin_width):
    k = peak + step
    while True:
        if k < 0 or k >= counts.size:
            raise AnalysisError("peak does not fall to half maximum inside the window")
        if counts[k] <= level:
            break
        k += step
    inner = counts[k - step]
    drop = inner - counts[k]
    frac = (inner - level) / drop if drop > 0 else 0.5
    return x[k - step] + step * frac * bin_width


def analyze(hist, peak_exclusion_half_width):
    """Locate the coincidence peak and estimate net coincidences and CAR.

    The peak bin is the first maximum. Accidentals per bin are the mean of
    bins whose centres lie farther than ``peak_exclusion_half_width`` (s)
    from the peak bin. The FWHM is measured at half the height above that
    floor, and coincidences are integrated over +/-2 FWHM (whole bins) about
    the peak bin. ``peak_delay`` is the midpoint of the half-maximum crossings.
    """
    counts = np.asarray(hist.counts, dtype=float)
    if counts.size == 0:
        raise AnalysisError("histogram is empty")
    x = hist.centers
    bw = hist.bin_width
    peak = int(np.argmax(counts))
    off = np.abs(x - x[peak]) > peak_exclusion_half_width
    n_off = int(off.sum())
    if n_off == 0:
        raise AnalysisError("peak exclusion leaves no bins for the accidental estimate")
    off_total = counts[off].sum()
    floor = off_total / n_off
    floor_err = np.sqrt(off_total) / n_off

    level = floor + 0.5 * (counts[peak] - floor)
    left = _half_max_crossing(counts, x, peak, level, -1, bw)
    right = _half_max_crossing(counts, x, peak, level, +1, bw)
    fwhm = right - left

    half = integration_window_bins(fwhm, bw) // 2
    lo, hi = max(peak - half, 0), min(peak + half + 1, counts.size)
    n_win = hi - lo
    raw = counts[lo:hi].sum()
    acc = floor * n_win
    acc_err = floor_err * n_win
    net = raw - acc
    if acc > 0:
        car = net / acc
        car_err = np.sqrt(raw / acc ** 2 + (raw * acc_err / acc ** 2) ** 2)
        saturated = False
    else:
        car, car_err, saturated = float("inf"), float("nan"), True
    return CoincidenceResult(
        peak_delay=0.5 * (left + right), peak_fwhm=fwhm, raw_coincidences=raw,
        accidentals_per_bin=floor, net_coincidences=net, car=car,
        raw_err=np.sqrt(raw), accidentals_per_bin_err=floor_err,
        net_err=np.sqrt(raw + acc_err ** 2), car_err=car_err, window_bins=n_win,
        car_saturated=saturated, duration=hist.duration)


@dataclass(frozen=True)
class CarFit:
    """Constant, linear and power-law fits of CAR against pump power."""

    powers: np.ndarray
    car: np.ndarray
    car_err: np.ndarray
    constant: float
    constant_err: float
    residuals: np.ndarray
    chi2: float
    slope: float
    slope_err: float
    loglog_slope: float
    loglog_slope_err: float


def car_curve(results):
    """Fit CAR(P) from ``[(pump_power, CoincidenceResult), ...]``; saturated points are skipped."""
    results = list(results)
    if len(results) < 2:
        raise AnalysisError("need at least two points for a CAR curve")
    usable = [(p, r) for p, r in results if not r.car_saturated]
    if not usable:
        raise AnalysisError("every CAR in the curve is saturated")
    powers = np.array([p for p, _ in usable], dtype=float)
    car = np.array([r.car for _, r in usable], dtype=float)
    err = np.array([r.car_err for _, r in usable], dtype=float)
    sigma = err if np.all(err > 0) else None

    const = weighted_polyfit(powers, car, sigma, 0)
    slope = slope_err = float("nan")
    if len(usable) >= 2:
        line = weighted_polyfit(powers, car, sigma, 1)
        slope, slope_err = float(line.params[1]), float(line.errors[1])
    loglog = loglog_err = float("nan")
    positive = car > 0
    if positive.sum() >= 2:
        fit = power_law_fit(powers[positive], car[positive],
                            None if sigma is None else sigma[positive])
        loglog, loglog_err = float(fit.params[1]), float(fit.errors[1])
    return CarFit(powers, car, err, float(const.params[0]), float(const.errors[0]),
                  const.residuals, const.chi2, slope, slope_err, loglog, loglog_err)


def _write_rows(path, header, rows, comment=None):
    path = Path(path)
    with path.open("w", newline="", encoding="ascii") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_histogram_csv(hist, path, comment=None):
    """``delay_s,count`` table, one row per bin centre."""
    rows = ((f"{d:.12g}", int(c)) for d, c in zip(hist.centers, hist.counts))
    return _write_rows(path, ("delay_s", "count"), rows, comment)


def result_record(result):
    values = (result.peak_delay, result.peak_fwhm, result.raw_coincidences,
              result.accidentals_per_bin, result.net_coincidences, result.car, result.car_err)
    return dict(zip(RESULT_COLUMNS, values))


def write_result_csv(result, path, comment=None):
    record = result_record(result)
    return _write_rows(path, RESULT_COLUMNS, [[f"{record[k]:.12g}" for k in RESULT_COLUMNS]], comment)


def read_histogram_csv(path, bin_width=None):
    """Read a ``delay_s,count`` table back into a histogram (uniform bins assumed)."""
    with Path(path).open(encoding="ascii") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    data = np.array([[float(a), int(b)] for a, b in rows[1:]])
    centers, counts = data[:, 0], data[:, 1].astype(np.int64)
    if bin_width is None:
        bin_width = float(np.median(np.diff(centers)))
    return CoincidenceHistogram(bin_width, centers[0] - bin_width / 2, counts,
                                int(counts.sum()))


def integration_window_bins(fwhm, bin_width):
    """Number of whole bins in the +/-2 FWHM integration window."""
    return 2 * int(round(INTEGRATION_HALF_WIDTH_FWHM * fwhm / bin_width)) + 1
