"""Compiled loops over sorted timestamp arrays."""

import numpy as np
from numba import njit


@njit(cache=True)
def dead_time_mask(times, dead_time, start, stop):
    """Keep-mask for a sorted array restricted to [start, stop).

    A click is dropped when it falls closer than dead_time to the last kept
    click; exact duplicates are always dropped so the result is strictly
    increasing.
    """
    n = times.shape[0]
    keep = np.zeros(n, dtype=np.bool_)
    last = -np.inf
    for k in range(n):
        t = times[k]
        if t < start or t >= stop:
            continue
        if t > last and t - last >= dead_time:
            keep[k] = True
            last = t
    return keep


@njit(cache=True)
def start_multistop_counts(starts, stops, lo, bin_width, n_bins):
    """Histogram of (stop - start) over [lo, lo + n_bins * bin_width) for every pairing."""
    counts = np.zeros(n_bins, dtype=np.int64)
    hi = lo + n_bins * bin_width
    m = stops.shape[0]
    j = 0
    for k in range(starts.shape[0]):
        s = starts[k]
        while j < m and stops[j] - s < lo:
            j += 1
        q = j
        while q < m:
            d = stops[q] - s
            if d >= hi:
                break
            b = int((d - lo) / bin_width)
            if b >= n_bins:
                b = n_bins - 1
            counts[b] += 1
            q += 1
    return counts
