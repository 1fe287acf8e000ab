# %% [markdown]
# # Click streams and the coincidence histogram
#
# One minute at 93 mW: simulate both detectors, histogram idler minus
# signal delays and pull out the peak, the accidental floor and the CAR.

# %%
import numpy as np

from cascadepairs.experiment import default_config
from cascadepairs.photonstream import generate_run
from cascadepairs.tia import analyze, build_histogram

cfg = default_config()
run = cfg.run
signal, idler = generate_run(cfg.device, cfg.chain, run.operating_power, run.duration, seed=1)
print(f"singles: signal {signal.rate:.0f} /s, idler {idler.rate:.0f} /s")

# %%
hist = build_histogram(signal, idler, run.bin_width, run.window)
res = analyze(hist, run.peak_exclusion_half_width)
print(f"peak at {res.peak_delay * 1e9:.3f} ns, FWHM {res.peak_fwhm * 1e12:.0f} ps")
print(f"accidentals/bin {res.accidentals_per_bin:.1f}, window {res.window_bins} bins")
print(f"net {res.net_coincidences:.0f} +/- {res.net_err:.0f} ({res.net_rate:.1f} /s), "
      f"CAR {res.car:.3f} +/- {res.car_err:.3f}")

# %% [markdown]
# Around the peak, counts against delay.

# %%
k = int(np.argmax(hist.counts))
for j in range(k - 8, k + 9):
    bar = "#" * int(hist.counts[j] / 20)
    print(f"{hist.centers[j] * 1e9:7.3f} ns {hist.counts[j]:5d} {bar}")
