# %% [markdown]
# # Pump-power sweep
#
# Net coincidences should grow as P^2 while the background-limited CAR stays
# flat, since accidentals scale as the product of two linear singles rates.
# Shortened runs keep this quick; the acceptance suite uses 60 s x 5 seeds.

# %%
from cascadepairs.experiment import default_config, run_power_sweep

cfg = default_config()
sweep = run_power_sweep(cfg, duration=10.0, seeds=(1, 2))

# %%
for row in sweep.rows():
    print(f"{row['pump_power_mW']:5.0f} mW  net {row['net_rate_per_s']:6.1f} /s  "
          f"CAR {row['car']:.3f} +/- {row['car_err']:.3f}  "
          f"singles {row['singles_signal_per_s']:8.0f} / {row['singles_idler_per_s']:8.0f} /s")

# %%
f = sweep.fits
print(f"coincidence exponent {f['coincidence_exponent']:.3f} +/- {f['coincidence_exponent_err']:.3f}")
print(f"CAR constant {f['car_constant']:.3f} +/- {f['car_constant_err']:.3f}, "
      f"slope {f['car_slope_per_W']:.3f} +/- {f['car_slope_err']:.3f} /W")
print(f"quadratic share of singles at max power: {f['singles_signal_quadratic_share']:+.4f}, "
      f"{f['singles_idler_quadratic_share']:+.4f}")
