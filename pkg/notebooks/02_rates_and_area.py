# %% [markdown]
# # Conversion efficiency, pair rate and effective area
#
# The harmonic grows as P^2 z^2 and the cascaded pair rate as P^2 z^4. The
# same efficiency formula, run backwards, turns a measured SHG peak into an
# effective area.

# %%
from cascadepairs.experiment import default_config
from cascadepairs.nonlinear import effective_area_from_peak, shg_normalized_efficiency, shg_power
from cascadepairs.photonstream import (
    coincidence_rate_model, coupling_share, generated_pair_rate, singles_rate_model,
)

cfg = default_config()
dev, chain = cfg.device, cfg.chain
z = dev.grating.interaction_length
eta = shg_normalized_efficiency(dev)
print(f"normalized efficiency: {eta:.2f} /W/m^2 ({eta * 1e-4 * 100:.3f} %/W/cm^2)")

# %%
for p_mw in (20, 50, 93, 150):
    p = p_mw * 1e-3
    p2w = shg_power(dev, p * coupling_share(dev), z)
    print(f"{p_mw:4d} mW  SHG {p2w * 1e6:7.2f} uW  pairs {generated_pair_rate(dev, chain, p):9.3g} /s  "
          f"detected coincidences {coincidence_rate_model(dev, chain, p):6.1f} /s")

# %% [markdown]
# Singles are dominated by the linear background; pair photons add a small
# quadratic part.

# %%
for p_mw in (0, 93, 180):
    s, i = singles_rate_model(dev, chain, p_mw * 1e-3)
    print(f"{p_mw:4d} mW  signal {s:9.0f} /s  idler {i:9.0f} /s")

# %%
peak = eta * z ** 2
print(f"peak P_2w/P_w^2 = {peak:.4e} /W -> A_eff = {effective_area_from_peak(peak, dev, z):.6f} um^2")
print(f"half that peak -> A_eff = {effective_area_from_peak(peak / 2, dev, z):.3f} um^2")
