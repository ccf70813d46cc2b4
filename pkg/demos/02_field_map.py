# %% [markdown]
# # Power along a line
#
# Sampling the received power between the two chargers shows how sharply
# it oscillates with position.  The same grid is what
# `wptvec field-map` writes to CSV.

# %%
import numpy as np

from wptvec import toy_superposition
from wptvec.model import PhysicalParams, phasor_matrix

unit = PhysicalParams.unit()
dep = toy_superposition()
xs = np.linspace(0.05, 1.95, 39)
pts = np.stack([xs, np.zeros_like(xs)], axis=1)
power = unit.gamma * np.abs(np.ones(2) @ phasor_matrix(dep.chargers, pts, unit)) ** 2

# %%
for x, p in zip(xs, power):
    bar = "#" * int(50 * min(p, 12) / 12)
    print(f"x={x:4.2f} {p:9.4f} {bar}")

# %% [markdown]
# The peak at x = 1 is the in-phase point; the dips near 0.75 and 1.25
# are where the two fields nearly cancel.  Close to a charger the 1/d
# amplitude dominates everything, which is why receivers are kept at
# least a wavelength away in valid deployments.
