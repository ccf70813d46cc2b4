# %% [markdown]
# # Fields add as vectors
#
# Two chargers on a line, two receivers between them, every constant set
# to 1.  Depending on where a receiver sits, the two fields either line up
# or point against each other.

# %%
import numpy as np

from wptvec import efield, received_power, scalar_model_power, toy_superposition
from wptvec.model import PhysicalParams

unit = PhysicalParams.unit()
dep = toy_superposition()
print("chargers:", dep.chargers.tolist())
print("receivers:", dep.receivers.tolist())

# %% [markdown]
# At (1, 0) both chargers are one wavelength away, so their phasors are
# identical and the amplitudes add before squaring.

# %%
for config in ([1, 0], [0, 1], [1, 1]):
    p = received_power(dep, config, [1, 0], unit)
    print(f"config {config}: power at (1,0) = {p:.4f}")
print("additive (scalar) model would give", scalar_model_power(dep, [1, 1], [1, 0], unit))

# %% [markdown]
# At (5/4, 0) the phases are a quarter turn apart in opposite directions,
# and the combined power drops below what either charger gives alone.

# %%
r = [1.25, 0]
e1, e2 = efield([0, 0], 1, r, unit), efield([2, 0], 1, r, unit)
print("field from C1:", np.round(e1, 6), " from C2:", np.round(e2, 6))
for config in ([1, 0], [0, 1], [1, 1]):
    print(f"config {config}: power at (5/4,0) = {received_power(dep, config, r, unit):.4f}")
print("(8/15)^2 =", (8 / 15) ** 2)
