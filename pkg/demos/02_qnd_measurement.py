"""
Cavity QND measurement
======================

Probing Jz through the dispersive cavity shift and conditioning the spin
state on the outcome.
"""

# %%
import math

import numpy as np

from sqzclock.cavity import (CavityParams, LatticeConfig, dispersive_shift, jz_echo_measurement,
                             measurement_imprecision)
from sqzclock.spin import EnsembleConfig, new_css

cav = CavityParams()
print("shift per 30000 atoms: %.1f kHz" % (dispersive_shift(30000, cav) / (2 * math.pi) / 1e3))

# %%
# Imprecision falls as one over the square root of the photon number.
for n in (5e3, 2e4, 8e4):
    print("%7.0f photons -> sigma_m = %.1f atoms" % (n, measurement_imprecision(n, cav)))

# %%
# An echo measurement on an equatorial CSS: the conditional Jz variance drops
# well below N/4 while the anti-squeezed quadrature grows.
state = new_css(EnsembleConfig(30000, 0.87))
rng = np.random.default_rng(1)
estimate, after = jz_echo_measurement(state, 2e4, 1.0, cav, LatticeConfig("2D"), rng)
print("estimate %.1f" % estimate)
print("Var(Jz): %.0f -> %.0f" % (state.var_z, after.var_z))
print("anti-squeezed: %.3g -> %.3g" % (state.var_anti, after.var_anti))
print("contrast: %.4f -> %.4f" % (state.contrast, after.contrast))

# %%
# The 2D lattice keeps more contrast than the 1D lattice at the same photon number.
for lat in (LatticeConfig("1D", transverse_depth=None), LatticeConfig("2D")):
    _, s = jz_echo_measurement(state, 4e4, 1.0, cav, lat, np.random.default_rng(2))
    print(lat.dimensionality, "contrast after 4e4 photons: %.4f" % s.contrast)
