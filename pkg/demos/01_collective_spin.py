"""
Collective spin states
======================

A coherent spin state of N atoms, rotated from the excited pole onto the
equator, and its projection noise.
"""

# %%
import math

import numpy as np

from sqzclock.spin import EnsembleConfig, excited_state, new_css, qpn, rotate, sample_jz

state = excited_state(EnsembleConfig(30000, initial_contrast=1.0))
print("start: excitation", state.excitation, "Var(Jz)", state.jz_variance())

# %%
# A pi/2 pulse about y puts the mean spin on the equator, where the Jz
# variance is the projection noise N/4.
eq = rotate(state, "y", math.pi / 2)
print("equator: excitation %.3f, Var(Jz) %.0f, N/4 %.0f" % (eq.excitation, eq.jz_variance(), 30000 / 4))
print("QPN std %.1f atoms" % qpn(30000))

# %%
# Sampling Jz from the state reproduces the same number.
rng = np.random.default_rng(0)
draws = np.array([sample_jz(eq, rng) for _ in range(20000)])
print("sampled Var(Jz) = %.0f" % draws.var())

# %%
# Reduced contrast shortens the spin but leaves the QPN floor in place.
faded = new_css(EnsembleConfig(30000, initial_contrast=0.82))
print("length at C=0.82: %.0f, Var(Jz) %.0f" % (faded.spin_length, faded.jz_variance()))
