"""
Laser noise and differential drift
==================================

Laser phase noise is common to both ensembles, so it moves each ensemble's
fringe but not the A-B difference. A linear differential drift is removed
before the stability analysis.
"""

# %%
import math

import numpy as np

from sqzclock.cavity import CavityParams, LatticeConfig
from sqzclock.noise import NoiseConfig, differential_offset, lo_phase_std
from sqzclock.sequence import DarkTime, InitExcited, Pulse, Readout, run_shot, shot_rng
from sqzclock.spin import EnsembleConfig

ens = (EnsembleConfig(30000, 0.9, 4.5, "A"), EnsembleConfig(30000, 0.9, 4.5, "B"))
program = [InitExcited(), Pulse("y", math.pi / 2), DarkTime(0.061), Pulse("x", math.pi / 2),
           Readout("A"), Readout("B")]

for level in (0.0, 1e-16):
    noise = NoiseConfig(lo_white_fm=level, drift_rate=0.0)
    rows = np.array([[r.excitation_A, r.excitation_A - r.excitation_B] for r in
                     (run_shot(program, ens, CavityParams(), LatticeConfig(), noise, shot_rng(5, i))
                      for i in range(2000))])
    print("laser %.0e: phase std %.3f rad, std(P_A) %.4f, std(P_A - P_B) %.4f"
          % (level, lo_phase_std(0.061, noise), rows[:, 0].std(), rows[:, 1].std()))

# %%
# The default differential drift is 1.6 uHz/s.
drift = NoiseConfig()
for t in (0.0, 600.0, 2580.0):
    print("t = %6.0f s   offset %.3e Hz" % (t, differential_offset(t, drift)))
