"""
Stability analysis
==================

Overlapping Allan deviation of a white frequency-noise series with a drift,
and the instability budget it is compared against.
"""

# %%
import numpy as np

from sqzclock import analysis
from sqzclock.allan import allan_deviation

cycle = 3.8
t = np.arange(2000) * cycle
rng = np.random.default_rng(0)
y = rng.normal(0.0, 8e-17 / np.sqrt(cycle), t.size) + 3e-20 * t

# %%
# Without drift removal the long-tau points bend upward.
for label, series in (("raw", y), ("detrended", analysis.remove_linear_drift(y, t))):
    a = allan_deviation(series, cycle)
    print(label, "fitted %.3e / sqrt(tau)" % a.fitted_coefficient)
    for tau, dev, lo, hi in zip(a.taus, a.adev, a.ci_low, a.ci_high):
        print("   tau %7.1f  %.3e  [%.3e, %.3e]" % (tau, dev, lo, hi))

# %%
# Projection-noise limit and the two ways of quoting a gain.
limit = analysis.qpn_instability(30000, 0.82, 0.061, cycle, 429.228e12)
print("QPN limit %.3e / sqrt(tau)" % limit)
print(analysis.gain_beyond_sql(1.18e-16, 8.0e-17, 0.82))
print("extrapolated to 2580 s: %.2e" % analysis.extrapolate(8.0e-17, 2580.0))
