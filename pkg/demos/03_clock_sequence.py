"""
Two-ensemble clock sequence
===========================

Runs the squeezed and unsqueezed comparison programs for a few hundred shots
and compares their spin-noise reduction.
"""

# %%
from dataclasses import replace

from sqzclock import analysis
from sqzclock.config import default_config_text, validate_config
from sqzclock.scenarios import benchmark_variant, css_variant, resolved_ensembles, sss_program
from sqzclock.sequence import program_duration, run_trials

config, _ = validate_config(default_config_text())
program = sss_program(config)
print("steps:", len(program), "duration %.3f s" % program_duration(program))
for step in program[:8]:
    print("  ", step)

# %%
ens = resolved_ensembles(config, program)
quiet = replace(config.noise, lo_white_fm=0.0, drift_rate=0.0)
args = (ens, config.cavity, config.lattice, quiet)

# the benchmark uses ideal Ramsey pulses, so R reflects the readout alone
bench = benchmark_variant(program)
sss = run_trials(bench, *args, seed=3, trials=800)
css = run_trials(css_variant(bench), *args, seed=3, trials=800)

# %%
# Subtracting the Pre outcomes removes most of the projection noise.
n = [e.atom_count for e in ens]
R_css = analysis.spin_noise_reduction(css, *n)
R_sss, b_a, b_b = analysis.spin_noise_reduction(sss, *n, return_betas=True)
print("R css %.3f (%.2f dB)" % (R_css, analysis.db(R_css)))
print("R sss %.3f (%.2f dB), beta = %.3f, %.3f" % (R_sss, analysis.db(R_sss), b_a, b_b))
print(analysis.squeezing_report(sss, *n, 0.82).display())
