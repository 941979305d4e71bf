"""
Command-line round trip
=======================

Runs a short simulation through the ``sqzclock`` entry point and feeds the
frequency table it writes back into ``sqzclock analyze``.
"""

# %%
import json
import subprocess
import sys
import tempfile
from pathlib import Path

out = Path(tempfile.mkdtemp())
cmd = [sys.executable, "-m", "sqzclock", "simulate", "clock-comparison",
       "--trials", "200", "--seed", "7", "--mode", "sss", "--out", str(out)]
summary = json.loads(subprocess.run(cmd, check=True, capture_output=True, text=True).stdout)
print("simulated:", summary["sss"]["fitted_coefficient"])
print(sorted(p.name for p in out.iterdir()))

# %%
cmd = [sys.executable, "-m", "sqzclock", "analyze", str(out / "frequency_sss.csv"),
       "--out", str(out / "analysis")]
again = json.loads(subprocess.run(cmd, check=True, capture_output=True, text=True).stdout)
print("re-analyzed:", again["fitted_coefficient"])

# %%
# Configuration errors exit with status 2.
bad = out / "bad.toml"
bad.write_text('scenario = "clock-comparison"\ntrials = 0\nseed = 1\n')
proc = subprocess.run([sys.executable, "-m", "sqzclock", "simulate", "clock-comparison",
                       "--config", str(bad)], capture_output=True, text=True)
print(proc.returncode, proc.stderr.strip())
