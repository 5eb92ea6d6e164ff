"""
Bit error rate with block pilots
================================

Every block of eight symbols starts with one pilot symbol. The estimate
from that symbol equalizes the remaining seven. The same sweep is what
``ofdmest sweep`` runs from the command line.
"""

# %%
from pathlib import Path

from ofdmest import FrameScheme, OfdmConfig, default_model, sweep
from ofdmest.report import render_svg, sweep_csv

cfg = OfdmConfig()
res = sweep(cfg, FrameScheme.build(cfg), default_model(), ["ls", "lr-lmmse", "genie"],
            [0.0, 10.0, 20.0, 30.0], trials=60, seed=4)
print(sweep_csv(res))

# %%
# The known-channel curve is the floor any estimator can reach on a
# Rayleigh channel. Write it as an SVG chart next to this script.
out = Path(__file__).with_name("ber_sweep.svg")
render_svg(res.sorted_rows(), "ber", str(out))
print("wrote", out)
