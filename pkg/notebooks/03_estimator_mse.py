"""
Channel MSE of the estimators
=============================

Estimate the channel from one all-pilot symbol with LS, the simplified
LMMSE filter, its low-rank version and the time-domain MMSE, and compare
their mean squared error across SNR.
"""

# %%
from ofdmest import BPSK, FrameScheme, OfdmConfig, default_model, sweep

cfg = OfdmConfig(block=1)  # pilot symbol only: no data, MSE only
scheme = FrameScheme.build(cfg)
model = default_model()
names = ["ls", "lmmse", "lr-lmmse", "mmse"]
grid = [0.0, 10.0, 20.0, 30.0, 40.0]
res = sweep(cfg, scheme, model, names, grid, trials=500, seed=1)

# %%
# LS error follows the noise level scaled by E|1/X|^2. The smoothing
# estimators sit well below it because they use the channel statistics.
print(f"{'SNR':>5} " + " ".join(f"{n:>10}" for n in names))
for snr in grid:
    print(f"{snr:5.0f} " + " ".join(f"{res.cell(n, snr).mse:10.3e}" for n in names))

# %%
# With constant-modulus (BPSK) pilots the LS error is the noise variance.
cm = sweep(cfg, FrameScheme.build(cfg, constellation=BPSK), model, ["ls"], grid,
           trials=500, seed=1)
for snr in grid:
    print(f"SNR {snr:4.0f} dB  LS MSE {cm.cell('ls', snr).mse:.3e}  sigma^2 {10 ** (-snr / 10):.3e}")
