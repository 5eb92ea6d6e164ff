"""
Where the channel energy lives
==============================

The carrier correlation matrix of a channel with a few taps has only a
few significant eigenvalues. That is what makes a low-rank estimator
possible.
"""

# %%
import numpy as np

from ofdmest import default_model, eig_hermitian, freq_correlation

n, ng = 128, 16
model = default_model()
R = freq_correlation(model, n)
lam = eig_hermitian(R).values
cum = np.cumsum(lam) / lam.sum()

# %%
# The first few eigenvalues and the running energy fraction. Beyond the
# tap count everything is rounding noise.
for k in range(8):
    print(f"k={k:2d}  lambda={lam[k]:12.5e}  cumulative={cum[k]:.15f}")
print("eigenvalues above 1e-10 * lambda_0:", np.sum(lam > 1e-10 * lam[0]))

# %%
# A spread of taps across the whole prefix needs up to Ng + 1 modes,
# which is the default rank of the low-rank estimator.
from ofdmest import ChannelModel

spread = ChannelModel.from_taps((d, np.exp(-d / 8), 0.0) for d in range(ng + 1))
lam = eig_hermitian(freq_correlation(spread, n)).values
print("17-tap model, modes above 1e-10:", np.sum(lam > 1e-10 * lam[0]))
