"""
OFDM chain and the multipath channel
====================================

Build one 16-QAM OFDM symbol, send it through the chain with and without
a channel, and look at what Doppler does to the received carriers.
"""

# %%
# A clean chain is an identity: map bits, add the cyclic prefix, strip it,
# transform back and demap.
import numpy as np

from ofdmest import QAM16, demap_symbols, equalize, map_bits, ofdm_demodulate, ofdm_modulate

rng = np.random.default_rng(0)
n, ng = 128, 16
bits = rng.integers(0, 2, n * QAM16.bits_per_symbol)
X = map_bits(bits, QAM16)
Y = ofdm_demodulate(ofdm_modulate(X, ng), n, ng)
print("bit errors, clean chain:", np.count_nonzero(demap_symbols(equalize(Y, np.ones(n)), QAM16) != bits))

# %%
# The default channel has taps at delays 0, 2, 5 and 9 with an exponential
# power profile. All of them fit in the 16-sample prefix, so each carrier
# sees a single complex gain H(k).
from ofdmest import apply_channel, default_model, draw_realization, freq_response
from ofdmest.numerics import SeededStream

model = default_model()
print("delays", model.delays, "powers", np.round(model.powers, 4))
c = draw_realization(model, SeededStream(1), start_sample=ng)
Y = ofdm_demodulate(apply_channel(ofdm_modulate(X, ng), c, n), n, ng)
H = freq_response(c, n)
print("max |Y - H X| with no Doppler:", np.max(np.abs(Y - H * X)))

# %%
# Doppler makes the taps rotate inside the symbol. The carrier gain is
# attenuated and part of the energy leaks to neighbouring carriers (ICI).
from ofdmest import ici_term

print(f"{'f_D T':>8} {'|H| loss':>10} {'ICI power':>12}")
for f in (0.0, 0.01, 0.05, 0.1, 0.2):
    cf = draw_realization(model.with_doppler(f), SeededStream(1), start_sample=ng)
    Hf = freq_response(cf, n)
    ici = ici_term(cf, X, n)
    loss = np.mean(np.abs(Hf) ** 2) / np.mean(np.abs(H) ** 2)
    print(f"{f:8.2f} {loss:10.4f} {np.mean(np.abs(ici) ** 2):12.3e}")
