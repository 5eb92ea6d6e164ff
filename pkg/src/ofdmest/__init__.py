"""Pilot-based OFDM channel estimation under block-pilot insertion.

Transmit/receive chain, a time-varying multipath Rayleigh channel, LS,
LMMSE, low-rank LMMSE and MMSE estimators, and a seeded Monte Carlo
harness for BER and channel MSE versus SNR.
"""

from .channel import (
    ChannelModel,
    ChannelRealization,
    add_awgn,
    apply_channel,
    default_model,
    draw_realization,
    freq_correlation,
    freq_response,
    ici_term,
    time_correlation,
)
from .estimators import (
    NoiseSpec,
    PrecomputedFilter,
    apply_filter,
    lmmse_full,
    lmmse_precompute,
    lowrank_precompute,
    ls_estimate,
    mmse_estimate,
)
from .modem import (
    BPSK,
    QAM16,
    Constellation,
    OfdmConfig,
    demap_symbols,
    equalize,
    map_bits,
    ofdm_demodulate,
    ofdm_modulate,
)
from .numerics import SeededStream, dft, eig_hermitian, idft, solve_hermitian
from .simkit import FrameScheme, SweepResult, mse_of, run_block, sweep

__version__ = "0.1.0"

__all__ = [
    "ChannelModel", "ChannelRealization", "add_awgn", "apply_channel", "default_model",
    "draw_realization", "freq_correlation", "freq_response", "ici_term", "time_correlation",
    "NoiseSpec", "PrecomputedFilter", "apply_filter", "lmmse_full", "lmmse_precompute",
    "lowrank_precompute", "ls_estimate", "mmse_estimate",
    "BPSK", "QAM16", "Constellation", "OfdmConfig", "demap_symbols", "equalize", "map_bits",
    "ofdm_demodulate", "ofdm_modulate",
    "SeededStream", "dft", "eig_hermitian", "idft", "solve_hermitian",
    "FrameScheme", "SweepResult", "mse_of", "run_block", "sweep",
]
