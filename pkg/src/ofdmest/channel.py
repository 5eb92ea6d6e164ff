"""Time-varying multipath Rayleigh channel.

Sample indexing follows the OFDM symbol layout: within one symbol, ``n``
runs from ``-Ng`` (first cyclic-prefix sample) to ``N - 1``, and a
realization's ``start_sample`` is the absolute index of ``n = 0``. Tap
``i`` contributes::

    h_i * exp(1j * 2*pi/N * doppler_i * (start_sample + n)) * x_f(n - delay_i)

where ``doppler_i`` is the Doppler shift normalized by the sample period
(``f_D * T``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .numerics import SeededStream, gaussian_pair_stream

__all__ = [
    "ChannelModel",
    "ChannelRealization",
    "default_model",
    "draw_realization",
    "apply_channel",
    "add_awgn",
    "freq_response",
    "doppler_attenuation",
    "ici_term",
    "freq_correlation",
    "empirical_freq_correlation",
    "time_correlation",
]


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Tapped-delay-line statistics.

    ``delays`` are integer sample delays (strictly increasing), ``powers``
    the tap variances (summing to one) and ``dopplers`` the normalized
    Doppler shift of each tap. With ``rayleigh=False`` every draw returns
    the deterministic gains ``sqrt(power)``; that mode exists for AWGN
    reference runs and is not covered by the correlation helpers.
    """

    delays: tuple[int, ...]
    powers: tuple[float, ...]
    dopplers: tuple[float, ...]
    rayleigh: bool = True

    def __post_init__(self):
        d, p, f = self.delays, self.powers, self.dopplers
        if not (len(d) == len(p) == len(f)) or not d:
            raise ValueError("delays, powers and dopplers must be equal-length and non-empty")
        if any(int(x) != x or x < 0 for x in d):
            raise ValueError(f"tap delays must be non-negative integers, got {d}")
        if any(b <= a for a, b in zip(d, d[1:])):
            raise ValueError(f"tap delays must be strictly increasing, got {d}")
        if any(x < 0 or not math.isfinite(x) for x in p):
            raise ValueError(f"tap powers must be finite and non-negative, got {p}")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValueError(f"tap powers must sum to 1, got {math.fsum(p)!r}")
        if any(not math.isfinite(x) for x in f):
            raise ValueError("Doppler values must be finite")
        object.__setattr__(self, "delays", tuple(int(x) for x in d))
        object.__setattr__(self, "powers", tuple(float(x) for x in p))
        object.__setattr__(self, "dopplers", tuple(float(x) for x in f))

    @classmethod
    def from_taps(cls, taps: Iterable[tuple[int, float, float]], normalize: bool = True,
                  rayleigh: bool = True) -> "ChannelModel":
        """Build from ``(delay, power, doppler)`` triples, sorted by delay."""
        taps = sorted((int(d), float(p), float(f)) for d, p, f in taps)
        if not taps:
            raise ValueError("at least one tap is required")
        delays, powers, dopplers = zip(*taps)
        if normalize:
            total = math.fsum(powers)
            if total <= 0:
                raise ValueError("total tap power must be positive")
            # leave already-normalized powers bit-exact so configs round-trip
            if abs(total - 1.0) > 1e-14:
                powers = tuple(p / total for p in powers)
        return cls(delays, powers, dopplers, rayleigh)

    @property
    def n_taps(self) -> int:
        return len(self.delays)

    @property
    def max_delay(self) -> int:
        return self.delays[-1]

    def with_doppler(self, doppler: float) -> "ChannelModel":
        return replace(self, dopplers=(float(doppler),) * self.n_taps)

    def check_guard(self, guard: int) -> None:
        """Raise unless every tap fits in the cyclic prefix (no ISI)."""
        if self.max_delay > guard:
            raise ValueError(
                f"no-ISI violated: max tap delay {self.max_delay} exceeds guard length {guard}"
            )

    def taps(self) -> list[tuple[int, float, float]]:
        return list(zip(self.delays, self.powers, self.dopplers))

    def __eq__(self, other):
        if not isinstance(other, ChannelModel):
            return NotImplemented
        return (self.delays, self.powers, self.dopplers, self.rayleigh) == (
            other.delays, other.powers, other.dopplers, other.rayleigh)

    def __hash__(self):
        return hash((self.delays, self.powers, self.dopplers, self.rayleigh))


def default_model(doppler: float = 0.0) -> ChannelModel:
    """Four taps at delays 0, 2, 5, 9 with an exponential profile ``exp(-tau/5)``."""
    delays = (0, 2, 5, 9)
    return ChannelModel.from_taps((d, math.exp(-d / 5.0), doppler) for d in delays)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    gains: np.ndarray
    model: ChannelModel
    start_sample: int = 0

    def at(self, start_sample: int) -> "ChannelRealization":
        """Same gains, observed from a different absolute sample index."""
        return replace(self, start_sample=int(start_sample))

    def doppler_phase(self, n: np.ndarray, fft_size: int) -> np.ndarray:
        """Phase factors of shape ``(taps, len(n))`` at symbol-relative samples ``n``."""
        n = np.asarray(n)
        if not any(self.model.dopplers):
            return np.ones((self.model.n_taps, n.size), dtype=np.complex128)
        f = np.asarray(self.model.dopplers)[:, None]
        t = self.start_sample + n[None, :]
        return np.exp(2j * np.pi / fft_size * f * t)


def draw_realization(m: ChannelModel, s: SeededStream, start_sample: int = 0) -> ChannelRealization:
    if m.rayleigh:
        z = gaussian_pair_stream(s, m.n_taps, 1.0)
        gains = z * np.sqrt(np.asarray(m.powers))
    else:
        gains = np.sqrt(np.asarray(m.powers)).astype(np.complex128)
    return ChannelRealization(gains, m, start_sample)


def apply_channel(x_f, c: ChannelRealization, fft_size: int) -> np.ndarray:
    """Pass one CP-extended symbol through the time-varying taps.

    Samples before the start of ``x_f`` are taken as zero; with every delay
    at most the guard length, the retained window never touches them.

    A 2-D ``x_f`` of shape ``(B, N + Ng)`` is a run of consecutive symbols
    under the same gains: row ``b`` starts at ``c.start_sample + b*(N + Ng)``,
    so the Doppler phase stays continuous across the run.
    """
    x_f = np.asarray(x_f, dtype=np.complex128)
    length = x_f.shape[-1]
    guard = length - fft_size
    if guard < 0:
        raise ValueError(f"symbol has {length} samples, fewer than N={fft_size}")
    c.model.check_guard(guard)
    n = np.arange(-guard, fft_size)
    if x_f.ndim == 2:
        n = (np.arange(x_f.shape[0])[:, None] * length + n[None, :]).ravel()
        phase = c.doppler_phase(n, fft_size).reshape(-1, *x_f.shape)
    elif x_f.ndim == 1:
        phase = c.doppler_phase(n, fft_size)
    else:
        raise ValueError("x_f must be 1-D or 2-D")
    y = np.zeros_like(x_f)
    for i, tau in enumerate(c.model.delays):
        shifted = np.zeros_like(x_f)
        shifted[..., tau:] = x_f[..., :x_f.shape[-1] - tau]
        y += c.gains[i] * phase[i] * shifted
    return y


def add_awgn(y, snr_db: float, signal_power: float, s: SeededStream) -> tuple[np.ndarray, float]:
    """Add complex white Gaussian noise at ``signal_power / 10**(snr_db/10)``.

    ``snr_db = inf`` switches noise off and returns a zero variance.
    """
    if signal_power <= 0:
        raise ValueError(f"signal_power must be positive, got {signal_power}")
    y = np.asarray(y, dtype=np.complex128)
    if math.isinf(snr_db) and snr_db > 0:
        return y.copy(), 0.0
    sigma2 = signal_power / 10.0 ** (snr_db / 10.0)
    noise = gaussian_pair_stream(s, y.size, sigma2).reshape(y.shape)
    return y + noise, sigma2


def doppler_attenuation(c: ChannelRealization, fft_size: int) -> np.ndarray:
    """Per-tap average Doppler phasor over the retained window.

    ``A_i = mean_n exp(1j*2*pi/N * doppler_i * (start_sample + n))`` for
    ``n = 0..N-1``, computed by direct summation.
    """
    return c.doppler_phase(np.arange(fft_size), fft_size).mean(axis=1)


def doppler_attenuation_closed_form(c: ChannelRealization, fft_size: int) -> np.ndarray:
    """Geometric-series form of :func:`doppler_attenuation`.

    ``exp(1j*theta*(n0 + (N-1)/2)) * sin(pi f) / (N sin(pi f / N))`` with
    ``theta = 2*pi*f/N``; it tends to ``exp(1j*pi*f) * sinc(f)`` for large N.
    """
    f = np.asarray(c.model.dopplers)
    n = fft_size
    theta = 2 * np.pi * f / n
    centre = np.exp(1j * theta * (c.start_sample + (n - 1) / 2.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.sin(np.pi * f) / (n * np.sin(np.pi * f / n))
    ratio = np.where(np.abs(np.sin(np.pi * f / n)) < 1e-15, 1.0, ratio)
    return centre * ratio


def _steering(delays, fft_size: int) -> np.ndarray:
    """``V[k, i] = exp(-2j*pi*delay_i*k/N)``."""
    k = np.arange(fft_size)[:, None]
    return np.exp(-2j * np.pi * k * np.asarray(delays)[None, :] / fft_size)


def freq_response(c: ChannelRealization, fft_size: int) -> np.ndarray:
    """Diagonal (per-carrier) channel gain over the retained window."""
    A = doppler_attenuation(c, fft_size)
    return _steering(c.model.delays, fft_size) @ (c.gains * A)


def _leakage(f: float, fft_size: int) -> np.ndarray:
    """``G[m]`` for ``m = -(N-1)..N-1``: carrier ``k+m`` leaking into ``k``."""
    n = fft_size
    m = np.arange(-(n - 1), n)
    num = 1.0 - np.exp(2j * np.pi * (f + m))
    den = 1.0 - np.exp(2j * np.pi / n * (f + m))
    out = np.empty(m.shape, dtype=np.complex128)
    on_grid = np.abs(den) < 1e-13
    out[on_grid] = 1.0
    out[~on_grid] = num[~on_grid] / (n * den[~on_grid])
    return out


def ici_term(c: ChannelRealization, X, fft_size: int) -> np.ndarray:
    """Inter-carrier interference: received leakage from carriers ``K != k``.

    ``I(k) = sum_i h_i e^{j theta_i n0} sum_{K != k} X(K) e^{-2j pi K tau_i / N} G_i(K - k)``
    with ``G_i`` the normalized geometric sum of the Doppler phasor.
    """
    X = np.asarray(X, dtype=np.complex128)
    n = fft_size
    if X.shape[-1] != n:
        raise ValueError(f"X has length {X.shape[-1]}, expected {n}")
    k = np.arange(n)
    diff = k[None, :] - k[:, None] + (n - 1)  # index of K - k
    V = _steering(c.model.delays, n)
    out = np.zeros(n, dtype=np.complex128)
    for i, f in enumerate(c.model.dopplers):
        if f == 0.0 or c.gains[i] == 0:
            continue
        M = _leakage(f, n)[diff]
        np.fill_diagonal(M, 0.0)
        rot = np.exp(2j * np.pi / n * f * c.start_sample)
        out += c.gains[i] * rot * (M @ (X * V[:, i]))
    return out


def freq_correlation(m: ChannelModel, fft_size: int) -> np.ndarray:
    """Carrier-domain correlation ``R[k, k'] = sum_i p_i exp(-2j pi tau_i (k - k') / N)``."""
    V = _steering(m.delays, fft_size)
    R = (V * np.asarray(m.powers)) @ V.conj().T
    return 0.5 * (R + R.conj().T)


def empirical_freq_correlation(m: ChannelModel, fft_size: int, count: int,
                               s: SeededStream) -> np.ndarray:
    """Sample average of ``H H^H`` over ``count`` independent realizations."""
    if count < 1:
        raise ValueError("count must be >= 1")
    V = _steering(m.delays, fft_size)
    z = gaussian_pair_stream(s, count * m.n_taps, 1.0).reshape(count, m.n_taps)
    G = z * np.sqrt(np.asarray(m.powers))
    A = doppler_attenuation(ChannelRealization(np.ones(m.n_taps), m), fft_size)
    H = (G * A) @ V.T
    R = H.T @ H.conj() / count
    return 0.5 * (R + R.conj().T)


def time_correlation(m: ChannelModel, fft_size: int) -> np.ndarray:
    """Tap covariance of the length-N impulse response: ``p_i`` at index ``tau_i``."""
    if m.max_delay >= fft_size:
        raise ValueError(f"tap delay {m.max_delay} does not fit in N={fft_size}")
    R = np.zeros((fft_size, fft_size), dtype=np.complex128)
    R[m.delays, m.delays] = m.powers
    return R
