"""Bit mapping, OFDM symbol assembly with cyclic prefix, and ZF equalization."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .numerics import dft, idft

__all__ = [
    "NearZeroChannelError",
    "Constellation",
    "BPSK",
    "QAM16",
    "constellation_by_name",
    "OfdmConfig",
    "map_bits",
    "demap_symbols",
    "ofdm_modulate",
    "ofdm_demodulate",
    "equalize",
]

NEAR_ZERO = 1e-12
TIE_TOL = 1e-12


class NearZeroChannelError(ZeroDivisionError):
    """A divisor (channel or pilot) fell below the near-zero guard."""


def beta_of(points: np.ndarray) -> float:
    """``E|x|^2 * E|1/x|^2`` over equiprobable points."""
    p2 = np.abs(points) ** 2
    return float(np.mean(p2) * np.mean(1.0 / p2))


@dataclass(frozen=True)
class Constellation:
    """Symbol alphabet with its bit labeling.

    ``points[i]`` carries the bit label of the integer ``i`` written
    MSB-first over ``bits_per_symbol`` bits, so the point index is the
    canonical order used for demapping tie-breaks.
    """

    name: str
    points: np.ndarray = field(repr=False)
    bits_per_symbol: int
    beta: float

    @property
    def size(self) -> int:
        return len(self.points)

    @cached_property
    def labels(self) -> np.ndarray:
        """Bit matrix of shape ``(size, bits_per_symbol)``."""
        idx = np.arange(self.size)[:, None]
        shifts = np.arange(self.bits_per_symbol - 1, -1, -1)[None, :]
        out = ((idx >> shifts) & 1).astype(np.uint8)
        out.setflags(write=False)
        return out

    def computed_beta(self) -> float:
        return beta_of(self.points)

    def __eq__(self, other):
        if not isinstance(other, Constellation):
            return NotImplemented
        return (
            self.name == other.name
            and self.bits_per_symbol == other.bits_per_symbol
            and self.beta == other.beta
            and np.array_equal(self.points, other.points)
        )

    def __hash__(self):
        return hash((self.name, self.bits_per_symbol, self.beta))


def _bpsk() -> Constellation:
    points = np.array([1.0, -1.0], dtype=np.complex128)
    return Constellation("bpsk", points, 1, beta_of(points))


def _qam16() -> Constellation:
    # per-axis Gray: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
    level = {0b00: -3.0, 0b01: -1.0, 0b11: 1.0, 0b10: 3.0}
    points = np.array(
        [complex(level[i >> 2], level[i & 0b11]) for i in range(16)]
    ) / np.sqrt(10.0)
    return Constellation("qam16", points, 4, beta_of(points))


BPSK = _bpsk()
QAM16 = _qam16()

_CONSTELLATIONS = {"bpsk": BPSK, "qam16": QAM16}


def constellation_by_name(name: str) -> Constellation:
    try:
        return _CONSTELLATIONS[name.lower()]
    except KeyError:
        raise ValueError(
            f"unknown constellation {name!r}; expected one of {sorted(_CONSTELLATIONS)}"
        ) from None


@dataclass(frozen=True)
class OfdmConfig:
    """Frame geometry.

    Parameters
    ----------
    fft_size : int
        DFT length ``N``.
    guard : int
        Cyclic prefix length ``Ng`` in samples (also the ``L`` that sets
        the default low-rank order ``L + 1``).
    block : int
        OFDM symbols per pilot block; the first one carries pilots.
    constellation : Constellation
        Data (and by default pilot) alphabet.
    active : tuple of int, optional
        Active carrier indices. ``None`` means all ``N`` carriers.
    """

    fft_size: int = 128
    guard: int = 16
    block: int = 8
    constellation: Constellation = QAM16
    active: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.fft_size < 1:
            raise ValueError(f"fft_size must be >= 1, got {self.fft_size}")
        if not 0 <= self.guard <= self.fft_size:
            raise ValueError(f"guard must lie in [0, {self.fft_size}], got {self.guard}")
        if self.block < 1:
            raise ValueError(f"block must be >= 1, got {self.block}")
        if self.active is not None:
            act = tuple(sorted(set(int(k) for k in self.active)))
            if not act:
                raise ValueError("active carrier set is empty")
            if act[0] < 0 or act[-1] >= self.fft_size:
                raise ValueError(f"active carriers must lie in [0, {self.fft_size - 1}]")
            object.__setattr__(self, "active", act)

    @property
    def active_carriers(self) -> np.ndarray:
        if self.active is None:
            return np.arange(self.fft_size)
        return np.asarray(self.active, dtype=np.intp)

    @property
    def n_active(self) -> int:
        return self.fft_size if self.active is None else len(self.active)

    @property
    def symbol_length(self) -> int:
        return self.fft_size + self.guard


def map_bits(bits: Sequence[int], c: Constellation) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % c.bits_per_symbol:
        raise ValueError(
            f"{bits.size} bits is not a multiple of {c.bits_per_symbol} bits per symbol"
        )
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    groups = bits.reshape(-1, c.bits_per_symbol)
    weights = 1 << np.arange(c.bits_per_symbol - 1, -1, -1)
    return c.points[groups @ weights]


def demap_symbols(symbols, c: Constellation) -> np.ndarray:
    """Hard-decision demapping to the nearest point.

    Distances within ``1e-12`` of the minimum count as ties, and ties go to
    the lowest point index.
    """
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    if symbols.size == 0:
        return np.zeros(0, dtype=np.uint8)
    d = np.abs(symbols[:, None] - c.points[None, :]) ** 2
    near = d <= d.min(axis=1, keepdims=True) + TIE_TOL
    index = np.argmax(near, axis=1)
    return c.labels[index].ravel()


def ofdm_modulate(X, guard: int) -> np.ndarray:
    """IDFT plus cyclic prefix: ``[x[N-Ng:], x]``.

    Works on the last axis, so a stack of symbols can be modulated at once.
    """
    X = np.asarray(X, dtype=np.complex128)
    n = X.shape[-1]
    if not 0 <= guard <= n:
        raise ValueError(f"guard {guard} must lie in [0, {n}]")
    x = idft(X)
    return np.concatenate([x[..., n - guard:], x], axis=-1)


def ofdm_demodulate(y_f, fft_size: int, guard: int) -> np.ndarray:
    y_f = np.asarray(y_f, dtype=np.complex128)
    if y_f.shape[-1] != fft_size + guard:
        raise ValueError(
            f"received symbol has {y_f.shape[-1]} samples, expected {fft_size + guard}"
        )
    return dft(y_f[..., guard:guard + fft_size])


def equalize(Y, H_est, active=None) -> np.ndarray:
    """Zero-forcing: ``Y / H_est`` on the active carriers.

    Inactive carriers are returned as zero. Raises
    :class:`NearZeroChannelError` instead of clamping tiny channel values.
    """
    Y = np.asarray(Y, dtype=np.complex128)
    H_est = np.asarray(H_est, dtype=np.complex128)
    if Y.shape[-1] != H_est.shape[-1]:
        raise ValueError(f"length mismatch: Y has {Y.shape[-1]}, H has {H_est.shape[-1]}")
    idx = np.arange(Y.shape[-1]) if active is None else np.asarray(active)
    h = H_est[..., idx]
    if np.any(np.abs(h) < NEAR_ZERO):
        k = int(idx[np.argmin(np.abs(h)) % len(idx)])
        raise NearZeroChannelError(f"channel estimate near zero on active carrier {k}")
    out = np.zeros(np.broadcast_shapes(Y.shape, H_est.shape), dtype=np.complex128)
    out[..., idx] = Y[..., idx] / h
    return out
