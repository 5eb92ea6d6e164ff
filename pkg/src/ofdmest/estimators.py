"""Pilot-based channel estimators: LS, LMMSE (full and simplified),
low-rank LMMSE and time-domain MMSE.

All estimators work on the last axis, so a ``(trials, N)`` stack of LS
estimates can be filtered in one call. Matrix inverses are realized as
Hermitian solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import eig_hermitian, solve_hermitian

__all__ = [
    "NearZeroPilotError",
    "NoiseSpec",
    "PrecomputedFilter",
    "ls_estimate",
    "lmmse_full",
    "lmmse_precompute",
    "lowrank_precompute",
    "apply_filter",
    "dft_matrix",
    "mmse_matrix",
    "mmse_estimate",
    "default_rank",
]

NEAR_ZERO = 1e-12


class NearZeroPilotError(ZeroDivisionError):
    """A pilot symbol is too small to divide by."""


@dataclass(frozen=True)
class NoiseSpec:
    """Per-carrier noise level.

    ``sigma2`` is the variance of the noise on each received carrier and
    ``snr = E|x|^2 / sigma2``. ``snr`` may differ from that ratio when a
    filter is deliberately designed for a mismatched SNR.
    """

    sigma2: float
    snr: float

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError(f"sigma2 must be non-negative, got {self.sigma2}")
        if not self.snr > 0:
            raise ValueError(f"snr must be positive, got {self.snr}")

    @classmethod
    def from_snr_db(cls, snr_db: float, symbol_energy: float = 1.0) -> "NoiseSpec":
        if math.isinf(snr_db) and snr_db > 0:
            return cls.off()
        snr = 10.0 ** (snr_db / 10.0)
        return cls(symbol_energy / snr, snr)

    @classmethod
    def off(cls) -> "NoiseSpec":
        return cls(0.0, math.inf)

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr) if math.isfinite(self.snr) else math.inf


@dataclass(frozen=True, eq=False)
class PrecomputedFilter:
    """A data-independent smoothing filter for LS estimates.

    ``kind == "lmmse"`` holds the dense matrix ``W``; ``kind == "lr-lmmse"``
    holds the leading ``rank`` eigenvectors and their weights
    ``delta_k = lambda_k / (lambda_k + beta/snr)``.
    """

    kind: str
    snr: float
    beta: float
    size: int
    matrix: np.ndarray | None = None
    basis: np.ndarray | None = None
    weights: np.ndarray | None = None

    @property
    def rank(self) -> int:
        return self.size if self.kind == "lmmse" else len(self.weights)


def _check_pilots(X: np.ndarray) -> None:
    if np.any(np.abs(X) < NEAR_ZERO):
        k = int(np.argmin(np.abs(X)))
        raise NearZeroPilotError(f"pilot symbol near zero on carrier {k}")


def ls_estimate(Y, X) -> np.ndarray:
    """Per-carrier least squares, ``Y / X``."""
    Y = np.asarray(Y, dtype=np.complex128)
    X = np.asarray(X, dtype=np.complex128)
    if Y.shape[-1] != X.shape[-1]:
        raise ValueError(f"length mismatch: Y has {Y.shape[-1]}, X has {X.shape[-1]}")
    _check_pilots(X)
    return Y / X


def _check_square(R: np.ndarray, n: int) -> np.ndarray:
    R = np.asarray(R, dtype=np.complex128)
    if R.shape != (n, n):
        raise ValueError(f"correlation matrix is {R.shape}, expected {(n, n)}")
    return R


def lmmse_full(h_ls, R_hh, sigma2: float, X) -> np.ndarray:
    """LMMSE with the exact pilot term: ``R (R + sigma2 (X X^H)^-1)^-1 h_ls``.

    Needs a new solve for every pilot pattern ``X``.
    """
    h_ls = np.asarray(h_ls, dtype=np.complex128)
    X = np.asarray(X, dtype=np.complex128)
    n = h_ls.shape[-1]
    R = _check_square(R_hh, n)
    if X.shape[-1] != n:
        raise ValueError(f"pilot vector has length {X.shape[-1]}, expected {n}")
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    _check_pilots(X)
    A = R + np.diag(sigma2 / np.abs(X) ** 2)
    z = solve_hermitian(A, h_ls.T)
    return (R @ z).T


def lmmse_precompute(R_hh, snr: float, beta: float) -> PrecomputedFilter:
    """Simplified LMMSE filter ``W = R (R + (beta/snr) I)^-1``.

    Only ``R``, ``snr`` and ``beta`` enter, so one filter serves every
    pilot pattern.
    """
    if not (snr > 0 and math.isfinite(snr)):
        raise ValueError(f"snr must be positive and finite, got {snr}")
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    R = np.asarray(R_hh, dtype=np.complex128)
    n = R.shape[0]
    A = R + (beta / snr) * np.eye(n)
    # R and A are Hermitian, so R A^-1 = (A^-1 R)^H
    W = solve_hermitian(A, R).conj().T
    return PrecomputedFilter("lmmse", snr, beta, n, matrix=W)


def lowrank_precompute(R_hh, snr: float, beta: float, p: int) -> PrecomputedFilter:
    """Rank-``p`` truncation of the simplified LMMSE filter in the eigenbasis of ``R``."""
    R = np.asarray(R_hh, dtype=np.complex128)
    n = R.shape[0]
    if not 1 <= p <= n:
        raise ValueError(f"rank p={p} outside [1, {n}]")
    if not (snr > 0 and math.isfinite(snr)):
        raise ValueError(f"snr must be positive and finite, got {snr}")
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    eig = eig_hermitian(R)
    lam = eig.values[:p]
    delta = lam / (lam + beta / snr)
    return PrecomputedFilter("lr-lmmse", snr, beta, n,
                             basis=eig.basis[:, :p].copy(), weights=delta)


def apply_filter(f: PrecomputedFilter, h_ls) -> np.ndarray:
    """Smooth an LS estimate. The low-rank form costs ``2 p N`` multiplies."""
    h_ls = np.asarray(h_ls, dtype=np.complex128)
    if h_ls.shape[-1] != f.size:
        raise ValueError(f"estimate has length {h_ls.shape[-1]}, filter expects {f.size}")
    if f.kind == "lmmse":
        return h_ls @ f.matrix.T
    coeffs = (h_ls @ f.basis.conj()) * f.weights
    return coeffs @ f.basis.T


def default_rank(guard: int, fft_size: int) -> int:
    """``L + 1`` with ``L`` the cyclic-prefix length, capped at ``N``."""
    return max(1, min(guard + 1, fft_size))


def dft_matrix(n: int) -> np.ndarray:
    """``F[r, c] = exp(-2j*pi*r*c/n) / n``, the scaled forward DFT."""
    idx = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n) / n


def mmse_matrix(X, R_gg, sigma2: float) -> np.ndarray:
    """Linear map taking received pilots ``Y`` to the time-domain MMSE estimate of ``H``.

    ``R_gg`` is the covariance of the physical taps ``g`` with
    ``H(k) = sum_n g[n] exp(-2j pi k n / N)``. Under the scaled transform
    ``F`` that is ``H = F h`` with ``h = N g``, so the model
    ``Y = X F h + W`` uses ``R_hh = N**2 R_gg``. The result is
    ``F R_hY R_YY^-1`` with ``R_hY = R_hh F^H X^H`` and
    ``R_YY = X F R_hh F^H X^H + sigma2 I``.
    """
    X = np.asarray(X, dtype=np.complex128)
    n = X.shape[-1]
    R = _check_square(R_gg, n) * float(n) ** 2
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    F = dft_matrix(n)
    XF = X[:, None] * F
    R_hY = R @ XF.conj().T
    R_YY = XF @ R_hY + sigma2 * np.eye(n)
    R_YY = 0.5 * (R_YY + R_YY.conj().T)
    # F R_hY R_YY^-1 = (R_YY^-1 R_hY^H F^H)^H
    return solve_hermitian(R_YY, R_hY.conj().T @ F.conj().T).conj().T


def mmse_estimate(Y, X, R_gg, sigma2: float) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.complex128)
    return Y @ mmse_matrix(X, R_gg, sigma2).T
