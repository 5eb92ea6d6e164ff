"""Complex-vector and small dense Hermitian kernels.

Transform convention
--------------------
The forward transform carries the ``1/N`` factor and the inverse carries
none::

    dft(x)[k]  = (1/N) * sum_n x[n] exp(-2j*pi*k*n/N)
    idft(X)[n] =         sum_k X[k] exp(+2j*pi*k*n/N)

so ``idft(dft(x)) == x`` and Parseval reads
``sum |x|**2 == N * sum |dft(x)|**2``.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

__all__ = [
    "NonHermitianError",
    "IllConditionedError",
    "EigenDecomposition",
    "SeededStream",
    "dft",
    "idft",
    "eig_hermitian",
    "solve_hermitian",
    "gaussian_pair_stream",
    "uniform_bits",
    "stream_id_for",
]

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
COND_LIMIT = 1e-12


class NonHermitianError(ValueError):
    """Raised when a matrix expected to be Hermitian is not."""


class IllConditionedError(np.linalg.LinAlgError):
    """Raised when a Hermitian system is singular or too close to it."""


def _as_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    if x.shape[-1:] == (0,) or x.ndim == 0:
        raise ValueError("transform input must be a non-empty vector")
    return x


def dft(x) -> np.ndarray:
    """Forward DFT over the last axis, scaled by ``1/N``."""
    x = _as_vector(x)
    return np.fft.fft(x, axis=-1) / x.shape[-1]


def idft(X) -> np.ndarray:
    """Inverse DFT over the last axis, unscaled."""
    X = _as_vector(X)
    return np.fft.ifft(X, axis=-1) * X.shape[-1]


def _check_hermitian(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R, dtype=np.complex128)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {R.shape}")
    scale = max(1.0, float(np.max(np.abs(R)))) if R.size else 1.0
    if np.max(np.abs(R - R.conj().T), initial=0.0) > HERMITIAN_TOL * scale:
        raise NonHermitianError("matrix is not Hermitian within tolerance")
    return R


class EigenDecomposition(NamedTuple):
    """``R = basis @ diag(values) @ basis^H`` with values nonincreasing."""

    basis: np.ndarray
    values: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.values) @ self.basis.conj().T


def eig_hermitian(R) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, largest eigenvalue first.

    For a Hermitian positive semidefinite matrix this is also its SVD.
    Eigenvalues that are negative only by round-off (above
    ``-1e-10 * max|lambda|``) are clipped to zero. Each eigenvector's phase
    is fixed so that its largest-magnitude entry is real and positive, which
    makes the basis reproducible for repeated or degenerate inputs.
    """
    R = _check_hermitian(R)
    # symmetrise before LAPACK so round-off asymmetry cannot leak in
    R = 0.5 * (R + R.conj().T)
    values, basis = np.linalg.eigh(R)
    values = values[::-1].copy()
    basis = basis[:, ::-1].copy()
    top = np.max(np.abs(values), initial=0.0)
    tiny = (values < 0) & (values >= -PSD_TOL * top)
    values[tiny] = 0.0
    if basis.size:
        pivot = np.argmax(np.abs(basis), axis=0)
        phase = basis[pivot, np.arange(basis.shape[1])]
        basis = basis * (np.abs(phase) / phase)
    return EigenDecomposition(basis, values)


def solve_hermitian(A, b) -> np.ndarray:
    """Solve ``A x = b`` for Hermitian positive definite ``A``.

    ``b`` may be a vector or a matrix of right-hand sides.

    Raises
    ------
    IllConditionedError
        If ``A`` is not positive definite, or its estimated reciprocal
        condition number is below ``1e-12``.
    """
    A = _check_hermitian(A)
    b = np.asarray(b, dtype=np.complex128)
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, b is {b.shape}")
    try:
        factor = scipy.linalg.cho_factor(A, lower=False, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(f"matrix is not positive definite: {exc}") from exc
    pocon, = scipy.linalg.get_lapack_funcs(("pocon",), (factor[0],))
    anorm = np.linalg.norm(A, 1)
    rcond, info = pocon(factor[0], anorm, uplo="U")
    if info != 0 or rcond < COND_LIMIT:
        raise IllConditionedError(f"reciprocal condition number {rcond:.3g} below {COND_LIMIT:g}")
    return scipy.linalg.cho_solve(factor, b)


@dataclass(frozen=True)
class SeededStream:
    """A reproducible random stream keyed by ``(seed, stream_id)``.

    Streams are derived functionally; :meth:`child` extends the key so a
    single trial can hand independent sub-streams to its stages. The
    underlying bit generator is counter-based (Philox), so no generator
    state is shared between streams.
    """

    seed: int
    stream_id: int = 0
    branch: tuple[int, ...] = ()

    def child(self, label: int) -> "SeededStream":
        return SeededStream(self.seed, self.stream_id, self.branch + (int(label),))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=int(self.seed) & 0xFFFFFFFFFFFFFFFF,
            spawn_key=(int(self.stream_id) & 0xFFFFFFFFFFFFFFFF, *self.branch),
        )
        return np.random.Generator(np.random.Philox(ss))


def stream_id_for(*indices: int) -> int:
    """Hash a tuple of non-negative indices to a 64-bit stream id."""
    raw = struct.pack(f"<{len(indices)}Q", *indices)
    return int.from_bytes(hashlib.blake2b(raw, digest_size=8).digest(), "little")


def gaussian_pair_stream(s: SeededStream, n: int, variance: float) -> np.ndarray:
    """``n`` circularly symmetric complex Gaussian samples with ``E|z|^2 = variance``."""
    if variance < 0:
        raise ValueError(f"variance must be non-negative, got {variance}")
    if variance == 0:
        return np.zeros(n, dtype=np.complex128)
    pairs = s.generator().standard_normal((n, 2))
    return (pairs[:, 0] + 1j * pairs[:, 1]) * np.sqrt(variance / 2.0)


def uniform_bits(s: SeededStream, n: int) -> np.ndarray:
    return s.generator().integers(0, 2, size=n, dtype=np.uint8)
