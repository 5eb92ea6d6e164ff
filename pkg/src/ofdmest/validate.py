"""Reduced-size oracle checks run by ``ofdmest validate``.

Every check compares a library path against an independent computation
(direct summation, brute-force convolution, explicit inverses).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import (
    ChannelModel,
    ChannelRealization,
    apply_channel,
    freq_correlation,
    freq_response,
    ici_term,
    time_correlation,
)
from .estimators import (
    apply_filter,
    dft_matrix,
    lmmse_precompute,
    lowrank_precompute,
    ls_estimate,
    mmse_estimate,
)
from .modem import Constellation, demap_symbols, equalize, map_bits, ofdm_demodulate, ofdm_modulate
from .numerics import dft, eig_hermitian, idft, solve_hermitian

__all__ = ["CheckResult", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _rand_c(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _direct_dft(x):
    n = len(x)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x / n


def _direct_channel(x_f, gains, delays, dopplers, n, start):
    """Sample-by-sample convolution with the time-varying taps."""
    ng = len(x_f) - n
    y = np.zeros(len(x_f), dtype=complex)
    for m in range(len(x_f)):
        t = start + m - ng
        for h, tau, f in zip(gains, delays, dopplers):
            if m - tau >= 0:
                y[m] += h * np.exp(2j * np.pi / n * f * t) * x_f[m - tau]
    return y


def _check_dft(ctx):
    x = _rand_c(ctx["rng"], 16)
    err = max(np.max(np.abs(dft(x) - _direct_dft(x))), np.max(np.abs(idft(dft(x)) - x)))
    return err < 1e-12, f"max error {err:.2e}"


def _check_eig(ctx):
    a = _rand_c(ctx["rng"], 8, 8)
    R = a @ a.conj().T
    e = eig_hermitian(R)
    err = np.max(np.abs(e.reconstruct() - R))
    ortho = np.max(np.abs(e.basis.conj().T @ e.basis - np.eye(8)))
    ok = err < 1e-9 and ortho < 1e-10 and np.all(np.diff(e.values) <= 0)
    return ok, f"reconstruction {err:.2e}, orthogonality {ortho:.2e}"


def _check_solve(ctx):
    a = _rand_c(ctx["rng"], 8, 8)
    A = a @ a.conj().T + 8 * np.eye(8)
    b = _rand_c(ctx["rng"], 8)
    res = np.linalg.norm(A @ solve_hermitian(A, b) - b) / np.linalg.norm(b)
    return res < 1e-9, f"relative residual {res:.2e}"


def _check_beta(ctx):
    c: Constellation = ctx["constellation"]
    computed = c.computed_beta()
    energy = float(np.mean(np.abs(c.points) ** 2))
    ok = abs(computed - c.beta) < 1e-12 and abs(energy - 1) < 1e-12
    return ok, f"stored beta {c.beta!r}, computed {computed!r}, energy {energy!r}"


def _check_chain(ctx):
    c: Constellation = ctx["constellation"]
    n, ng = ctx["n"], ctx["guard"]
    bits = ctx["rng"].integers(0, 2, size=n * c.bits_per_symbol)
    X = map_bits(bits, c)
    Y = ofdm_demodulate(ofdm_modulate(X, ng), n, ng)
    out = demap_symbols(equalize(Y, np.ones(n)), c)
    errors = int(np.count_nonzero(out != bits))
    return errors == 0, f"{errors} bit errors over {bits.size} bits"


def _check_no_isi(ctx):
    m: ChannelModel = ctx["model"]
    ok = m.max_delay <= ctx["guard"]
    return ok, f"max tap delay {m.max_delay}, guard {ctx['guard']}"


def _check_channel_sum(ctx):
    rng = ctx["rng"]
    n, ng = 64, 8
    m = ChannelModel.from_taps([(0, 0.6, 0.05), (3, 0.4, 0.05)])
    gains = _rand_c(rng, 2) / np.sqrt(2)
    c = ChannelRealization(gains, m, start_sample=37)
    x_f = ofdm_modulate(_rand_c(rng, n), ng)
    err = np.max(np.abs(apply_channel(x_f, c, n)
                        - _direct_channel(x_f, gains, m.delays, m.dopplers, n, 37)))
    return err < 1e-12, f"max error {err:.2e}"


def _check_ici(ctx):
    rng = ctx["rng"]
    n, ng = 64, 8
    m = ChannelModel.from_taps([(0, 0.6, 0.05), (3, 0.4, 0.05)])
    c = ChannelRealization(_rand_c(rng, 2) / np.sqrt(2), m, start_sample=ng)
    X = _rand_c(rng, n)
    Y = ofdm_demodulate(apply_channel(ofdm_modulate(X, ng), c, n), n, ng)
    model = freq_response(c, n) * X + ici_term(c, X, n)
    rel = np.linalg.norm(Y - model) / np.linalg.norm(Y)
    return rel < 1e-9, f"relative error {rel:.2e}"


def _check_domains(ctx):
    n = 16
    m = ChannelModel.from_taps([(0, 0.4, 0), (1, 0.3, 0), (4, 0.2, 0), (7, 0.1, 0)])
    F = dft_matrix(n)
    err = np.max(np.abs(F @ time_correlation(m, n) @ F.conj().T - freq_correlation(m, n) / n**2))
    return err < 1e-12, f"max error {err:.2e}"


def _check_ls(ctx):
    rng = ctx["rng"]
    n = ctx["n"]
    m: ChannelModel = ctx["model"].with_doppler(0.0)
    c = ChannelRealization(_rand_c(rng, m.n_taps) / np.sqrt(2), m)
    X = ctx["constellation"].points[rng.integers(0, ctx["constellation"].size, n)]
    Y = ofdm_demodulate(apply_channel(ofdm_modulate(X, ctx["guard"]), c, n), n, ctx["guard"])
    err = np.max(np.abs(ls_estimate(Y, X) - freq_response(c, n)))
    return err < 1e-9, f"max error {err:.2e}"


def _check_lowrank(ctx):
    rng = ctx["rng"]
    n = 32
    a = _rand_c(rng, n, n)
    R = a @ a.conj().T / n
    h = _rand_c(rng, n)
    full = apply_filter(lmmse_precompute(R, 10.0, 17 / 9), h)
    low = apply_filter(lowrank_precompute(R, 10.0, 17 / 9, n), h)
    err = np.max(np.abs(full - low))
    return err < 1e-8, f"max difference {err:.2e}"


def _check_mmse(ctx):
    rng = ctx["rng"]
    n = 16
    m = ChannelModel.from_taps([(0, 0.4, 0), (1, 0.3, 0), (4, 0.2, 0), (7, 0.1, 0)])
    R_gg = time_correlation(m, n)
    X = np.exp(2j * np.pi * rng.random(n))
    Y = _rand_c(rng, n)
    F = dft_matrix(n)
    Xd = np.diag(X)
    R_hh = R_gg * n**2
    R_hY = R_hh @ F.conj().T @ Xd.conj().T
    R_YY = Xd @ F @ R_hh @ F.conj().T @ Xd.conj().T + 0.1 * np.eye(n)
    oracle = F @ R_hY @ np.linalg.inv(R_YY) @ Y
    err = np.max(np.abs(mmse_estimate(Y, X, R_gg, 0.1) - oracle))
    return err < 1e-9, f"max error {err:.2e}"


def _check_rank(ctx):
    m: ChannelModel = ctx["model"]
    n = ctx["n"]
    lam = eig_hermitian(freq_correlation(m, n)).values
    big = int(np.sum(lam > 1e-10 * lam[0]))
    distinct = len(set(m.delays))
    return big == distinct, f"{big} eigenvalues above 1e-10*lambda_0, {distinct} distinct delays"


CHECKS: tuple[tuple[str, Callable], ...] = (
    ("dft-direct-sum", _check_dft),
    ("eig-reconstruction", _check_eig),
    ("solve-residual", _check_solve),
    ("beta-consistency", _check_beta),
    ("chain-identity", _check_chain),
    ("no-isi-precondition", _check_no_isi),
    ("channel-direct-sum", _check_channel_sum),
    ("ici-decomposition", _check_ici),
    ("correlation-domains", _check_domains),
    ("ls-exactness", _check_ls),
    ("lowrank-full-rank", _check_lowrank),
    ("mmse-dense-oracle", _check_mmse),
    ("rank-concentration", _check_rank),
)


def run_checks(model: ChannelModel, constellation: Constellation, fft_size: int, guard: int,
               seed: int = 0) -> list[CheckResult]:
    """Run every check; exceptions count as failures with their message."""
    n = min(fft_size, 128)
    ctx = {
        "rng": np.random.default_rng(seed),
        "model": model,
        "constellation": constellation,
        "n": n,
        "guard": min(guard, n),
    }
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn(ctx)
        except Exception as exc:  # reported, not raised
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail))
    return results
