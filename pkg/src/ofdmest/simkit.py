"""Block-pilot frame simulation and Monte Carlo accumulation.

Each block is one all-pilot OFDM symbol followed by ``B - 1`` data
symbols. The channel is estimated from the pilot symbol alone and the
estimate is held for the data symbols of that block. Tap gains are drawn
afresh for every block.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import (
    ChannelModel,
    add_awgn,
    apply_channel,
    draw_realization,
    freq_correlation,
    freq_response,
    time_correlation,
)
from .estimators import (
    NoiseSpec,
    apply_filter,
    default_rank,
    lmmse_precompute,
    lowrank_precompute,
    mmse_matrix,
)
from .modem import (
    Constellation,
    OfdmConfig,
    demap_symbols,
    equalize,
    map_bits,
    ofdm_demodulate,
    ofdm_modulate,
)
from .numerics import SeededStream, solve_hermitian, stream_id_for, uniform_bits

__all__ = [
    "ESTIMATORS",
    "FrameScheme",
    "ChannelEstimator",
    "make_estimator",
    "BlockOutcome",
    "SweepRow",
    "SweepResult",
    "run_block",
    "sweep",
    "mse_of",
    "resolve_workers",
]

# the position in this tuple is the estimator index used for stream ids
ESTIMATORS = ("ls", "lmmse", "lmmse-full", "lr-lmmse", "mmse", "genie")

THREADS_ENV = "OFDMEST_THREADS"


@dataclass(frozen=True, eq=False)
class FrameScheme:
    """Block layout and the known pilot symbol.

    ``pilots`` has length ``N`` and is zero on inactive carriers.
    """

    block: int
    pilots: np.ndarray
    pilot_seed: int
    constellation: Constellation

    @classmethod
    def build(cls, cfg: OfdmConfig, pilot_seed: int = 0,
              constellation: Constellation | None = None) -> "FrameScheme":
        """Draw seeded pseudo-random pilots from ``constellation``.

        Passing a constant-modulus alphabet (e.g. BPSK) while the data use
        16-QAM gives the constant-modulus pilot mode.
        """
        c = cfg.constellation if constellation is None else constellation
        act = cfg.active_carriers
        s = SeededStream(pilot_seed, stream_id_for(0xB1107))
        idx = s.generator().integers(0, c.size, size=act.size)
        pilots = np.zeros(cfg.fft_size, dtype=np.complex128)
        pilots[act] = c.points[idx]
        if np.any(np.abs(pilots[act]) == 0):
            raise ValueError("pilot constellation contains a zero point")
        pilots.setflags(write=False)
        return cls(cfg.block, pilots, pilot_seed, c)

    @property
    def beta(self) -> float:
        return self.constellation.beta


class ChannelEstimator:
    """A named estimator with its filter precomputed for one SNR cell."""

    def __init__(self, name: str, cfg: OfdmConfig, scheme: FrameScheme,
                 model: ChannelModel, noise: NoiseSpec, *, rank: int | None = None,
                 design_snr: float | None = None, R_hh: np.ndarray | None = None):
        if name not in ESTIMATORS:
            raise ValueError(f"unknown estimator {name!r}; expected one of {list(ESTIMATORS)}")
        self.name = name
        self.act = cfg.active_carriers
        self.pilots = scheme.pilots
        n = cfg.fft_size
        if design_snr is None:
            snr, sigma2 = noise.snr, noise.sigma2
        else:
            # mismatched design: filters assume unit-energy symbols at design_snr
            snr, sigma2 = design_snr, 1.0 / design_snr
        self.rank = default_rank(cfg.guard, cfg.n_active) if rank is None else rank
        self._matrix = None
        self._filter = None
        if name in ("lmmse", "lmmse-full", "lr-lmmse"):
            R = freq_correlation(model, n) if R_hh is None else np.asarray(R_hh)
            R = R[np.ix_(self.act, self.act)]
            if name == "lmmse":
                self._filter = lmmse_precompute(R, snr, scheme.beta)
            elif name == "lr-lmmse":
                self._filter = lowrank_precompute(R, snr, scheme.beta, self.rank)
            else:
                X = self.pilots[self.act]
                A = R + np.diag(sigma2 / np.abs(X) ** 2)
                self._matrix = solve_hermitian(A, R).conj().T
        elif name == "mmse":
            self._matrix = mmse_matrix(self.pilots, time_correlation(model, n), sigma2)

    def estimate(self, Y: np.ndarray, H_true: np.ndarray | None = None) -> np.ndarray:
        """Full-length channel estimate from the received pilot symbol."""
        out = np.zeros(len(Y), dtype=np.complex128)
        act = self.act
        if self.name == "genie":
            out[act] = H_true[act]
        elif self.name == "mmse":
            out[act] = (self._matrix @ Y)[act]
        else:
            h_ls = Y[act] / self.pilots[act]
            if self.name == "ls":
                out[act] = h_ls
            elif self._filter is not None:
                out[act] = apply_filter(self._filter, h_ls)
            else:
                out[act] = self._matrix @ h_ls
        return out


def make_estimator(name: str, cfg: OfdmConfig, scheme: FrameScheme, model: ChannelModel,
                   noise: NoiseSpec, **kwargs) -> ChannelEstimator:
    return ChannelEstimator(name, cfg, scheme, model, noise, **kwargs)


@dataclass(frozen=True)
class BlockOutcome:
    bit_errors: int
    data_bits: int
    sq_error: float
    energy: float
    carriers: int


def run_block(cfg: OfdmConfig, scheme: FrameScheme, model: ChannelModel,
              estimator: str | ChannelEstimator, noise: NoiseSpec, s: SeededStream,
              **estimator_kwargs) -> BlockOutcome:
    """Simulate one pilot block and score it.

    The squared error is measured against the analytic response over the
    pilot symbol's window, on active carriers only.
    """
    if isinstance(estimator, str):
        estimator = make_estimator(estimator, cfg, scheme, model, noise, **estimator_kwargs)
    n, ng, b = cfg.fft_size, cfg.guard, scheme.block
    model.check_guard(ng)
    act = cfg.active_carriers
    c = cfg.constellation

    realization = draw_realization(model, s.child(0), start_sample=ng)
    bits = uniform_bits(s.child(1), (b - 1) * act.size * c.bits_per_symbol)
    X = np.zeros((b, n), dtype=np.complex128)
    X[0] = scheme.pilots
    if b > 1:
        X[1:, act] = map_bits(bits, c).reshape(b - 1, act.size)

    x_f = ofdm_modulate(X, ng)
    y_f = apply_channel(x_f, realization, n)
    if noise.sigma2 > 0:
        # time-domain variance N * sigma2 gives sigma2 per carrier after the 1/N DFT
        y_f, _ = add_awgn(y_f, 10 * math.log10(1.0 / noise.sigma2), float(n), s.child(2))
    Y = ofdm_demodulate(y_f, n, ng)

    H = freq_response(realization, n)
    H_est = estimator.estimate(Y[0], H)
    err = H_est[act] - H[act]
    sq_error = float(np.vdot(err, err).real)
    energy = float(np.vdot(H[act], H[act]).real)

    bit_errors = 0
    if b > 1:
        X_eq = equalize(Y[1:], H_est, act)
        decided = demap_symbols(X_eq[:, act], c)
        bit_errors = int(np.count_nonzero(decided != bits))
    return BlockOutcome(bit_errors, int(bits.size), sq_error, energy, int(act.size))


@dataclass
class SweepRow:
    """Accumulator for one ``(estimator, snr_db)`` cell; merging is a plain sum."""

    estimator: str
    snr_db: float
    trials: int = 0
    data_bits: int = 0
    bit_errors: int = 0
    mse_sum: float = 0.0
    mse_count: int = 0
    mse_sumsq: float = 0.0

    def add(self, o: BlockOutcome) -> None:
        self.trials += 1
        self.data_bits += o.data_bits
        self.bit_errors += o.bit_errors
        self.mse_sum += o.sq_error
        self.mse_count += o.carriers
        self.mse_sumsq += (o.sq_error / o.carriers) ** 2

    @property
    def ber(self) -> float:
        return self.bit_errors / self.data_bits if self.data_bits else math.nan

    @property
    def ber_sigma(self) -> float:
        """Binomial standard error of :attr:`ber`."""
        p = self.ber
        return math.sqrt(p * (1 - p) / self.data_bits) if self.data_bits else math.nan

    @property
    def mse(self) -> float:
        if self.mse_count == 0:
            raise ValueError(f"no MSE samples in cell ({self.estimator}, {self.snr_db})")
        return self.mse_sum / self.mse_count

    @property
    def mse_sigma(self) -> float:
        """Standard error of :attr:`mse` from the per-trial spread."""
        n = self.trials
        if n < 2:
            return math.nan
        var = (self.mse_sumsq / n - self.mse ** 2) * n / (n - 1)
        return math.sqrt(max(var, 0.0) / n)


@dataclass
class SweepResult:
    rows: list[SweepRow]
    per_trial: dict[tuple[str, float], list[BlockOutcome]] = field(default_factory=dict)

    def cell(self, estimator: str, snr_db: float) -> SweepRow:
        for r in self.rows:
            if r.estimator == estimator and r.snr_db == snr_db:
                return r
        raise KeyError((estimator, snr_db))

    def sorted_rows(self) -> list[SweepRow]:
        return sorted(self.rows, key=lambda r: (r.estimator, r.snr_db))


def mse_of(result: SweepResult) -> dict[tuple[str, float], float]:
    """Per-cell channel MSE, averaged over trials and measured carriers."""
    return {(r.estimator, r.snr_db): r.mse for r in result.rows}


def resolve_workers(workers: int | None = None) -> int:
    """Worker count from the argument or ``OFDMEST_THREADS``; 0 means one per CPU."""
    if workers is None:
        raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if workers < 0:
        raise ValueError("worker count must be non-negative")
    return workers or (os.cpu_count() or 1)


def _run_cell(cfg, scheme, model, name, snr_db, snr_index, trials, seed, keep, kwargs):
    noise = NoiseSpec.from_snr_db(snr_db)
    est = make_estimator(name, cfg, scheme, model, noise, **kwargs)
    row = SweepRow(name, float(snr_db))
    outcomes = []
    est_index = ESTIMATORS.index(name)
    for t in range(trials):
        s = SeededStream(seed, stream_id_for(est_index, snr_index, t))
        o = run_block(cfg, scheme, model, est, noise, s)
        row.add(o)
        if keep:
            outcomes.append(o)
    return row, outcomes


def sweep(cfg: OfdmConfig, scheme: FrameScheme, model: ChannelModel,
          estimators: Sequence[str], snr_db: Sequence[float], trials: int, seed: int,
          *, workers: int | None = None, keep_trials: bool = False,
          **estimator_kwargs) -> SweepResult:
    """Run ``trials`` blocks for every ``(estimator, snr)`` cell.

    Trial ``t`` of a cell uses stream id ``stream_id_for(estimator_index,
    snr_index, t)``, where the estimator index is its position in
    :data:`ESTIMATORS`. Cells run concurrently; within a cell trials are
    summed in order, so the result does not depend on the worker count.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    for name in estimators:
        if name not in ESTIMATORS:
            raise ValueError(f"unknown estimator {name!r}; expected one of {list(ESTIMATORS)}")
    cells = [(name, float(snr), i) for name in estimators for i, snr in enumerate(snr_db)]
    args = [(cfg, scheme, model, name, snr, i, trials, seed, keep_trials, estimator_kwargs)
            for name, snr, i in cells]
    n_workers = min(resolve_workers(workers), len(cells))
    if n_workers <= 1:
        done = [_run_cell(*a) for a in args]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            done = list(pool.map(lambda a: _run_cell(*a), args))
    result = SweepResult([row for row, _ in done])
    if keep_trials:
        result.per_trial = {(row.estimator, row.snr_db): outs for row, outs in done}
    return result
