"""``ofdmest`` command line: ``sweep``, ``singvals`` and ``validate``."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .channel import freq_correlation
from .config import ConfigError, RunConfig, parse_config
from .modem import Constellation
from .numerics import eig_hermitian
from .report import render_svg, singvals_csv, sweep_csv, write_text
from .simkit import sweep
from .validate import run_checks

__all__ = ["main", "cmd_sweep", "cmd_singvals", "cmd_validate", "build_parser",
           "EXIT_OK", "EXIT_CONFIG", "EXIT_RUNTIME", "EXIT_VALIDATION"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_VALIDATION = 4

# flag dest -> config key; every config key has a flag
_FLAG_KEYS = ("fft_size", "guard", "block", "constellation", "pilot_mode", "pilot_seed",
              "active_carriers", "estimators", "snr", "trials", "seed", "rank", "doppler",
              "out", "svg", "metric")


def _err(msg: str) -> None:
    print(f"ofdmest: {msg}", file=sys.stderr)


def cmd_sweep(cfg: RunConfig, workers: int | None = None) -> int:
    """Run the Monte Carlo grid and write the CSV (and SVG when configured)."""
    try:
        cfg.check()
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    ofdm = cfg.ofdm_config()
    try:
        result = sweep(ofdm, cfg.frame_scheme(ofdm), cfg.channel_model(), cfg.estimators,
                       cfg.snr, cfg.trials, cfg.seed, workers=workers, rank=cfg.effective_rank)
    except Exception as exc:
        _err(f"simulation failed: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    try:
        write_text(cfg.out, sweep_csv(result))
        if cfg.svg:
            render_svg(result.sorted_rows(), cfg.metric, cfg.svg)
    except OSError as exc:
        _err(f"cannot write output: {exc}")
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_singvals(cfg: RunConfig) -> int:
    """Write the eigenvalues of the carrier correlation matrix with cumulative energy."""
    try:
        cfg.check()
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    ofdm = cfg.ofdm_config()
    act = ofdm.active_carriers
    R = freq_correlation(cfg.channel_model(), ofdm.fft_size)[act][:, act]
    values = eig_hermitian(R).values
    try:
        write_text(cfg.out, singvals_csv(values))
    except OSError as exc:
        _err(f"cannot write output: {exc}")
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_validate(cfg: RunConfig, constellation: Constellation | None = None,
                 stream=None) -> int:
    """Run the oracle self-checks and print one line per check.

    ``constellation`` replaces the configured alphabet (used to inject a
    deliberately inconsistent one in tests).
    """
    stream = sys.stdout if stream is None else stream
    try:
        ofdm = cfg.ofdm_config()
        model = cfg.channel_model()
    except (ConfigError, ValueError) as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    c = ofdm.constellation if constellation is None else constellation
    results = run_checks(model, c, ofdm.fft_size, ofdm.guard, seed=cfg.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}", file=stream)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=stream)
    return EXIT_VALIDATION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    common.add_argument("--fft-size")
    common.add_argument("--guard", help="cyclic prefix length (default N/8)")
    common.add_argument("--block", help="OFDM symbols per pilot block (default 8)")
    common.add_argument("--constellation", help="bpsk or qam16")
    common.add_argument("--pilot-mode", help="data or constant-modulus")
    common.add_argument("--pilot-seed")
    common.add_argument("--active-carriers")
    common.add_argument("--estimators", help="comma list of ls,lmmse,lmmse-full,lr-lmmse,mmse")
    common.add_argument("--snr", help="start:stop:step in dB, stop inclusive")
    common.add_argument("--trials", help="blocks per (estimator, SNR) cell")
    common.add_argument("--seed")
    common.add_argument("--rank", help="low-rank order (default guard + 1)")
    common.add_argument("--doppler", help="normalized Doppler f_D*T applied to every tap")
    common.add_argument("--tap", action="append", metavar="DELAY,POWER,DOPPLER",
                        help="repeatable; replaces the configured taps")
    common.add_argument("--out", metavar="PATH", help="output CSV, '-' for stdout")
    common.add_argument("--svg", metavar="PATH")
    common.add_argument("--metric", help="ber or mse (SVG y axis)")
    common.add_argument("--allow-large", action="store_true", default=None,
                        help="permit fft sizes above 512")

    parser = argparse.ArgumentParser(
        prog="ofdmest", description="Block-pilot OFDM channel estimation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep", parents=[common], help="BER/MSE versus SNR Monte Carlo")
    sub.add_parser("singvals", parents=[common], help="eigenvalues of the correlation matrix")
    sub.add_parser("validate", parents=[common], help="run the oracle self-checks")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    overrides = {k: getattr(args, k) for k in _FLAG_KEYS}
    overrides["taps"] = args.tap
    if args.allow_large:
        overrides["allow_large"] = "true"
    return parse_config(text, overrides)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    if args.command == "sweep":
        return cmd_sweep(cfg)
    if args.command == "singvals":
        return cmd_singvals(cfg)
    return cmd_validate(cfg)
