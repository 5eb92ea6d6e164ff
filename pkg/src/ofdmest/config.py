"""Plain-text run configuration.

One ``key = value`` per line, ``#`` starts a comment, and ``tap =
delay,power,doppler`` may repeat. Overrides (from command-line flags) win
over the file, and the file wins over defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Mapping

from .channel import ChannelModel, default_model
from .estimators import default_rank
from .modem import OfdmConfig, constellation_by_name
from .simkit import ESTIMATORS, FrameScheme

__all__ = ["ConfigError", "RunConfig", "parse_config", "serialize_config", "parse_snr_grid"]

MAX_DESK_FFT = 512


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def parse_snr_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (stop included when on the grid) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"SNR grid must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"SNR grid needs step > 0 and stop >= start, got {text!r}")
        count = math.floor((stop - start) / step + 1e-9) + 1
        return tuple(start + i * step for i in range(count))
    values = tuple(float(v) for v in text.split(",") if v.strip())
    if not values:
        raise ValueError("SNR grid is empty")
    return values


def _fmt(x: float) -> str:
    return format(x, ".17g")


@dataclass(frozen=True)
class RunConfig:
    fft_size: int = 128
    guard: int | None = None  # None: N/8
    block: int = 8
    constellation: str = "qam16"
    pilot_mode: str = "data"  # or "constant-modulus"
    pilot_seed: int = 0
    active_carriers: int | None = None
    estimators: tuple[str, ...] = ("ls", "lmmse", "lr-lmmse", "mmse")
    snr: tuple[float, ...] = tuple(float(s) for s in range(0, 41, 5))
    trials: int = 10_000
    seed: int = 1
    rank: int | None = None  # None: guard + 1
    doppler: float | None = None  # overrides every tap when set
    taps: tuple[tuple[int, float, float], ...] | None = None
    out: str = "-"
    svg: str | None = None
    metric: str = "ber"
    allow_large: bool = False

    @property
    def guard_length(self) -> int:
        return self.fft_size // 8 if self.guard is None else self.guard

    def ofdm_config(self) -> OfdmConfig:
        active = None
        if self.active_carriers is not None and self.active_carriers != self.fft_size:
            # virtual carriers sit around the band edge: keep the lowest and highest bins
            half = self.active_carriers // 2
            lo = list(range(0, self.active_carriers - half))
            hi = list(range(self.fft_size - half, self.fft_size))
            active = tuple(lo + hi)
        return OfdmConfig(self.fft_size, self.guard_length, self.block,
                          constellation_by_name(self.constellation), active)

    def channel_model(self) -> ChannelModel:
        m = default_model() if self.taps is None else ChannelModel.from_taps(self.taps)
        return m if self.doppler is None else m.with_doppler(self.doppler)

    def frame_scheme(self, cfg: OfdmConfig | None = None) -> FrameScheme:
        cfg = self.ofdm_config() if cfg is None else cfg
        pilots = constellation_by_name("bpsk") if self.pilot_mode == "constant-modulus" else None
        return FrameScheme.build(cfg, self.pilot_seed, pilots)

    @property
    def effective_rank(self) -> int:
        n_act = self.fft_size if self.active_carriers is None else self.active_carriers
        return default_rank(self.guard_length, n_act) if self.rank is None else self.rank

    def check(self) -> None:
        """Cross-field invariants; raises :class:`ConfigError`."""
        if self.fft_size > MAX_DESK_FFT and not self.allow_large:
            raise ConfigError(f"fft_size {self.fft_size} > {MAX_DESK_FFT} requires allow_large")
        try:
            cfg = self.ofdm_config()
            model = self.channel_model()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if model.max_delay > cfg.guard:
            raise ConfigError(
                f"no-ISI violated: max tap delay {model.max_delay} exceeds guard {cfg.guard}")
        if not 1 <= self.effective_rank <= cfg.n_active:
            raise ConfigError(f"rank {self.effective_rank} outside [1, {cfg.n_active}]")


def _parse_bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _optional(conv):
    def inner(v: str):
        return None if v.strip().lower() in ("", "auto", "none") else conv(v)
    return inner


def _estimators(v: str) -> tuple[str, ...]:
    names = tuple(s.strip() for s in v.split(",") if s.strip())
    if not names:
        raise ValueError("estimator list is empty")
    for n in names:
        if n not in ESTIMATORS:
            raise ValueError(f"unknown estimator {n!r}; expected one of {list(ESTIMATORS)}")
    if len(set(names)) != len(names):
        raise ValueError("estimator list has duplicates")
    return names


def _choice(*allowed):
    def inner(v: str) -> str:
        v = v.strip().lower()
        if v not in allowed:
            raise ValueError(f"expected one of {list(allowed)}, got {v!r}")
        return v
    return inner


def _positive_int(v: str) -> int:
    n = int(v)
    if n < 1:
        raise ValueError(f"expected a positive integer, got {n}")
    return n


def _tap(v: str) -> tuple[int, float, float]:
    parts = [p.strip() for p in v.split(",")]
    if len(parts) != 3:
        raise ValueError(f"tap must be delay,power,doppler, got {v!r}")
    delay, power, doppler = int(parts[0]), float(parts[1]), float(parts[2])
    if delay < 0 or power < 0 or not math.isfinite(power) or not math.isfinite(doppler):
        raise ValueError(f"invalid tap {v!r}")
    return delay, power, doppler


_CONVERTERS = {
    "fft_size": _positive_int,
    "guard": _optional(int),
    "block": _positive_int,
    "constellation": _choice("bpsk", "qam16"),
    "pilot_mode": _choice("data", "constant-modulus"),
    "pilot_seed": int,
    "active_carriers": _optional(_positive_int),
    "estimators": _estimators,
    "snr": parse_snr_grid,
    "trials": _positive_int,
    "seed": int,
    "rank": _optional(_positive_int),
    "doppler": _optional(float),
    "out": str,
    "svg": _optional(str),
    "metric": _choice("ber", "mse"),
    "allow_large": _parse_bool,
}
assert set(_CONVERTERS) | {"taps"} == {f.name for f in fields(RunConfig)}


def parse_config(text: str = "", overrides: Mapping[str, object] | None = None) -> RunConfig:
    """Parse config text, then apply ``overrides``.

    Override values are strings in file syntax, except ``taps`` which is a
    list of ``delay,power,doppler`` strings.
    """
    values: dict[str, object] = {}
    taps: list[tuple[int, float, float]] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "tap":
            try:
                taps.append(_tap(value))
            except ValueError as exc:
                raise ConfigError(str(exc), lineno) from None
            continue
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        seen.add(key)
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        key = key.replace("-", "_")
        try:
            if key == "taps":
                taps = [_tap(v) for v in value]
            elif key in _CONVERTERS:
                values[key] = _CONVERTERS[key](str(value))
            else:
                raise ConfigError(f"unknown option {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for --{key.replace('_', '-')}: {exc}") from None

    if taps:
        try:
            model = ChannelModel.from_taps(taps)
        except ValueError as exc:
            raise ConfigError(f"bad tap set: {exc}") from None
        values["taps"] = tuple(model.taps())
    cfg = RunConfig(**values)
    try:
        cfg.ofdm_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    """Render a config that :func:`parse_config` reads back to an equal value."""
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if f.name == "taps":
            for d, p, dop in v or ():
                lines.append(f"tap = {d},{_fmt(p)},{_fmt(dop)}")
            continue
        if v is None:
            text = "auto"
        elif isinstance(v, bool):
            text = "true" if v else "false"
        elif f.name == "snr":
            text = ",".join(_fmt(s) for s in v)
        elif f.name == "estimators":
            text = ",".join(v)
        elif isinstance(v, float):
            text = _fmt(v)
        else:
            text = str(v)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
