"""CSV emission and a dependency-free SVG line chart."""

from __future__ import annotations

import csv
import io
import math
import sys
from typing import Iterable, Sequence

from .simkit import SweepResult, SweepRow

__all__ = [
    "SWEEP_HEADER",
    "SINGVALS_HEADER",
    "sweep_csv",
    "singvals_csv",
    "read_sweep_csv",
    "render_svg",
    "write_text",
]

SWEEP_HEADER = "estimator,snr_db,trials,bits,bit_errors,ber,mse"
SINGVALS_HEADER = "k,lambda,cumulative_energy_fraction"
LOG_FLOOR = 1e-7


def fmt(x: float) -> str:
    """17 significant digits: parses back to the same double."""
    return format(float(x), ".17g")


def sweep_csv(result: SweepResult) -> str:
    lines = [SWEEP_HEADER]
    for r in result.sorted_rows():
        mse = r.mse if r.mse_count else math.nan
        lines.append(",".join([r.estimator, fmt(r.snr_db), str(r.trials), str(r.data_bits),
                               str(r.bit_errors), fmt(r.ber), fmt(mse)]))
    return "\n".join(lines) + "\n"


def singvals_csv(values: Sequence[float]) -> str:
    total = math.fsum(values)
    lines = [SINGVALS_HEADER]
    running = 0.0
    for k, lam in enumerate(values):
        running += lam
        lines.append(f"{k},{fmt(lam)},{fmt(running / total if total > 0 else math.nan)}")
    return "\n".join(lines) + "\n"


def read_sweep_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if ",".join(reader.fieldnames or ()) != SWEEP_HEADER:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    rows = []
    for rec in reader:
        rows.append({
            "estimator": rec["estimator"],
            "snr_db": float(rec["snr_db"]),
            "trials": int(rec["trials"]),
            "bits": int(rec["bits"]),
            "bit_errors": int(rec["bit_errors"]),
            "ber": float(rec["ber"]),
            "mse": float(rec["mse"]),
        })
    return rows


def write_text(path: str, text: str) -> None:
    """Write UTF-8 with LF endings; ``-`` means stdout."""
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _as_dicts(rows: Iterable) -> list[dict]:
    out = []
    for r in rows:
        if isinstance(r, SweepRow):
            out.append({"estimator": r.estimator, "snr_db": r.snr_db, "ber": r.ber,
                        "mse": r.mse if r.mse_count else math.nan})
        else:
            out.append(dict(r))
    return out


def render_svg(rows: Iterable, metric: str = "ber", path: str | None = None) -> str:
    """Log-scale metric versus SNR, one polyline per estimator.

    Non-positive values are drawn at ``LOG_FLOOR`` with a hollow marker.
    Returns the SVG text and writes it to ``path`` when given.
    """
    if metric not in ("ber", "mse"):
        raise ValueError(f"metric must be 'ber' or 'mse', got {metric!r}")
    data = _as_dicts(rows)
    if not data:
        raise ValueError("no rows to plot")
    series: dict[str, list[tuple[float, float]]] = {}
    for r in sorted(data, key=lambda d: (d["estimator"], d["snr_db"])):
        series.setdefault(r["estimator"], []).append((float(r["snr_db"]), float(r[metric])))

    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts if y > 0 and math.isfinite(y)]
    x0, x1 = min(xs), max(xs)
    if x0 == x1:
        x0, x1 = x0 - 1, x1 + 1
    bottom_value = min(ys) if ys else LOG_FLOOR
    if len(ys) < len(xs):
        bottom_value = min(bottom_value, LOG_FLOOR)
    lo = math.floor(math.log10(bottom_value))
    hi = math.ceil(math.log10(max(ys))) if ys else lo + 1
    if hi <= lo:
        hi = lo + 1

    width, height = 640, 420
    left, right, top, bottom = 70, 150, 20, 50
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (hi - math.log10(y)) / (hi - lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>',
    ]
    for e in range(lo, hi + 1):
        y = py(10.0 ** e)
        out.append(f'<line class="grid" x1="{left}" y1="{y:.3f}" x2="{left + pw}" y2="{y:.3f}" '
                   'stroke="#ddd"/>')
        out.append(f'<text class="ytick" x="{left - 6}" y="{y + 4:.3f}" font-size="11" '
                   f'text-anchor="end">1e{e}</text>')
    for x in sorted(set(xs)):
        out.append(f'<text class="xtick" x="{px(x):.3f}" y="{top + ph + 16}" font-size="11" '
                   f'text-anchor="middle">{x:g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" font-size="12" '
               'text-anchor="middle">SNR (dB)</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">{metric.upper()}</text>')

    for i, (name, pts) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        coords = []
        markers = []
        for x, y in pts:
            floored = not (y > 0 and math.isfinite(y))
            yv = LOG_FLOOR if floored else max(y, 10.0 ** lo)
            coords.append(f"{px(x):.3f},{py(yv):.3f}")
            if floored:
                markers.append(f'<circle class="floor" cx="{px(x):.3f}" cy="{py(yv):.3f}" r="3" '
                               f'fill="none" stroke="{color}"/>')
        out.append(f'<polyline class="series" data-estimator="{name}" fill="none" '
                   f'stroke="{color}" stroke-width="1.5" points="{" ".join(coords)}"/>')
        out.extend(markers)
        ly = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text class="legend" x="{left + pw + 36}" y="{ly}" font-size="12">{name}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        write_text(path, text)
    return text
