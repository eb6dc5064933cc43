"""Atomic writers for run artifacts: CSV time series, metrics JSON, SVG plots."""

from __future__ import annotations

import io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..analysis import RunMetrics
from ..engine import TimeSeries

CSV_HEAD = ("t", "delta_omega_pu", "f_hz", "delta_pg_pu")
WTG_COLUMNS = ("omega_t", "omega_g", "theta_sh", "pe", "pvir", "dpe")
SVG_WIDTH, SVG_HEIGHT = 1200, 600
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass(frozen=True)
class OutputBundle:
    csv: Path
    metrics: Path
    plots: tuple[Path, ...] = ()


def atomic_write(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_header(n_wtg: int) -> str:
    cols = list(CSV_HEAD)
    for i in range(1, n_wtg + 1):
        cols.extend(f"{c}_{i}" for c in WTG_COLUMNS)
    return ",".join(cols)


def timeseries_csv(ts: TimeSeries) -> str:
    cols = [ts.t, ts.delta_omega, ts.f_hz, ts.delta_pg]
    for i in range(ts.n_wtg):
        cols.extend([ts.omega_t[i], ts.omega_g[i], ts.theta_sh[i], ts.p_e[i], ts.p_vir[i], ts.dp_e[i]])
    buf = io.StringIO()
    # %-formatting is locale independent
    np.savetxt(buf, np.column_stack(cols), fmt="%.12g", delimiter=",",
               header=csv_header(ts.n_wtg), comments="")
    return buf.getvalue()


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, n)


def svg_plot(t: np.ndarray, series: Sequence[tuple[str, np.ndarray]], title: str,
             xlabel: str, ylabel: str) -> str:
    """Line chart with one polyline per series on a fixed 1200x600 canvas."""
    left, right, top, bottom = 90, 30, 50, 70
    pw, ph = SVG_WIDTH - left - right, SVG_HEIGHT - top - bottom
    x0, x1 = float(t[0]), float(t[-1])
    ys = np.concatenate([np.asarray(y, dtype=float) for _, y in series])
    y0, y1 = float(ys.min()), float(ys.max())
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    if x1 <= x0:
        x1 = x0 + 1.0

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" font-family="sans-serif" font-size="13">',
        f'<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<text x="{SVG_WIDTH / 2:.1f}" y="28" text-anchor="middle" font-size="17">{title}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for v in _ticks(x0, x1):
        x = sx(v)
        out.append(f'<line x1="{x:.1f}" y1="{top + ph}" x2="{x:.1f}" y2="{top + ph + 6}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{top + ph + 22}" text-anchor="middle">{v:.4g}</text>')
    for v in _ticks(y0, y1):
        y = sy(v)
        out.append(f'<line x1="{left - 6}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{left - 10}" y="{y + 4:.1f}" text-anchor="end">{v:.5g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{SVG_HEIGHT - 20}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="22" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 22 {top + ph / 2:.1f})">{ylabel}</text>')
    for k, (label, y) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(t, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 18 + 18 * k
        out.append(f'<line x1="{left + pw - 150}" y1="{ly - 4}" x2="{left + pw - 125}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw - 118}" y="{ly}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_set(ts: TimeSeries) -> dict[str, str]:
    n = ts.n_wtg
    return {
        "frequency": svg_plot(ts.t, [("f", ts.f_hz)], f"Grid frequency ({ts.controller})",
                              "t (s)", "f (Hz)"),
        "rotor_speed": svg_plot(ts.t, [(f"WTG {i + 1}", ts.omega_g[i]) for i in range(n)],
                                f"Generator rotor speed ({ts.controller})", "t (s)", "omega_g (pu)"),
        "power_increment": svg_plot(ts.t, [(f"WTG {i + 1}", ts.dp_e[i]) for i in range(n)],
                                    f"Active power increment ({ts.controller})", "t (s)",
                                    "delta P_e (pu, WTG base)"),
    }


def write_bundle(out_dir: Path, name: str, ts: TimeSeries, metrics: RunMetrics,
                 plots: bool = True) -> OutputBundle:
    out_dir = Path(out_dir)
    csv_path = out_dir / f"{name}.csv"
    json_path = out_dir / f"{name}_metrics.json"
    atomic_write(csv_path, timeseries_csv(ts))
    atomic_write(json_path, metrics.to_json())
    svgs = []
    if plots:
        for key, text in plot_set(ts).items():
            p = out_dir / f"{name}_{key}.svg"
            atomic_write(p, text)
            svgs.append(p)
    return OutputBundle(csv_path, json_path, tuple(svgs))
