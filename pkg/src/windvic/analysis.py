"""Run metrics and analytic cross-checks for the drive train and grid frequency."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import detrend, find_peaks

from .engine import NOMINAL_HZ, TimeSeries
from .errors import DomainError
from .plant import WtgParams

DIP_PROMINENCE_HZ = 0.01


def natural_frequency(p: WtgParams) -> float:
    """Undamped torsional mode of the two-mass shaft, rad/s."""
    h_tg = p.H_t + p.H_g
    return math.sqrt(p.omega_B * p.K_sh * h_tg / (2.0 * p.H_t * p.H_g))


def drive_train_matrix(p: WtgParams) -> np.ndarray:
    """Linearized (omega_t, omega_g, theta_sh) dynamics with both torques frozen."""
    a_t, a_g = 1.0 / (2.0 * p.H_t), 1.0 / (2.0 * p.H_g)
    return np.array([
        [-p.D_sh * a_t, p.D_sh * a_t, -p.K_sh * a_t],
        [p.D_sh * a_g, -p.D_sh * a_g, p.K_sh * a_g],
        [p.omega_B, -p.omega_B, 0.0],
    ])


def linearized_torsional_frequency(p: WtgParams) -> float:
    """Imaginary part (rad/s) of the oscillatory frozen-torque eigenvalue pair."""
    return float(np.max(np.abs(np.linalg.eigvals(drive_train_matrix(p)).imag)))


def torsional_gain(s_imag: float, p_vir: float, omega_g0: float, p: WtgParams) -> float:
    """|delta theta_sh| for a virtual-power input evaluated at s = j*s_imag."""
    if not omega_g0 > 0:
        raise DomainError("omega_g0 must be positive")
    h_tg = p.H_t + p.H_g
    a = p.D_sh * p.omega_B
    b = p.K_sh * p.omega_B
    s = 1j * s_imag
    tf = p.omega_B * p.H_t / (2.0 * p.H_t * p.H_g * s * s + a * h_tg * s + b * h_tg)
    return abs(tf) * abs(p_vir) / omega_g0


def nadir(t: np.ndarray, f_hz: np.ndarray, start: float) -> tuple[float, float]:
    """Global minimum of f_hz at or after ``start`` and its first occurrence."""
    mask = t >= start - 1e-12
    if not mask.any():
        raise DomainError("no samples after the start time")
    idx = int(np.argmin(f_hz[mask]))
    return float(f_hz[mask][idx]), float(t[mask][idx])


def frequency_nadir(ts: TimeSeries) -> tuple[float, float]:
    return nadir(ts.t, ts.f_hz, ts.event_time)


def secondary_dip(t: np.ndarray, f_hz: np.ndarray, start: float, after: float | None = None,
                  prominence: float = DIP_PROMINENCE_HZ,
                  nominal: float = NOMINAL_HZ) -> tuple[float, float] | None:
    """First local minimum once f has climbed back half of the nadir deviation.

    Returns ``(time, prominence_hz)``; prominence is measured within the
    post-recovery segment.
    """
    nad_hz, nad_t = nadir(t, f_hz, start)
    depth = nominal - nad_hz
    if depth <= 0:
        return None
    half = np.nonzero((t > nad_t) & (f_hz >= nad_hz + 0.5 * depth))[0]
    if half.size == 0:
        return None
    first = int(half[0])
    if after is not None:
        first = max(first, int(np.searchsorted(t, after - 1e-12)))
    seg = f_hz[first:]
    peaks, props = find_peaks(-seg, prominence=prominence)
    if peaks.size == 0:
        return None
    return float(t[first + peaks[0]]), float(props["prominences"][0])


def detect_secondary_dip(ts: TimeSeries, after: float | None = None,
                         prominence: float = DIP_PROMINENCE_HZ) -> tuple[float, float] | None:
    return secondary_dip(ts.t, ts.f_hz, ts.event_time, after, prominence)


def oscillation_frequency(t: np.ndarray, signal: np.ndarray,
                          window: tuple[float, float]) -> float | None:
    """Frequency (Hz) from the mean half-period between zero crossings.

    The signal is linearly detrended over the window first; fewer than four
    crossings gives None.
    """
    mask = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    tw, y = t[mask], np.asarray(signal, dtype=float)[mask]
    if tw.size < 3:
        return None
    y = detrend(y, type="linear")
    idx = np.nonzero(np.signbit(y[:-1]) != np.signbit(y[1:]))[0]
    if idx.size < 4:
        return None
    # linear interpolation of each crossing instant
    y0, y1 = y[idx], y[idx + 1]
    tc = tw[idx] + (tw[idx + 1] - tw[idx]) * y0 / (y0 - y1)
    half_period = (tc[-1] - tc[0]) / (tc.size - 1)
    return 1.0 / (2.0 * half_period)


def settle_time(t: np.ndarray, x: np.ndarray, target: float, tol: float, start: float) -> float | None:
    """First time >= start after which |x - target| <= tol holds to the end."""
    if not tol > 0:
        raise DomainError("tolerance must be positive")
    mask = t >= start - 1e-12
    tw, xw = t[mask], x[mask]
    if tw.size == 0:
        return None
    outside = np.nonzero(np.abs(xw - target) > tol)[0]
    if outside.size == 0:
        return float(start)
    last = int(outside[-1])
    if last == tw.size - 1:
        return None
    return float(tw[last + 1])


def recovery_time(ts: TimeSeries, omega_g0: float, tol: float, wtg: int = 0) -> float | None:
    return settle_time(ts.t, ts.omega_g[wtg], omega_g0, tol, ts.event_time)


@dataclass
class WtgMetrics:
    wind_speed: float
    omega_g0: float
    min_omega_g: float
    torsional_peak_to_peak: float
    torsional_freq_hz: float | None
    recovery_time_s: float | None


@dataclass
class RunMetrics:
    controller: str
    nadir_hz: float
    nadir_time_s: float
    secondary_dip_time_s: float | None
    secondary_dip_depth_hz: float | None
    torsional_freq_hz: float | None
    torsional_peak_to_peak: float
    recovery_time_s: float | None
    wtgs: list[WtgMetrics] = field(default_factory=list)

    def flat(self) -> dict[str, object]:
        out = {k: v for k, v in asdict(self).items() if k != "wtgs"}
        for i, w in enumerate(self.wtgs, start=1):
            for k, v in asdict(w).items():
                out[f"wtg{i}_{k}"] = v
        return out

    def to_json(self) -> str:
        return json.dumps(self.flat(), indent=2, sort_keys=False) + "\n"

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.flat().items())


def _fmt(v: object) -> str:
    if v is None:
        return "none"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def compute_metrics(ts: TimeSeries, torsion_window: float = 10.0, freq_window: float = 5.0,
                    recovery_rel_tol: float = 0.01, dip_after: float | None = None,
                    prominence: float = DIP_PROMINENCE_HZ) -> RunMetrics:
    """Standard metric set. Torsional quantities use omega_t - omega_g after the event."""
    ev = ts.event_time
    nad_hz, nad_t = frequency_nadir(ts)
    dip = detect_secondary_dip(ts, after=dip_after, prominence=prominence)
    twin = ts.window(ev, ev + torsion_window)
    wtgs = []
    for i in range(ts.n_wtg):
        tg = ts.omega_tg[i]
        w0 = ts.omega_g0[i]
        wtgs.append(WtgMetrics(
            wind_speed=ts.wind_speeds[i],
            omega_g0=w0,
            min_omega_g=float(ts.omega_g[i].min()),
            torsional_peak_to_peak=float(np.ptp(tg[twin])) if twin.any() else 0.0,
            torsional_freq_hz=oscillation_frequency(ts.t, tg, (ev, ev + freq_window)),
            recovery_time_s=recovery_time(ts, w0, recovery_rel_tol * w0, i),
        ))
    return RunMetrics(
        controller=ts.controller,
        nadir_hz=nad_hz,
        nadir_time_s=nad_t,
        secondary_dip_time_s=dip[0] if dip else None,
        secondary_dip_depth_hz=dip[1] if dip else None,
        torsional_freq_hz=wtgs[0].torsional_freq_hz,
        torsional_peak_to_peak=wtgs[0].torsional_peak_to_peak,
        recovery_time_s=wtgs[0].recovery_time_s,
        wtgs=wtgs,
    )


def comparison_table(rows: Sequence[tuple[str, RunMetrics]]) -> str:
    """CSV table of headline metrics, one row per labelled run."""
    head = "label,controller,nadir_hz,nadir_time_s,secondary_dip_time_s,torsional_peak_to_peak,recovery_time_s"
    lines = [head]
    for label, m in rows:
        vals = [label, m.controller, m.nadir_hz, m.nadir_time_s, m.secondary_dip_time_s,
                m.torsional_peak_to_peak, m.recovery_time_s]
        lines.append(",".join("" if v is None else (repr(v) if isinstance(v, float) else str(v))
                              for v in vals))
    return "\n".join(lines) + "\n"
