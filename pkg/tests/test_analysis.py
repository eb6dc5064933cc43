import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from windvic.analysis import (
    RunMetrics, comparison_table, compute_metrics, drive_train_matrix, frequency_nadir,
    linearized_torsional_frequency, nadir, natural_frequency, oscillation_frequency, secondary_dip,
    settle_time, torsional_gain,
)
from windvic.controllers import ControllerSpec
from windvic.engine import Event, ScenarioConfig, SimSettings, run_scenario
from windvic.errors import DomainError
from windvic.plant import WtgParams

P = WtgParams()


def test_natural_frequency_examples():
    wn = natural_frequency(P)
    assert wn == pytest.approx(10.812, abs=1e-3)
    assert wn / (2 * math.pi) == pytest.approx(1.721, abs=1e-3)
    assert natural_frequency(replace(P, K_sh=4 * P.K_sh)) == pytest.approx(2 * wn, rel=1e-14)
    assert natural_frequency(replace(P, omega_B=377.0)) / (2 * math.pi) == pytest.approx(2.98, abs=0.01)


def test_natural_frequency_decreases_with_generator_inertia():
    values = [natural_frequency(replace(P, H_g=h)) for h in np.linspace(P.H_t, 50 * P.H_t, 20)]
    assert all(b < a for a, b in zip(values, values[1:]))


@given(st.floats(0.5, 10), st.floats(0.1, 5), st.floats(0.1, 5), st.floats(10, 400))
def test_undamped_linearization_matches_formula(h_t, h_g, k_sh, omega_b):
    p = replace(P, H_t=h_t, H_g=h_g, K_sh=k_sh, D_sh=0.0, omega_B=omega_b)
    assert linearized_torsional_frequency(p) == pytest.approx(natural_frequency(p), abs=1e-9)


def test_linearization_has_one_oscillatory_mode():
    eigs = np.linalg.eigvals(drive_train_matrix(P))
    assert np.sum(np.abs(eigs.imag) > 1e-9) == 2
    assert abs(np.min(np.abs(eigs))) < 1e-9


def test_torsional_gain_examples():
    assert torsional_gain(0.0, 0.1, 1.0, P) == pytest.approx(0.078466, abs=1e-6)
    assert torsional_gain(1e6, 0.1, 1.0, P) < 1e-9
    with pytest.raises(DomainError):
        torsional_gain(1.0, 0.1, 0.0, P)


@given(st.floats(0.5, 10), st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0, 5), st.floats(-1, 1),
       st.floats(0.5, 1.5))
def test_torsional_gain_dc_property(h_t, h_g, k_sh, d_sh, p_vir, w0):
    p = replace(P, H_t=h_t, H_g=h_g, K_sh=k_sh, D_sh=d_sh)
    expected = h_t / (k_sh * (h_t + h_g)) * abs(p_vir) / w0
    assert torsional_gain(0.0, p_vir, w0, p) == pytest.approx(expected, rel=1e-12, abs=1e-300)


def test_torsional_gain_peaks_at_natural_frequency():
    p = replace(P, D_sh=1e-4)
    s = np.linspace(0.01, 30.0, 300001)
    mags = [torsional_gain(v, 0.1, 1.0, p) for v in s]
    assert s[int(np.argmax(mags))] == pytest.approx(natural_frequency(p), rel=0.02)


def test_nadir_synthetic():
    t = np.arange(0.0, 60.0, 0.01)
    assert nadir(t, np.full_like(t, 60.0), 20.0) == (60.0, pytest.approx(20.0))
    f = 59.6 + 0.01 * (t - 23.0) ** 2
    f_hz, t_min = nadir(t, f, 20.0)
    assert f_hz == pytest.approx(59.6) and t_min == pytest.approx(23.0)
    with pytest.raises(DomainError):
        nadir(t, f, 100.0)


def double_dip(t):
    first = -0.8 * np.exp(-((t - 22.0) / 1.5) ** 2)
    second = -0.15 * np.exp(-((t - 41.0) / 1.0) ** 2)
    return 60.0 - 0.3 * (1 - np.exp(-np.maximum(t - 20.0, 0) / 3.0)) + first + second


def test_secondary_dip_synthetic():
    t = np.arange(20.0, 100.0, 0.01)
    dip = secondary_dip(t, double_dip(t), 20.0)
    assert dip is not None
    assert dip[0] == pytest.approx(41.0, abs=0.05)
    assert dip[1] == pytest.approx(0.15, abs=0.02)


def test_secondary_dip_respects_threshold():
    t = np.arange(20.0, 100.0, 0.01)
    f = double_dip(t) + 0.145 * np.exp(-((t - 41.0) / 1.0) ** 2)
    assert secondary_dip(t, f, 20.0) is None
    assert secondary_dip(t, f, 20.0, prominence=0.001) is not None


@settings(max_examples=50)
@given(st.floats(0.05, 1.5), st.floats(0.5, 20), st.floats(0.0, 0.7), st.floats(1, 40))
def test_no_dip_on_monotone_recovery(depth, tau, settle, fall):
    t = np.arange(20.0, 120.0, 0.05)
    nadir_t = 20.0 + fall / 10.0
    down = 60.0 - depth * (t - 20.0) / (nadir_t - 20.0)
    up = 60.0 - depth + (depth - settle * depth) * (1 - np.exp(-(t - nadir_t) / tau))
    f = np.where(t < nadir_t, down, up)
    assert secondary_dip(t, f, 20.0) is None


def test_oscillation_frequency_synthetic():
    t = np.arange(0.0, 5.0, 0.001)
    assert oscillation_frequency(t, np.sin(2 * np.pi * 1.5 * t + 0.3), (0.0, 5.0)) == pytest.approx(1.5, abs=0.01)
    assert oscillation_frequency(t, 0.3 + 0.02 * t, (0.0, 5.0)) is None
    trend = 0.1 * t + 0.01 * np.sin(2 * np.pi * 2.0 * t)
    assert oscillation_frequency(t, trend, (0.0, 5.0)) == pytest.approx(2.0, abs=0.01)


def test_settle_time_synthetic():
    t = np.arange(0.0, 100.0, 0.01)
    w = np.where(t < 20, 1.0, np.where(t < 70, 1.0 - 0.1 * (70 - t) / 50, 1.0))
    w = np.where((t >= 20) & (t < 45), 1.0 - 0.1 * (t - 20) / 25, w)
    w = np.where((t >= 45) & (t < 70), 0.9 + 0.1 * (t - 45) / 25 - 0.02, w)
    w = np.where(t >= 70, 1.0, w)
    assert settle_time(t, w, 1.0, 0.01, 20.0) == pytest.approx(70.0, abs=0.011)
    assert settle_time(t, np.ones_like(t), 1.0, 0.01, 20.0) == 20.0
    assert settle_time(t, np.where(t > 90, 0.5, 1.0), 1.0, 0.01, 20.0) is None
    with pytest.raises(DomainError):
        settle_time(t, w, 1.0, 0.0, 20.0)


def test_grid_only_nadir_undershoots_steady_state():
    ts = run_scenario(ScenarioConfig(controller=ControllerSpec(kind="none"), sim=SimSettings(40.0, 0.01, 1)))
    assert frequency_nadir(ts)[0] < 59.6505


def test_nadir_invariant_under_finer_stride():
    cfg = ScenarioConfig(controller=ControllerSpec(kind="conventional"), sim=SimSettings(25.0, 1e-3, 10))
    coarse = run_scenario(cfg)
    fine = run_scenario(replace(cfg, sim=SimSettings(25.0, 1e-3, 1)))
    fc, tc = frequency_nadir(coarse)
    ff, tf = frequency_nadir(fine)
    assert ff <= fc + 1e-15
    assert abs(tf - tc) <= 0.01 + 1e-9
    # a 10 ms grid can miss the minimum by at most curvature * (5 ms)^2 / 2
    i = int(np.argmin(fine.f_hz))
    curv = (fine.f_hz[i - 1] - 2 * fine.f_hz[i] + fine.f_hz[i + 1]) / 1e-6
    assert fc - ff <= 0.5 * curv * 0.005 ** 2 * 1.1 + 1e-12


def test_metrics_serialization():
    cfg = ScenarioConfig(controller=ControllerSpec(kind="conventional"), sim=SimSettings(30.0))
    m = compute_metrics(run_scenario(cfg))
    flat = m.flat()
    assert flat["nadir_hz"] <= 60.0
    assert 20.0 <= flat["nadir_time_s"] <= 30.0
    assert "wtg1_min_omega_g" in flat and "wtgs" not in flat
    assert m.to_text().startswith("controller = conventional\n")
    assert '"nadir_hz"' in m.to_json()
    table = comparison_table([("a", m)])
    assert table.splitlines()[0].startswith("label,controller,nadir_hz")


def test_no_event_run_metrics():
    cfg = ScenarioConfig(controller=ControllerSpec(kind="proposed"), event=Event(20.0, 0.0),
                         sim=SimSettings(30.0))
    m = compute_metrics(run_scenario(cfg))
    assert m.nadir_hz == pytest.approx(60.0, abs=1e-9)
    assert m.recovery_time_s == 20.0
    assert m.secondary_dip_time_s is None
    assert isinstance(m, RunMetrics)
