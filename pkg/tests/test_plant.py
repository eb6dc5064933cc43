import math

import pytest
from hypothesis import given, settings, strategies as st

from windvic.engine import rk4_step
from windvic.errors import DomainError, SimulationFault
from windvic.plant import (
    GridParams, GridState, PlantModel, SystemState, Turbine, WtgParams, WtgState, cp, cp_optimum,
    drive_train_deriv, grid_deriv, mechanical_power, mpp_equilibrium, mpp_reference,
    power_loop_deriv, system_deriv,
)
from windvic.units import PowerBase

P = WtgParams()


def cp_by_hand(lam, beta):
    inv_li = 1.0 / (lam + 0.08 * beta) - 0.035 / (beta**3 + 1.0)
    return 0.5176 * (116.0 * inv_li - 0.4 * beta - 5.0) * math.exp(-21.0 * inv_li) + 0.0068 * lam


def golden_max(fun, a, b, tol=1e-10):
    r = (math.sqrt(5) - 1) / 2
    c, d = b - r * (b - a), a + r * (b - a)
    while b - a > tol:
        if fun(c) > fun(d):
            b, d = d, c
            c = b - r * (b - a)
        else:
            a, c = c, d
            d = a + r * (b - a)
    x = 0.5 * (a + b)
    return x, fun(x)


def bisect(fun, lo, hi, tol=1e-14):
    flo = fun(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def test_cp_examples():
    assert cp(8.1, 0.0) == pytest.approx(cp_by_hand(8.1, 0.0), rel=1e-14)
    assert cp(8.1, 0.0) == pytest.approx(0.480012, abs=1e-6)
    assert cp_by_hand(20.0, 0.0) == pytest.approx(-1.095, abs=1e-3)
    assert cp(20.0, 0.0) == 0.0
    assert cp(7.0, 2.0) == pytest.approx(cp_by_hand(7.0, 2.0), rel=1e-14)


def test_cp_singular():
    with pytest.raises(DomainError):
        cp(0.0, 0.0)


def test_cp_optimum_matches_golden_section():
    coarse = max((cp(0.01 * k), 0.01 * k) for k in range(200, 1500))[1]
    lam, val = golden_max(lambda x: cp_by_hand(x, 0.0), coarse - 0.05, coarse + 0.05)
    lam_opt, cp_max = cp_optimum(0.0)
    assert lam_opt == pytest.approx(lam, abs=1e-6)
    assert cp_max == pytest.approx(val, abs=1e-12)
    assert lam_opt == pytest.approx(8.1, abs=0.01) and cp_max == pytest.approx(0.48, abs=1e-3)


def test_mechanical_power_examples():
    assert mechanical_power(10.2, 1.0, P) == pytest.approx(0.4425, abs=1e-12)
    # lambda = 7.29, cp = 0.4644
    lam = P.lambda_opt * 0.9
    expected = P.k_opt / P.cp_max * cp_by_hand(lam, 0.0)
    assert mechanical_power(10.2, 0.9, P) == pytest.approx(expected, rel=1e-13)
    assert mechanical_power(10.2, 0.9, P) == pytest.approx(0.428208, abs=1e-6)
    assert mechanical_power(10.8, 10.8 / 10.2, P) == pytest.approx(0.5252, abs=1e-4)


def test_mpp_reference_examples():
    assert mpp_reference(1.0, P) == 0.4425
    assert mpp_reference(0.71, P) == pytest.approx(0.1584, abs=1e-4)
    assert mpp_reference(0.70, P) == 0.0


@pytest.mark.parametrize("v, w0, p0", [(10.2, 1.0, 0.4425), (10.8, 1.0588, 0.5252), (7.3, 0.7157, 0.1622)])
def test_mpp_equilibrium_examples(v, w0, p0):
    w, p = mpp_equilibrium(v, P)
    assert w == pytest.approx(w0, abs=1e-4)
    assert p == pytest.approx(p0, abs=1e-4)
    # bisection on the power balance residual, searching above the stall side
    root = bisect(lambda x: mechanical_power(v, x, P) - P.k_opt * x**3, 0.9 * w0, 1.3 * w0)
    assert w == pytest.approx(root, abs=1e-10)
    assert abs(mechanical_power(v, w, P) - p) < 1e-10


def test_mpp_equilibrium_errors_and_clamps():
    with pytest.raises(DomainError):
        mpp_equilibrium(0.0, P)
    assert mpp_equilibrium(5.0, P)[0] == P.omega_g_min
    assert mpp_equilibrium(15.0, P)[0] == P.omega_g_max


@given(st.floats(0.71 * 10.2, 1.2 * 10.2))
def test_power_curve_consistency(v):
    w = v / P.v_w1
    assert mechanical_power(v, w, P) == pytest.approx(mpp_reference(w, P), rel=1e-13)


def test_drive_train_examples():
    s = WtgState(1.0, 1.0, 0.5 / P.K_sh, 0.5)
    assert drive_train_deriv(s, 0.5, 0.5, P) == pytest.approx((0.0, 0.0, 0.0), abs=1e-15)
    # shaft torque 0.4, T_m = 0.5
    s = WtgState(1.0, 1.0, 0.4 / P.K_sh, 0.5)
    assert drive_train_deriv(s, 0.5, 0.4, P)[0] == pytest.approx(0.011574, abs=1e-6)
    s = WtgState(1.01, 1.0, 0.0, 0.5)
    assert drive_train_deriv(s, 0.0, 0.0, P)[2] == pytest.approx(1.25667, abs=1e-5)


def test_power_loop_examples():
    assert power_loop_deriv(0.4, 0.4, 31.4) == 0.0
    assert power_loop_deriv(0.4, 0.5, 31.4) == pytest.approx(3.14)
    assert power_loop_deriv(0.5, 0.4, 31.4) == pytest.approx(-3.14)


def test_grid_examples():
    g = GridParams()
    assert grid_deriv(GridState(0.0, 0.0), -0.2, g)[1] == pytest.approx(-0.043630, abs=1e-6)
    assert grid_deriv(GridState(0.0, -0.005), 0.0, g)[0] == pytest.approx(0.138889, abs=1e-6)
    assert g.steady_state_deviation() == pytest.approx(-0.0058252, abs=1e-7)


def test_grid_steady_state_is_a_fixed_point():
    g = GridParams()
    dw = g.steady_state_deviation()
    d_pg, d_w = grid_deriv(GridState(-dw / g.R_droop, dw), -dw / g.R_droop - 0.2, g)
    assert abs(d_pg) < 1e-12 and abs(d_w) < 1e-12


def plant_for(*winds):
    return PlantModel([Turbine(P, v) for v in winds], GridParams(), PowerBase())


def test_system_deriv_examples():
    plant = plant_for(10.8)
    x = plant.initial_vector()
    assert max(abs(v) for v in system_deriv(x, plant, [0.0], 0.0)) < 1e-12
    assert system_deriv(x, plant, [0.0], 0.2)[-1] == pytest.approx(-0.2 / 4.584, rel=1e-12)
    plant3 = plant_for(10.8, 10.8, 10.8)
    d = system_deriv(plant3.initial_vector(), plant3, [0.01] * 3, 0.2)
    assert d[0:4] == d[4:8] == d[8:12]


def test_system_deriv_faults_on_nonpositive_speed():
    plant = plant_for(10.8)
    x = plant.initial_vector()
    x[1] = -0.1
    with pytest.raises(SimulationFault):
        system_deriv(x, plant, [0.0], 0.0)


def test_torque_power_consistency_at_unity_speed():
    p = mechanical_power(10.2, 1.0, P)
    assert p / 1.0 == p


@settings(max_examples=15, deadline=None)
@given(st.floats(7.25, 12.0))
def test_fixed_point_holds_for_10_s(v):
    plant = plant_for(v)
    x0 = plant.initial_vector()
    x = list(x0)
    dt = 0.01
    for n in range(1000):
        x = rk4_step(x, n * dt, dt, lambda t, y: system_deriv(y, plant, [0.0], 0.0))
    assert max(abs(a - b) for a, b in zip(x, x0)) < 1e-9


def test_clamped_speed_is_not_a_power_balance():
    # below 7.242 m/s the MPP speed is clamped at omega_g_min
    w, p = mpp_equilibrium(7.0, P)
    assert w == P.omega_g_min
    assert abs(mechanical_power(7.0, w, P) - p) > 1e-4


def test_system_state_round_trip():
    s = SystemState([WtgState(1.0, 1.1, 0.4, 0.5), WtgState(0.9, 0.8, 0.3, 0.2)], GridState(0.01, -0.002))
    assert SystemState.from_vector(s.to_vector()) == s
    with pytest.raises(DomainError):
        SystemState([], GridState())


def test_params_validation():
    with pytest.raises(DomainError):
        WtgParams(H_t=0.0)
    with pytest.raises(DomainError):
        WtgParams(lambda_opt=9.0)
    with pytest.raises(DomainError):
        GridParams(M=-1.0)
