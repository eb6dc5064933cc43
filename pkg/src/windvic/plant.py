"""Wind turbine + equivalent grid plant.

Turbine side (own power base): two-mass drive train, Cp(lambda, beta)
aerodynamics, first-order active-power loop with an MPP reference.
Grid side (grid power base): governor with droop and an aggregated swing
equation driven by the total power imbalance.

State vector layout used throughout the package::

    [w_t1, w_g1, theta_1, pe_1, w_t2, ..., pe_N, dP_g, d_omega]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from scipy.optimize import minimize_scalar

from .errors import DomainError, SimulationFault
from .units import AngularBase, PowerBase

WTG_STATES = 4
GRID_STATES = 2


def cp(lam: float, beta: float = 0.0) -> float:
    """Power coefficient, clamped at zero from below."""
    denom = lam + 0.08 * beta
    if denom == 0.0:
        raise DomainError("singular tip-speed ratio: lambda + 0.08*beta == 0")
    inv_li = 1.0 / denom - 0.035 / (beta**3 + 1.0)
    value = 0.5176 * (116.0 * inv_li - 0.4 * beta - 5.0) * math.exp(-21.0 * inv_li) + 0.0068 * lam
    return max(value, 0.0)


@lru_cache(maxsize=None)
def cp_optimum(beta: float = 0.0) -> tuple[float, float]:
    """(lambda_opt, cp_max) of the Cp surface at fixed pitch."""
    res = minimize_scalar(
        lambda lam: -cp(lam, beta), bounds=(2.0, 15.0), method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x), -float(res.fun)


def _default_lambda_opt() -> float:
    return cp_optimum(0.0)[0]


def _default_cp_max() -> float:
    return cp_optimum(0.0)[1]


@dataclass(frozen=True)
class WtgParams:
    """Turbine constants (1.5 MW DFIG test machine by default).

    ``v_w1`` is the wind speed whose MPP rotor speed is exactly 1 pu. It
    replaces air density, rotor radius and power base, which cancel out once
    the aerodynamic model is pinned to the MPP curve.
    """

    H_t: float = 4.32
    H_g: float = 0.685
    K_sh: float = 1.1
    D_sh: float = 1.5
    omega_B: float = 377.0 / 3.0
    a_P: float = 31.4
    k_opt: float = 0.4425
    omega_g_min: float = 0.71
    omega_g_max: float = 1.2
    v_w1: float = 10.2
    beta: float = 0.0
    lambda_opt: float = field(default_factory=_default_lambda_opt)
    cp_max: float = field(default_factory=_default_cp_max)

    def __post_init__(self):
        for name in ("H_t", "H_g", "K_sh", "a_P", "k_opt", "v_w1", "omega_B"):
            if not getattr(self, name) > 0:
                raise DomainError(f"WtgParams.{name} must be > 0")
        if self.D_sh < 0:
            raise DomainError("WtgParams.D_sh must be >= 0")
        if not 0 < self.omega_g_min < 1 < self.omega_g_max:
            raise DomainError("need 0 < omega_g_min < 1 < omega_g_max")
        if self.beta < 0:
            raise DomainError("pitch angle must be >= 0")
        lam, cpm = cp_optimum(0.0)
        if abs(self.lambda_opt - lam) > 1e-6 or abs(self.cp_max - cpm) > 1e-6:
            raise DomainError("lambda_opt/cp_max must match the optimum of cp(., 0)")

    @classmethod
    def with_angular_base(cls, base: AngularBase, **kw) -> "WtgParams":
        return cls(omega_B=base.wtg_omega_base, **kw)


@dataclass(frozen=True)
class GridParams:
    """Equivalent synchronous generator + load (grid power base)."""

    M: float = 4.584
    D: float = 1.0
    T_g: float = 1.2
    R_droop: float = 0.03
    delta_P_L: float = 0.2

    def __post_init__(self):
        if not (self.M > 0 and self.T_g > 0 and self.R_droop > 0):
            raise DomainError("GridParams M, T_g, R_droop must be > 0")
        if self.D < 0:
            raise DomainError("GridParams.D must be >= 0")

    def steady_state_deviation(self, delta_p_l: float | None = None) -> float:
        """Grid-only settled speed deviation after a load step."""
        load = self.delta_P_L if delta_p_l is None else delta_p_l
        return -load / (self.D + 1.0 / self.R_droop)


@dataclass
class WtgState:
    omega_t: float
    omega_g: float
    theta_sh: float
    P_e: float


@dataclass
class GridState:
    delta_P_g: float = 0.0
    delta_omega: float = 0.0


@dataclass
class SystemState:
    wtgs: list[WtgState]
    grid: GridState

    def __post_init__(self):
        if not self.wtgs:
            raise DomainError("a system needs at least one WTG")

    def to_vector(self) -> list[float]:
        x: list[float] = []
        for w in self.wtgs:
            x.extend((w.omega_t, w.omega_g, w.theta_sh, w.P_e))
        x.extend((self.grid.delta_P_g, self.grid.delta_omega))
        return x

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "SystemState":
        n = (len(x) - GRID_STATES) // WTG_STATES
        wtgs = [WtgState(*x[WTG_STATES * i:WTG_STATES * (i + 1)]) for i in range(n)]
        return cls(wtgs, GridState(x[-2], x[-1]))


def mechanical_power(v_w: float, omega_t: float, params: WtgParams, beta: float | None = None) -> float:
    """Aerodynamic power on the WTG base, calibrated so that the MPP curve is exact."""
    if v_w <= 0 or omega_t <= 0:
        raise DomainError("wind speed and turbine speed must be positive")
    b = params.beta if beta is None else beta
    ratio = v_w / params.v_w1
    lam = params.lambda_opt * omega_t / ratio
    return params.k_opt / params.cp_max * cp(lam, b) * ratio**3


def mpp_reference(omega_g: float, params: WtgParams) -> float:
    """k_opt * w_g^3, dropping to zero below the minimum tracking speed."""
    if omega_g < params.omega_g_min:
        return 0.0
    return params.k_opt * omega_g**3


def mpp_equilibrium(v_w: float, params: WtgParams) -> tuple[float, float]:
    """Pre-disturbance operating point (omega_g0, P_e0) at a given wind speed."""
    if v_w <= 0:
        raise DomainError("wind speed must be positive")
    omega = min(max(v_w / params.v_w1, params.omega_g_min), params.omega_g_max)
    return omega, mpp_reference(omega, params)


def drive_train_deriv(s: WtgState, T_m: float, T_e: float, params: WtgParams) -> tuple[float, float, float]:
    omega_tg = s.omega_t - s.omega_g
    shaft = params.K_sh * s.theta_sh + params.D_sh * omega_tg
    return (
        (T_m - shaft) / (2.0 * params.H_t),
        (shaft - T_e) / (2.0 * params.H_g),
        params.omega_B * omega_tg,
    )


def power_loop_deriv(P_e: float, P_ref: float, a_P: float) -> float:
    return a_P * (P_ref - P_e)


def grid_deriv(g: GridState, delta_P_tot: float, params: GridParams) -> tuple[float, float]:
    d_pg = -g.delta_omega / (params.R_droop * params.T_g) - g.delta_P_g / params.T_g
    d_omega = (delta_P_tot - params.D * g.delta_omega) / params.M
    return d_pg, d_omega


@dataclass(frozen=True)
class Turbine:
    """A WTG at a fixed wind speed."""

    params: WtgParams
    wind_speed: float

    def equilibrium(self) -> WtgState:
        omega, p_e0 = mpp_equilibrium(self.wind_speed, self.params)
        t_m = mechanical_power(self.wind_speed, omega, self.params) / omega
        return WtgState(omega, omega, t_m / self.params.K_sh, p_e0)


class PlantModel:
    """N turbines feeding one equivalent grid bus.

    Holds everything ``system_deriv`` needs besides the state: turbine and
    grid parameters, the power base and the pre-event electrical outputs.
    """

    def __init__(self, turbines: Sequence[Turbine], grid: GridParams, base: PowerBase):
        if not turbines:
            raise DomainError("a system needs at least one WTG")
        self.turbines = list(turbines)
        self.grid = grid
        self.base = base
        self.n = len(self.turbines)
        self.initial = SystemState([t.equilibrium() for t in self.turbines], GridState())
        self.p_e0 = [w.P_e for w in self.initial.wtgs]
        self.omega_g0 = [w.omega_g for w in self.initial.wtgs]

    @property
    def size(self) -> int:
        return WTG_STATES * self.n + GRID_STATES

    def initial_vector(self) -> list[float]:
        return self.initial.to_vector()

    def delta_p_tot(self, x: Sequence[float], delta_p_l: float) -> float:
        r = self.base.ratio
        extra = sum(x[WTG_STATES * i + 3] - self.p_e0[i] for i in range(self.n))
        return x[-2] + r * extra - delta_p_l


def system_deriv(
    x: Sequence[float],
    plant: PlantModel,
    p_vir: Sequence[float],
    delta_p_l: float,
    t: float | None = None,
) -> list[float]:
    """Closed-form state derivative for given virtual-inertia outputs (WTG base)."""
    dx: list[float] = []
    for i, turb in enumerate(plant.turbines):
        p = turb.params
        s = WtgState(*x[WTG_STATES * i:WTG_STATES * (i + 1)])
        if s.omega_t <= 0 or s.omega_g <= 0:
            raise SimulationFault(f"WTG {i + 1} speed left the positive range", t)
        t_m = mechanical_power(turb.wind_speed, s.omega_t, p) / s.omega_t
        t_e = s.P_e / s.omega_g
        dx.extend(drive_train_deriv(s, t_m, t_e, p))
        dx.append(power_loop_deriv(s.P_e, mpp_reference(s.omega_g, p) + p_vir[i], p.a_P))
    dx.extend(grid_deriv(GridState(x[-2], x[-1]), plant.delta_p_tot(x, delta_p_l), plant.grid))
    return dx


__all__ = [
    "GridParams", "GridState", "PlantModel", "SystemState", "Turbine", "WtgParams", "WtgState",
    "cp", "cp_optimum", "drive_train_deriv", "grid_deriv", "mechanical_power", "mpp_equilibrium",
    "mpp_reference", "power_loop_deriv", "system_deriv",
]
