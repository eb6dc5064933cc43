"""Fixed-step RK4 scenario runner.

Time is ``n * dt`` for integer step ``n`` (never accumulated), and every
discontinuity in time -- the load step and the end of the conventional
VIC window -- must sit on a step boundary. Those switches are decided from
the step index, so all four RK stages of one step see the same load and
window flag; only continuous time functions (g(t)) use the stage time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .controllers import ControllerSpec, ControlLaw
from .errors import ConfigError, SimulationFault
from .plant import WTG_STATES, GridParams, PlantModel, Turbine, WtgParams, mpp_reference, system_deriv
from .units import PowerBase, hz_from_pu

NOMINAL_HZ = 60.0


def rk4_step(x: Sequence[float], t: float, dt: float,
             deriv: Callable[[float, Sequence[float]], Sequence[float]]) -> list[float]:
    """One classical Runge-Kutta step of dx/dt = deriv(t, x)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    h2 = 0.5 * dt
    k1 = deriv(t, x)
    k2 = deriv(t + h2, [a + h2 * b for a, b in zip(x, k1)])
    k3 = deriv(t + h2, [a + h2 * b for a, b in zip(x, k2)])
    k4 = deriv(t + dt, [a + dt * b for a, b in zip(x, k3)])
    h6 = dt / 6.0
    out = [a + h6 * (b1 + 2.0 * (b2 + b3) + b4) for a, b1, b2, b3, b4 in zip(x, k1, k2, k3, k4)]
    if not math.isfinite(sum(out)):
        raise SimulationFault("non-finite state after RK4 step", t + dt)
    return out


@dataclass(frozen=True)
class Event:
    time: float = 20.0
    delta_P_L: float = 0.2


@dataclass(frozen=True)
class SimSettings:
    t_end: float = 100.0
    dt: float = 1e-3
    record_stride: int = 10


@dataclass(frozen=True)
class WtgSpec:
    params: WtgParams
    wind_speed: float


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridParams = field(default_factory=GridParams)
    wtgs: tuple[WtgSpec, ...] = (WtgSpec(WtgParams(), 10.8),)
    controller: ControllerSpec = field(default_factory=ControllerSpec)
    event: Event = field(default_factory=Event)
    sim: SimSettings = field(default_factory=SimSettings)
    bases: PowerBase = field(default_factory=PowerBase)

    def __post_init__(self):
        object.__setattr__(self, "wtgs", tuple(self.wtgs))
        s = self.sim
        if not s.dt > 0:
            raise ConfigError("sim.dt must be positive")
        if s.record_stride < 1:
            raise ConfigError("sim.record_stride must be >= 1")
        if not s.t_end > self.event.time:
            raise ConfigError("sim.t_end must exceed event.time")
        if not self.wtgs:
            raise ConfigError("at least one WTG is required")
        for name, value in (("sim.t_end", s.t_end), ("event.time", self.event.time),
                            ("event.time + hold_duration",
                             self.event.time + self.controller.conventional.hold_duration)):
            steps_on_grid(value, s.dt, name)

    @property
    def n_steps(self) -> int:
        return steps_on_grid(self.sim.t_end, self.sim.dt, "sim.t_end")

    def plant(self) -> PlantModel:
        return PlantModel([Turbine(w.params, w.wind_speed) for w in self.wtgs], self.grid, self.bases)


def steps_on_grid(t: float, dt: float, name: str = "time") -> int:
    n = round(t / dt)
    if abs(n * dt - t) > 1e-9 * max(1.0, abs(t)):
        raise ConfigError(f"{name} = {t} is not a multiple of dt = {dt}")
    return n


@dataclass
class TimeSeries:
    """Uniformly sampled run record. Per-WTG arrays have shape (N, samples)."""

    t: np.ndarray
    delta_omega: np.ndarray
    delta_pg: np.ndarray
    delta_pl: np.ndarray
    omega_t: np.ndarray
    omega_g: np.ndarray
    theta_sh: np.ndarray
    p_e: np.ndarray
    p_vir: np.ndarray
    dp_e: np.ndarray
    p_vir_total: np.ndarray  # grid base
    omega_g0: tuple[float, ...]
    p_e0: tuple[float, ...]
    event_time: float
    controller: str
    wind_speeds: tuple[float, ...]

    @property
    def f_hz(self) -> np.ndarray:
        return hz_from_pu(self.delta_omega, NOMINAL_HZ)

    @property
    def n_wtg(self) -> int:
        return self.omega_t.shape[0]

    @property
    def omega_tg(self) -> np.ndarray:
        return self.omega_t - self.omega_g

    def window(self, start: float, stop: float) -> np.ndarray:
        return (self.t >= start - 1e-12) & (self.t <= stop + 1e-12)


class Simulation:
    """Closed-loop model of one scenario: plant + controller + switching schedule."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.plant = cfg.plant()
        self.dt = cfg.sim.dt
        self.n_event = steps_on_grid(cfg.event.time, self.dt, "event.time")
        self.n_hold = steps_on_grid(cfg.controller.conventional.hold_duration, self.dt)
        self.law = ControlLaw(cfg.controller, self.plant, cfg.event.time)
        self._a_p = [t.params.a_P for t in self.plant.turbines]
        self._zeros = [0.0] * self.plant.n

    def flags(self, step: int) -> tuple[float, bool]:
        """(load step, conventional window active) for the step starting at ``step``."""
        load = self.cfg.event.delta_P_L if step >= self.n_event else 0.0
        return load, self.n_event <= step < self.n_event + self.n_hold

    def controller(self, t: float, x: Sequence[float], load: float, active: bool):
        dx0 = system_deriv(x, self.plant, self._zeros, load, t)
        p_vir, total = self.law.outputs(t, x, dx0, load, active)
        return dx0, p_vir, total

    def deriv(self, t: float, x: Sequence[float], load: float, active: bool) -> list[float]:
        dx, p_vir, _ = self.controller(t, x, load, active)
        for i, (a, p) in enumerate(zip(self._a_p, p_vir)):
            dx[WTG_STATES * i + 3] += a * p
        return dx

    def run(self) -> TimeSeries:
        cfg, plant, dt = self.cfg, self.plant, self.dt
        n_steps, stride = cfg.n_steps, cfg.sim.record_stride
        n_rec = n_steps // stride
        n = plant.n
        t_rec = np.empty(n_rec)
        states = np.empty((n_rec, plant.size))
        p_vir_rec = np.empty((n_rec, n))
        total_rec = np.empty(n_rec)
        load_rec = np.empty(n_rec)

        x = plant.initial_vector()
        k = 0
        for step in range(n_steps):
            load, active = self.flags(step)
            self.law.begin_step(step * dt, x, load)
            x = rk4_step(x, step * dt, dt, lambda t, y: self.deriv(t, y, load, active))
            done = step + 1
            if done % stride == 0 and k < n_rec:
                t_now = done * dt
                for i in range(n):
                    if x[WTG_STATES * i + 1] <= 0 or x[WTG_STATES * i] <= 0:
                        raise SimulationFault(f"WTG {i + 1} speed left the positive range", t_now)
                load_now, active_now = self.flags(done)
                _, p_vir, total = self.controller(t_now, x, load_now, active_now)
                t_rec[k] = t_now
                states[k] = x
                p_vir_rec[k] = p_vir
                total_rec[k] = total
                load_rec[k] = load_now
                k += 1

        per = states[:, :WTG_STATES * n].reshape(n_rec, n, WTG_STATES).transpose(1, 2, 0)
        omega_g = per[:, 1]
        p_vir_t = p_vir_rec.T
        mpp = np.array([[mpp_reference(w, turb.params) for w in omega_g[i]]
                        for i, turb in enumerate(plant.turbines)]).reshape(n, n_rec)
        mpp0 = np.array([mpp_reference(w, turb.params)
                         for w, turb in zip(plant.omega_g0, plant.turbines)])[:, None]
        return TimeSeries(
            t=t_rec,
            delta_omega=states[:, -1].copy(),
            delta_pg=states[:, -2].copy(),
            delta_pl=load_rec,
            omega_t=per[:, 0].copy(),
            omega_g=omega_g.copy(),
            theta_sh=per[:, 2].copy(),
            p_e=per[:, 3].copy(),
            p_vir=p_vir_t.copy(),
            dp_e=(mpp - mpp0) + p_vir_t,
            p_vir_total=total_rec,
            omega_g0=tuple(plant.omega_g0),
            p_e0=tuple(plant.p_e0),
            event_time=cfg.event.time,
            controller=cfg.controller.kind,
            wind_speeds=tuple(w.wind_speed for w in cfg.wtgs),
        )


def run_scenario(cfg: ScenarioConfig) -> TimeSeries:
    return Simulation(cfg).run()
