"""Scenario files: strict TOML parsing into :class:`ScenarioConfig`."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..controllers import (
    CONTROLLER_KINDS, ConventionalVicParams, ControllerSpec, RecoveryGate, ShapingF, ShapingG,
)
from ..engine import Event, ScenarioConfig, SimSettings, WtgSpec
from ..errors import ConfigError, SynthesisError, WindVicError
from ..gains import LqrWeights, OhftGains
from ..plant import GridParams, WtgParams
from ..units import PowerBase

WTG_KEYS = ("H_t", "H_g", "K_sh", "D_sh", "omega_B", "a_P", "k_opt",
            "omega_g_min", "omega_g_max", "v_w1", "beta")
TOP_KEYS = ("grid", "bases", "wtg", "controller", "event", "sim", "output")


@dataclass(frozen=True)
class OutputOptions:
    name: str = "run"
    plots: bool = True


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    output: OutputOptions


def default_scenario_text() -> str:
    return resources.files("windvic").joinpath("data/table1.toml").read_text(encoding="utf-8")


def load_scenario(path: str | Path | None = None) -> Scenario:
    """Read a scenario file; ``None`` loads the bundled defaults."""
    if path is None:
        return parse_scenario(default_scenario_text(), "table1")
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {p}: {exc.strerror}") from exc
    return parse_scenario(text, p.stem)


def parse_scenario(text: str, default_name: str = "run") -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"scenario is not valid TOML: {exc}") from exc
    try:
        return _build(doc, default_name)
    except (ConfigError, SynthesisError):
        raise
    except WindVicError as exc:
        # parameter validation inside the model types
        raise ConfigError(str(exc)) from exc


def _check_keys(section: dict, allowed: tuple[str, ...], where: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(unknown)}")


def _table(doc: dict, key: str, where: str) -> dict:
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"[{where}] must be a table")
    return value


def _num(section: dict, key: str, where: str) -> float:
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}.{key} must be a finite number, got {v!r}")
    return float(v)


def _nums(section: dict, key: str, where: str) -> list[float]:
    v = section[key]
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{where}.{key} must be a non-empty array of numbers")
    return [_num({key: x}, key, where) for x in v]


def _floats(section: dict, keys: tuple[str, ...], where: str) -> dict[str, float]:
    return {k: _num(section, k, where) for k in keys if k in section}


def _build(doc: dict[str, Any], default_name: str) -> Scenario:
    _check_keys(doc, TOP_KEYS, "top level")

    grid_s = _table(doc, "grid", "grid")
    _check_keys(grid_s, ("M", "D", "T_g", "R_droop"), "grid")
    event_s = _table(doc, "event", "event")
    _check_keys(event_s, ("time", "delta_P_L"), "event")
    event = Event(**_floats(event_s, ("time", "delta_P_L"), "event"))
    grid = GridParams(delta_P_L=event.delta_P_L, **_floats(grid_s, ("M", "D", "T_g", "R_droop"), "grid"))

    bases_s = _table(doc, "bases", "bases")
    _check_keys(bases_s, ("grid_rated", "wtg_rated"), "bases")
    bases = PowerBase(**_floats(bases_s, ("grid_rated", "wtg_rated"), "bases"))

    wtg_list = doc.get("wtg")
    if not isinstance(wtg_list, list) or not wtg_list:
        raise ConfigError("at least one [[wtg]] entry is required")
    wtgs = []
    for i, w in enumerate(wtg_list, start=1):
        where = f"wtg.{i}"
        if not isinstance(w, dict):
            raise ConfigError(f"[{where}] must be a table")
        _check_keys(w, ("wind_speed",) + WTG_KEYS, where)
        if "wind_speed" not in w:
            raise ConfigError(f"{where}.wind_speed is required")
        v = _num(w, "wind_speed", where)
        if not v > 0:
            raise ConfigError(f"{where}.wind_speed must be positive")
        wtgs.append(WtgSpec(WtgParams(**_floats(w, WTG_KEYS, where)), v))

    controller = _controller(_table(doc, "controller", "controller"), event.time)

    sim_s = _table(doc, "sim", "sim")
    _check_keys(sim_s, ("t_end", "dt", "record_stride"), "sim")
    sim_kw: dict[str, Any] = _floats(sim_s, ("t_end", "dt"), "sim")
    if "record_stride" in sim_s:
        stride = sim_s["record_stride"]
        if isinstance(stride, bool) or not isinstance(stride, int):
            raise ConfigError("sim.record_stride must be an integer")
        sim_kw["record_stride"] = stride

    out_s = _table(doc, "output", "output")
    _check_keys(out_s, ("name", "plots"), "output")
    name = out_s.get("name", default_name)
    plots = out_s.get("plots", True)
    if not isinstance(name, str) or not name or any(c in name for c in "/\\"):
        raise ConfigError("output.name must be a plain file stem")
    if not isinstance(plots, bool):
        raise ConfigError("output.plots must be true or false")

    cfg = ScenarioConfig(grid=grid, wtgs=tuple(wtgs), controller=controller, event=event,
                         sim=SimSettings(**sim_kw), bases=bases)
    return Scenario(cfg, OutputOptions(name, plots))


def _controller(s: dict, t_event: float) -> ControllerSpec:
    _check_keys(s, ("kind", "k_P_vir", "k_D_vir", "hold_duration", "gains", "q", "alpha",
                    "shaping_f", "shaping_g", "recovery"), "controller")
    kind = s.get("kind", "proposed")
    if kind not in CONTROLLER_KINDS:
        raise ConfigError(f"controller.kind must be one of {', '.join(CONTROLLER_KINDS)}")
    conv = ConventionalVicParams(**_floats(s, ("k_P_vir", "k_D_vir", "hold_duration"), "controller"))

    f_s = _table(s, "shaping_f", "controller.shaping_f")
    _check_keys(f_s, ("knee_low", "knee_high"), "controller.shaping_f")
    g_s = _table(s, "shaping_g", "controller.shaping_g")
    _check_keys(g_s, ("t1", "t2", "t3", "g_min"), "controller.shaping_g")
    r_s = _table(s, "recovery", "controller.recovery")
    _check_keys(r_s, ("band",), "controller.recovery")

    gains = OhftGains(tuple(_nums(s, "gains", "controller"))) if "gains" in s else None
    weights = None
    if "q" in s:
        alpha = _num(s, "alpha", "controller") if "alpha" in s else 1.0
        weights = LqrWeights.diagonal(_nums(s, "q", "controller"), alpha)
    elif "alpha" in s:
        raise ConfigError("controller.alpha needs controller.q")

    return ControllerSpec(
        kind=kind, conventional=conv,
        f=ShapingF(**_floats(f_s, ("knee_low", "knee_high"), "controller.shaping_f")),
        g=ShapingG(t_event=t_event, **_floats(g_s, ("t1", "t2", "t3", "g_min"), "controller.shaping_g")),
        recovery=RecoveryGate(**_floats(r_s, ("band",), "controller.recovery")),
        gains=gains, weights=weights,
    )


def with_overrides(scn: Scenario, controller: str | None = None, dt: float | None = None,
                   wind: float | None = None, plots: bool | None = None) -> Scenario:
    """Apply command-line overrides.

    A new ``dt`` rescales the record stride so samples keep their spacing;
    ``wind`` sets every turbine's wind speed.
    """
    cfg, out = scn.config, scn.output
    try:
        if controller is not None:
            if controller not in CONTROLLER_KINDS:
                raise ConfigError(f"unknown controller {controller!r}")
            cfg = replace(cfg, controller=replace(cfg.controller, kind=controller))
        if dt is not None:
            if not (math.isfinite(dt) and dt > 0):
                raise ConfigError("--dt must be positive")
            spacing = cfg.sim.dt * cfg.sim.record_stride
            stride = round(spacing / dt)
            if stride < 1 or abs(stride * dt - spacing) > 1e-9 * spacing:
                raise ConfigError(f"--dt {dt} does not divide the record spacing {spacing}")
            cfg = replace(cfg, sim=replace(cfg.sim, dt=dt, record_stride=stride))
        if wind is not None:
            if not wind > 0:
                raise ConfigError("wind speed must be positive")
            cfg = replace(cfg, wtgs=tuple(replace(w, wind_speed=wind) for w in cfg.wtgs))
    except (ConfigError, SynthesisError):
        raise
    except WindVicError as exc:
        raise ConfigError(str(exc)) from exc
    if plots is not None:
        out = replace(out, plots=plots)
    return Scenario(cfg, out)
