"""Per-unit bases and conversions between WTG-base and grid-base powers.

Everything inside a turbine model (drive train, aerodynamics, power loop)
is expressed on the turbine's own rating; everything that touches the
swing equation is expressed on the grid rating.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class PowerBase:
    grid_rated: float = 3.0  # MW
    wtg_rated: float = 1.5  # MW

    def __post_init__(self):
        if not (self.grid_rated > 0 and self.wtg_rated > 0):
            raise DomainError("power bases must be strictly positive")

    @property
    def ratio(self) -> float:
        """WTG rating over grid rating (0.5 for the default system)."""
        return self.wtg_rated / self.grid_rated


@dataclass(frozen=True)
class AngularBase:
    grid_omega_base: float = 377.0  # rad/s, 120*pi rounded as in the parameter table
    pole_pairs: int = 3

    def __post_init__(self):
        if not self.grid_omega_base > 0:
            raise DomainError("grid_omega_base must be positive")
        if self.pole_pairs < 1:
            raise DomainError("pole_pairs must be >= 1")

    @property
    def wtg_omega_base(self) -> float:
        return self.grid_omega_base / self.pole_pairs


def wtg_to_grid_pu(p_wtg: float, base: PowerBase) -> float:
    return p_wtg * (base.wtg_rated / base.grid_rated)


def grid_to_wtg_pu(p_grid: float, base: PowerBase) -> float:
    return p_grid * (base.grid_rated / base.wtg_rated)


def hz_from_pu(delta_omega: float, nominal_hz: float = 60.0) -> float:
    """Absolute grid frequency for a per-unit speed deviation."""
    return nominal_hz * (1.0 + delta_omega)
