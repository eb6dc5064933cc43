"""Virtual inertia controllers.

Three laws are provided:

* ``conventional`` -- proportional/derivative frequency feedback, held for a
  fixed window after the event and then switched off abruptly;
* ``vic-i`` -- the same feedback multiplied by the time profile g(t);
* ``proposed`` -- conventional feedback plus a linearizing input u that turns
  (twist rate, grid speed deviation) into a chain of integrators closed by
  LQR gains, shaped by f(omega_g) and g(t) and shared among turbines by
  participation factors.

Scalar building blocks are plain functions; :class:`ControlLaw` wires them to
the plant state for the simulation engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

from .errors import ConfigError, DomainError, SynthesisError
from .gains import LqrWeights, OhftGains, brunovsky_chain, hurwitz_check, lqr_gains
from .plant import WTG_STATES, GridParams, PlantModel, mpp_reference, system_deriv

ControllerKind = Literal["none", "conventional", "vic-i", "proposed"]
CONTROLLER_KINDS: tuple[str, ...] = ("none", "conventional", "vic-i", "proposed")


@dataclass(frozen=True)
class ConventionalVicParams:
    k_P_vir: float = 7.0
    k_D_vir: float = 2.0
    hold_duration: float = 20.0

    def __post_init__(self):
        if self.k_P_vir < 0 or self.k_D_vir < 0:
            raise DomainError("VIC gains must be non-negative")
        if not self.hold_duration > 0:
            raise DomainError("hold_duration must be positive")


@dataclass(frozen=True)
class ShapingF:
    knee_low: float = 0.71
    knee_high: float = 0.95

    def __post_init__(self):
        if not self.knee_low < self.knee_high:
            raise DomainError("shaping f needs knee_low < knee_high")


@dataclass(frozen=True)
class RecoveryGate:
    """Absorb-phase weighting by rotor-speed deficit.

    While g(t) < 0 the proposed law scales its latched support magnitude by
    clamp((omega_g0 - omega_g) / band, 0, 1), so absorption fades out as the
    rotor returns to its pre-event MPP speed.
    """

    band: float = 0.05

    def __post_init__(self):
        if not self.band > 0:
            raise DomainError("recovery band must be positive")


def recovery_gate(omega_g: float, omega_g0: float, p: RecoveryGate = RecoveryGate()) -> float:
    return min(1.0, max(0.0, (omega_g0 - omega_g) / p.band))


@dataclass(frozen=True)
class ShapingG:
    t_event: float = 20.0
    t1: float = 25.0
    t2: float = 52.0
    t3: float = 79.0
    g_min: float = -0.5

    def __post_init__(self):
        if not self.t_event < self.t1 < self.t2 < self.t3:
            raise DomainError("shaping g needs t_event < t1 < t2 < t3")
        if not self.g_min < 0:
            raise DomainError("g_min must be negative")

    @property
    def t_mid(self) -> float:
        return 0.5 * (self.t1 + self.t2)

    @property
    def zero_crossing(self) -> float:
        """Instant where support turns into absorption."""
        return self.t1 + (self.t_mid - self.t1) / (1.0 - self.g_min)


def conventional_vic(delta_omega: float, d_delta_omega_dt: float, p: ConventionalVicParams,
                     t: float, t_event: float) -> float:
    if not t_event <= t < t_event + p.hold_duration:
        return 0.0
    return -p.k_P_vir * delta_omega - p.k_D_vir * d_delta_omega_dt


def vic_i(p_vir: float, g_val: float) -> float:
    return p_vir * g_val


def shaping_f(omega_g: float, p: ShapingF = ShapingF()) -> float:
    if omega_g <= p.knee_low:
        return 0.0
    if omega_g >= p.knee_high:
        return 1.0
    return (omega_g - p.knee_low) / (p.knee_high - p.knee_low)


def shaping_g(t: float, p: ShapingG = ShapingG()) -> float:
    """Support/absorb time profile.

    Steps to 1 at the event (all controller inputs are still zero there),
    then ramps to ``g_min`` at the midpoint of [t1, t2], holds, and ramps back
    to 0 at t3.
    """
    if t < p.t_event or t >= p.t3:
        return 0.0
    if t <= p.t1:
        return 1.0
    mid = p.t_mid
    if t <= mid:
        return 1.0 + (p.g_min - 1.0) * (t - p.t1) / (mid - p.t1)
    if t <= p.t2:
        return p.g_min
    return p.g_min * (p.t3 - t) / (p.t3 - p.t2)


def ohft_u(omega_tg: Sequence[float], delta_omega: float, delta_P_tot: float,
           gains: OhftGains, grid: GridParams) -> float:
    """Linearizing control input (grid base) for N twist rates plus grid speed."""
    k = gains.k
    if len(omega_tg) + 1 != len(k):
        raise ConfigError(f"{len(omega_tg)} twist rates need {len(omega_tg) + 1} gains, got {len(k)}")
    twist = sum(ki * w for ki, w in zip(k, omega_tg))
    return -grid.M * twist - (grid.M * k[-1] - grid.D) * delta_omega - delta_P_tot


def compensate_interface(u: float, du_dt: float, a_P: float) -> float:
    """Pre-distort u so that the first-order power loop delivers u itself."""
    return u + du_dt / a_P


def proposed_pvir_single(p_vir_conventional: float, u_prime: float, omega_g: float, t: float,
                         f: ShapingF = ShapingF(), g: ShapingG = ShapingG()) -> float:
    return (p_vir_conventional + u_prime) * shaping_f(omega_g, f) * shaping_g(t, g)


def participation_factors(p_e0: Sequence[float]) -> list[float]:
    if any(p <= 0 for p in p_e0):
        raise DomainError("participation factors need strictly positive initial powers")
    total = sum(p_e0)
    return [p / total for p in p_e0]


def proposed_pvir_multi(p_vir_conventional: float, u_prime: float, omega_g: Sequence[float],
                        pf: Sequence[float], t: float, f: ShapingF = ShapingF(),
                        g: ShapingG = ShapingG()) -> list[float]:
    """Per-WTG shares of the coordinated support, on the grid base."""
    if len(omega_g) != len(pf):
        raise ConfigError("omega_g and participation factors differ in length")
    common = (p_vir_conventional + u_prime) * shaping_g(t, g)
    return [common * pf_i * shaping_f(w, f) for w, pf_i in zip(omega_g, pf)]


@dataclass(frozen=True)
class ControllerSpec:
    """Which controller runs, with its tuning.

    ``gains`` takes precedence over ``weights``; with neither, LQR is run on
    the default weights for the chain order N+1.
    """

    kind: ControllerKind = "proposed"
    conventional: ConventionalVicParams = field(default_factory=ConventionalVicParams)
    f: ShapingF = field(default_factory=ShapingF)
    g: ShapingG = field(default_factory=ShapingG)
    recovery: RecoveryGate = field(default_factory=RecoveryGate)
    gains: OhftGains | None = None
    weights: LqrWeights | None = None

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise ConfigError(f"unknown controller kind {self.kind!r}")

    def resolve_gains(self, n_wtg: int) -> OhftGains:
        if self.gains is not None:
            gains = self.gains
            if len(gains.k) != n_wtg + 1:
                raise ConfigError(f"{n_wtg} WTG(s) need {n_wtg + 1} gains, got {len(gains.k)}")
        else:
            weights = self.weights or LqrWeights.default(n_wtg + 1)
            if weights.Q.shape[0] != n_wtg + 1:
                raise ConfigError(f"Q must be {n_wtg + 1}x{n_wtg + 1} for {n_wtg} WTG(s)")
            gains = lqr_gains(brunovsky_chain(n_wtg + 1), weights)
        return gains

    def aligned_to(self, t_event: float) -> "ControllerSpec":
        """Copy whose g(t) profile starts at the given event time."""
        return replace(self, g=replace(self.g, t_event=t_event))


class ControlLaw:
    """Closed-loop evaluation of a :class:`ControllerSpec` against a plant.

    ``outputs`` receives the plant derivative computed with zero virtual
    power (``dx0``); every signal the controllers need (rate of frequency
    change, twist acceleration, governor rate) is read from it, so no signal
    is differentiated numerically.

    The proposed law keeps one piece of state: the support magnitude P'_vir
    latched when g(t) first turns negative (see :meth:`begin_step`). During
    absorption the output is g(t) * latched * pf_i * recovery gate, which
    keeps every feedback loop at its support-phase sign.
    """

    def __init__(self, spec: ControllerSpec, plant: PlantModel, t_event: float):
        self.spec = spec.aligned_to(t_event)
        self.plant = plant
        self.t_event = t_event
        self.n = plant.n
        self.ratio = plant.base.ratio
        self.gains: OhftGains | None = None
        self.pf: list[float] = []
        if self.spec.kind == "proposed":
            self.gains = self.spec.resolve_gains(plant.n)
            stable, eigs = hurwitz_check(self.gains)
            if not stable:
                raise SynthesisError(
                    f"hurwitz_check failed for gains {self.gains}: eigenvalues {eigs.tolist()}")
            self.pf = participation_factors([self.ratio * p for p in plant.p_e0])
        self.latched: float | None = None

    def begin_step(self, t: float, x: Sequence[float], delta_p_l: float) -> None:
        """Update switching memory at a step boundary (called by the engine)."""
        if self.spec.kind != "proposed" or self.latched is not None:
            return
        if t >= self.spec.g.zero_crossing:
            dx0 = system_deriv(x, self.plant, [0.0] * self.n, delta_p_l, t)
            p_vir_grid = self.ratio * self.n * self._eq13(x, dx0)
            u_prime = self._compensated_u(x, dx0, delta_p_l, p_vir_grid, [0.0] * self.n)
            self.latched = p_vir_grid + u_prime

    def _eq13(self, x, dx0) -> float:
        conv = self.spec.conventional
        return -conv.k_P_vir * x[-1] - conv.k_D_vir * dx0[-1]

    def outputs(self, t: float, x: Sequence[float], dx0: Sequence[float], delta_p_l: float,
                window_active: bool) -> tuple[list[float], float]:
        """(per-WTG P_vir on WTG base, total on grid base)."""
        kind = self.spec.kind
        n, r = self.n, self.ratio
        if kind == "none":
            return [0.0] * n, 0.0
        p_vir = self._eq13(x, dx0)
        if kind == "conventional":
            out = [p_vir if window_active else 0.0] * n
            return out, r * sum(out)
        if kind == "vic-i":
            out = [vic_i(p_vir, shaping_g(t, self.spec.g))] * n
            return out, r * sum(out)
        shares, total = self._proposed_shares(t, x, dx0, delta_p_l, r * n * p_vir)
        return [s / r for s in shares], total

    def _proposed_shares(self, t, x, dx0, delta_p_l, p_vir_grid) -> tuple[list[float], float]:
        """Grid-base shares and the aggregate total, computed independently."""
        n = self.n
        g_val = shaping_g(t, self.spec.g)
        if g_val == 0.0:
            return [0.0] * n, 0.0
        omega_g = [x[WTG_STATES * i + 1] for i in range(n)]
        if g_val < 0.0:
            held = self.latched or 0.0
            gates = [recovery_gate(w, w0, self.spec.recovery) for w, w0 in zip(omega_g, self.plant.omega_g0)]
            shares = [g_val * held * pf * gt for pf, gt in zip(self.pf, gates)]
            return shares, held * g_val * sum(pf * gt for pf, gt in zip(self.pf, gates))
        f_vals = [shaping_f(w, self.spec.f) for w in omega_g]
        weights = [pf * fv * g_val for pf, fv in zip(self.pf, f_vals)]
        u_prime = self._compensated_u(x, dx0, delta_p_l, p_vir_grid, weights)
        shares = proposed_pvir_multi(p_vir_grid, u_prime, omega_g, self.pf, t, self.spec.f, self.spec.g)
        total = (p_vir_grid + u_prime) * g_val * sum(pf * fv for pf, fv in zip(self.pf, f_vals))
        return shares, total

    def _compensated_u(self, x, dx0, delta_p_l, p_vir_grid, weights) -> float:
        """u' (grid base) when each P_ref carries weights[i] * (P_vir + u')."""
        plant, grid, k = self.plant, self.plant.grid, self.gains.k
        r = self.ratio
        omega_tg, twist_rate = [], 0.0
        for i in range(self.n):
            j = WTG_STATES * i
            omega_tg.append(x[j] - x[j + 1])
            twist_rate += k[i] * (dx0[j] - dx0[j + 1])
        u = ohft_u(omega_tg, x[-1], plant.delta_p_tot(x, delta_p_l), self.gains, grid)

        # du/dt along the flow. The WTG power rates depend on u' itself through
        # P_ref, which makes the interface relation linear in u'; solve it exactly.
        a_c = plant.turbines[0].params.a_P
        du_free = -grid.M * twist_rate - (grid.M * k[-1] - grid.D) * dx0[-1] - dx0[-2]
        loop = 0.0
        for i, turb in enumerate(plant.turbines):
            a_i = turb.params.a_P
            j = WTG_STATES * i
            du_free -= r * a_i * (mpp_reference(x[j + 1], turb.params) - x[j + 3])
            du_free -= a_i * weights[i] * p_vir_grid
            loop += a_i * weights[i]
        du_dt = (du_free - loop * u) / (1.0 + loop / a_c)
        return compensate_interface(u, du_dt, a_c)
