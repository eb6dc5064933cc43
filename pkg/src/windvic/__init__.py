"""Wind turbine virtual inertia control on an equivalent power grid.

Modules: ``units`` (per-unit bases), ``plant`` (turbine and grid dynamics),
``controllers`` (conventional, VIC-I and OHFT virtual inertia laws),
``gains`` (LQR synthesis on Brunovsky chains), ``engine`` (RK4 scenario
runner), ``analysis`` (metrics) and ``cli`` (command line).
"""

from .analysis import RunMetrics, compute_metrics, frequency_nadir, natural_frequency
from .controllers import ControllerSpec
from .engine import ScenarioConfig, TimeSeries, run_scenario
from .errors import ConfigError, DomainError, SimulationFault, SynthesisError, WindVicError
from .gains import LqrWeights, OhftGains, hurwitz_check, lqr
from .plant import GridParams, WtgParams

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ControllerSpec", "DomainError", "GridParams", "LqrWeights", "OhftGains",
    "RunMetrics", "ScenarioConfig", "SimulationFault", "SynthesisError", "TimeSeries",
    "WindVicError", "WtgParams", "compute_metrics", "frequency_nadir", "hurwitz_check", "lqr",
    "natural_frequency", "run_scenario",
]
