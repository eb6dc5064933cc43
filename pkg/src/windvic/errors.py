"""Exception hierarchy shared by the library and the CLI exit codes."""


class WindVicError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(WindVicError, ValueError):
    """An argument lies outside the domain of a model function."""

    exit_code = 2


class ConfigError(WindVicError, ValueError):
    """Invalid scenario configuration (unknown keys, bad dimensions, ...)."""

    exit_code = 2


class SynthesisError(WindVicError):
    """Gain synthesis failed or produced a non-stabilizing gain set."""

    exit_code = 3


class SimulationFault(WindVicError):
    """A run produced a non-finite or physically invalid state and was aborted."""

    exit_code = 4

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message if t is None else f"{message} (t = {t:.6f} s)")
        self.t = t
