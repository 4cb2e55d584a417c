"""Exception types raised by the simulator and solvers."""


class OligosimError(Exception):
    """Base class for all package errors."""


class ConfigError(OligosimError, ValueError):
    """Malformed or missing configuration entry.

    ``key`` names the offending config key so front ends can report it.
    """

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class InvalidParameterError(OligosimError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class DomainError(OligosimError, ValueError):
    """A function was evaluated outside its mathematical domain."""


class SolverError(OligosimError, RuntimeError):
    pass


class StepSizeError(OligosimError, RuntimeError):
    """Integrator drift correction exceeded its per-step budget."""


class TargetRangeError(OligosimError, ValueError):
    """Requested target is not reachable on the given bracket."""


class PotentialDecreaseError(OligosimError, RuntimeError):
    """Best-response dynamics lowered the potential; indicates a bug."""
