"""Exception hierarchy. Input-validation errors derive from ValueError."""


class OamqiError(Exception):
    """Base class for all package errors."""


class OamRangeError(OamqiError, ValueError):
    """OAM index outside the supported range."""


class QuadratureError(OamqiError, RuntimeError):
    """Adaptive quadrature ran out of budget before converging.

    ``partial`` holds the best estimate reached (a ``QuadratureResult``).
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class RefinementNeededError(OamqiError, RuntimeError):
    """A fixed-grid oracle could not certify its discretization error."""

    def __init__(self, message, estimate=None, rel_change=None):
        super().__init__(message)
        self.estimate = estimate
        self.rel_change = rel_change


class ContractViolation(OamqiError, ValueError):
    """A result falls outside its documented range."""


class DegenerateStateError(OamqiError, ValueError):
    pass


class NullProjectionError(OamqiError, ValueError):
    pass


class UnsupportedStateError(OamqiError, ValueError):
    pass


class UndefinedVisibilityError(OamqiError, ValueError):
    pass


class StructureNotFoundError(OamqiError, ValueError):
    pass


class EventBudgetError(OamqiError, MemoryError):
    pass


class InsufficientDataError(OamqiError, RuntimeError):
    pass


class CalibrationError(OamqiError, ValueError):
    pass


class DegenerateChainError(OamqiError, ValueError):
    pass


class ConfigError(OamqiError, ValueError):
    pass


class OverRotationWarning(UserWarning):
    """Pump power above P_max: the sin^2 law is past its first maximum."""


class EfficiencyDiscrepancyWarning(UserWarning):
    """A reported efficiency disagrees with the wavelength-corrected value."""
