"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedFeatureError(NotImplementedError):
    """The requested variant (e.g. a non-l2 norm) is not implemented."""


class InvalidEnvelopeError(RuntimeError):
    """The declared envelope does not bound the target."""


class InvariantViolation(RuntimeError):
    """An internal invariant of a sampler was broken."""


class BudgetError(ValueError):
    """A grid would exceed the configured evaluation budget."""


class ScheduleContractError(RuntimeError):
    """A refinement schedule tried to read target values."""


class NoModeError(RuntimeError):
    """The fixed-budget optimizer did not reach the mode."""


class InsufficientDataError(ValueError):
    """Too few observations for the requested statistical test."""
