"""Exception hierarchy.

Two roots matter to callers: :class:`InputError` for anything the user can fix
by editing a file or flag (CLI exit code 2) and :class:`NumericalError` for
failures of the mathematics itself (CLI exit code 3).
"""


class ImpactError(Exception):
    """Base class for all package errors."""


class InputError(ImpactError, ValueError):
    """Malformed or inconsistent input."""


class NumericalError(ImpactError, ArithmeticError):
    """A computation could not produce a meaningful result."""


class FrameError(InputError):
    """Operand frame does not match the transform's source frame."""


class ChainFileError(InputError):
    """Chain description, scenario or profile file could not be parsed."""


class InvalidScenario(InputError):
    pass


class InvalidTarget(InputError):
    pass


class SingularInertia(NumericalError):
    pass


class SingularOperationalInertia(NumericalError):
    pass


class DegenerateRatio(NumericalError):
    pass


class SubcriticalVelocity(NumericalError):
    """Viscoelastic exit law would give a restitution coefficient above one."""


class NoDetachment(NumericalError):
    """Restitution did not end within the integration horizon."""

    def __init__(self, message: str, horizon: float):
        super().__init__(message)
        self.horizon = horizon


class MalformedProfile(InputError):
    pass


class NoImpactFound(InputError):
    pass


class FitDiverged(NumericalError):
    """Optimizer gave up; ``best`` holds the best result seen so far."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best
