"""Exception hierarchy shared by every curvjet module."""


class CurvjetError(Exception):
    """Base class for all errors raised by curvjet."""


class DimensionError(CurvjetError, ValueError):
    """Operands disagree in dimension, variable count or truncation order."""


class DegenerateFormError(CurvjetError, ValueError):
    """A bilinear form (or a constant term that must be invertible) is singular."""


class StructureError(CurvjetError, ValueError):
    """A (para-)Hermitian or hyper structure violates its defining identities."""


class PreconditionError(CurvjetError, ValueError):
    """An operation was called outside its domain (wrong frame, order too low, ...)."""


class SingularStepError(CurvjetError):
    """The leading linear block of a Cauchy-Kovalevskaya step is singular."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"singular leading block at x_m-exponent step {step}")


class QuasilinearityError(CurvjetError):
    """A residual functional failed the affinity probe or did not converge."""

    def __init__(self, step: int, message: str):
        self.step = step
        super().__init__(f"step {step}: {message}")
