"""Exception hierarchy shared by every module of the package."""


class SBTRPOError(Exception):
    """Base class for all package errors."""


class InputError(SBTRPOError, ValueError):
    """An argument violates a documented precondition."""


class StateError(SBTRPOError, RuntimeError):
    """An object was used in a state that does not permit the call."""


class NumericalError(SBTRPOError, ArithmeticError):
    """A computation produced a non-finite or meaningless intermediate."""


class InfeasibleError(SBTRPOError):
    """No strictly safe policy exists for the environment."""


class DegenerateInstance(SBTRPOError):
    """The analytic trust-region QP is outside its non-degenerate case."""


class ConfigError(SBTRPOError, ValueError):
    """A configuration file or override is malformed."""


class RunError(SBTRPOError, RuntimeError):
    """A training run failed; ``partial`` holds whatever was logged so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
