"""Exception hierarchy shared by every stage of the pipeline."""


class LevyHomogError(Exception):
    """Base class for all package errors."""


class ComputationError(LevyHomogError):
    """A numerical stage failed; the CLI maps these to exit code 1."""


class InputError(LevyHomogError):
    """Bad user input (config, expressions, files); exit code 2."""


class InvalidParameter(InputError, ValueError):
    pass


class HaloTooShort(InputError, ValueError):
    pass


class DomainError(InputError, ArithmeticError):
    """Expression evaluation left its domain (division by zero)."""


class ConfigError(InputError):
    def __init__(self, key: str, reason: str):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason


class SingularSystem(ComputationError):
    pass


class NotConverged(ComputationError):
    pass


class NotAffine(ComputationError):
    pass


class CertificateFailed(ComputationError):
    def __init__(self, message: str, pair=None):
        super().__init__(message)
        self.pair = pair


class OrderingViolated(ComputationError):
    """The discrete comparison principle failed, i.e. the scheme is not monotone."""
