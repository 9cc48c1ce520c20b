"""Exception hierarchy shared by every module."""


class SchKdVError(Exception):
    pass


class ConfigurationError(SchKdVError, ValueError):
    """Invalid parameters or configuration.

    ``field`` names the offending setting when there is one.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NumericalDomainError(SchKdVError, ArithmeticError):
    pass


class ContractError(SchKdVError, TypeError):
    pass


class BlowUpError(SchKdVError, RuntimeError):
    """Raised when a norm of the evolving state exceeds its threshold."""

    def __init__(self, t, norm_name, value):
        super().__init__(f"blow-up at t={t!r}: {norm_name} = {value!r}")
        self.t = t
        self.norm_name = norm_name
        self.value = value
