"""Exception hierarchy.

Configuration problems derive from :class:`ConfigError` (CLI exit code 2),
numerical failures from :class:`NumericalError` (exit code 3).
"""


class PhotonHolesError(Exception):
    pass


class ConfigError(PhotonHolesError, ValueError):
    pass


class InvalidParameter(ConfigError):
    def __init__(self, field: str, constraint: str):
        self.field = field
        self.constraint = constraint
        super().__init__(f"invalid parameter {field!r}: {constraint}")


class UnknownKey(ConfigError):
    def __init__(self, keys):
        self.keys = sorted(keys)
        super().__init__(f"unknown configuration key(s): {', '.join(self.keys)}")


class ParseError(ConfigError):
    pass


class NumericalError(PhotonHolesError, ArithmeticError):
    pass


class DegenerateState(NumericalError):
    pass


class DimensionMismatch(PhotonHolesError, ValueError):
    pass


class ToleranceNotMet(NumericalError):
    pass


class StepTooLarge(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class InsufficientData(PhotonHolesError, ValueError):
    pass


class NoDip(NumericalError):
    pass


class GridTooCoarse(PhotonHolesError, ValueError):
    pass


class InvalidDepth(PhotonHolesError, ValueError):
    pass


class DeltaTTooSmall(PhotonHolesError, ValueError):
    pass


class GridTooShort(PhotonHolesError, ValueError):
    pass


class DegenerateFringe(NumericalError):
    pass
