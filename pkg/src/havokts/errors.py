"""Exception hierarchy. ``exit_code`` is what the CLI returns for each family."""


class HavokError(Exception):
    exit_code = 1


class ConfigError(HavokError):
    exit_code = 2


class ParameterError(HavokError, ValueError):
    exit_code = 2


class BoundsError(ParameterError, IndexError):
    pass


class DataError(HavokError, ValueError):
    exit_code = 3


class ParseError(DataError):
    pass


class SchemaError(DataError):
    pass


class DegenerateSignalError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class DomainError(DataError):
    pass


class NumericError(HavokError, ArithmeticError):
    exit_code = 4


class SingularityError(NumericError):
    pass


class EmptyModelError(NumericError):
    pass


class ConvergenceError(NumericError):
    pass
