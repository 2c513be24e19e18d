class ConfigError(ValueError):
    pass


class ShapeError(ValueError):
    pass


class FormatError(ValueError):
    pass


class DataError(FormatError):
    pass


class NumericalError(ArithmeticError):
    pass
