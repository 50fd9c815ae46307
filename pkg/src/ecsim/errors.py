class EcsimError(Exception):
    pass


class ConfigError(EcsimError, ValueError):
    pass


class CapacityError(EcsimError, ValueError):
    pass


class ShapeError(EcsimError, ValueError):
    pass


class InsufficientDataError(EcsimError):
    pass


class SingularMatrixError(EcsimError, ArithmeticError):
    def __init__(self, column: int):
        super().__init__(f"matrix is singular: no pivot in column {column}")
        self.column = column


class DataLossError(EcsimError):
    pass


class TraceParseError(EcsimError, ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
