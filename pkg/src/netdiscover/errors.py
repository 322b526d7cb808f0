class DomainError(ValueError):
    """An argument lies outside the operation's domain."""


class StateError(RuntimeError):
    """An operation was called in the wrong episode/buffer state."""


class ParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CapacityError(ValueError):
    """Input too large for an exhaustive routine."""


class ShapeError(ValueError):
    pass
