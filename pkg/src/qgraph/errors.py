class QGraphError(Exception):
    """Base class for all errors raised by qgraph."""


class StructuralError(QGraphError, ValueError):
    """Malformed graph, dangling reference or invalid surgery request."""


class ParseError(StructuralError):
    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class NumericalError(QGraphError, ArithmeticError):
    """A computation failed its internal consistency gate."""


class PoleError(NumericalError):
    """The requested quantity has a pole (singular linear system) at this point."""
