"""Exception types raised across the package."""


class SwingLabError(Exception):
    """Base class for all package errors."""


class DegenerateNetwork(SwingLabError):
    pass


class DegenerateFault(SwingLabError):
    pass


class NoConvergence(SwingLabError):
    def __init__(self, iterations: int, residual: float, message: str = ""):
        self.iterations = iterations
        self.residual = residual
        text = message or "interface solve did not converge"
        super().__init__(f"{text} (iterations={iterations}, residual={residual:.3e})")


class InfeasibleDispatch(SwingLabError):
    pass


class InvalidScenario(SwingLabError):
    pass


class EmptyTrace(SwingLabError):
    pass


class DegenerateCycle(SwingLabError):
    pass


class UnknownCase(SwingLabError):
    pass


class ScenarioFileError(SwingLabError):
    """Scenario file could not be parsed; carries the offending line and key."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class TraceSchemaError(SwingLabError):
    pass
