"""Exception types raised across the toolkit."""


class PackingError(Exception):
    """Base class for all toolkit errors."""

    kind = "packing_error"


class NotEnoughDisks(PackingError):
    kind = "not_enough_disks"


class DegenerateSquare(PackingError):
    kind = "degenerate_square"


class OutsideRegion(PackingError):
    kind = "outside_region"


class ScatterFailed(PackingError):
    kind = "scatter_failed"


class SimulationInconsistency(PackingError):
    kind = "simulation_inconsistency"


class PolishFailed(PackingError):
    kind = "polish_failed"

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class Unsupported(PackingError):
    kind = "unsupported"


class AllRestartsFailed(PackingError):
    kind = "all_restarts_failed"


class ParseError(PackingError):
    kind = "parse_error"

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class VersionError(PackingError):
    kind = "version_error"
