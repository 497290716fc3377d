"""Exception types shared across the package."""


class ReachcostError(Exception):
    """Base class for all package-specific errors."""


class PlanMismatch(ReachcostError):
    """Window plan does not partition the trajectory's control samples."""


class ShapeMismatch(ReachcostError):
    """Weight matrix and feature matrix shapes disagree."""


class TooShort(ReachcostError):
    """Trajectory or marker sequence is too short to process."""


class Infeasible(ReachcostError):
    """Reaching problem has no feasible trajectory (target out of reach)."""


class NumericalFailure(ReachcostError):
    """NaN or Inf encountered inside a solver."""


class LengthMismatch(ReachcostError):
    """Two trajectories that must be time-aligned have different lengths."""


class NonRigid(ReachcostError):
    """Marker data violates the rigid-segment assumption."""


class NonFiniteData(ReachcostError):
    """Input data contains NaN or Inf where finite values are required."""


class ParseError(ReachcostError):
    """A file could not be parsed; carries line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class SchemaVersionMismatch(ReachcostError):
    """Sidecar file declares an unsupported schema version."""


class ManifestIncomplete(ReachcostError):
    """Study manifest lacks the demonstrations required by the chosen mode."""
