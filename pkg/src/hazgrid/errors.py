"""Exception types shared across the toolkit."""


class HazGridError(Exception):
    """Base class for all toolkit errors."""


class ParseError(HazGridError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ReferentialError(HazGridError):
    """An input row references an entity that does not exist."""


class CoordinateRangeError(HazGridError):
    """Latitude or longitude outside the valid range."""


class GeometryError(HazGridError):
    """Invalid or degenerate geometry (unclosed ring, zero-area polygon)."""


class ProjectionError(HazGridError):
    """Point outside the validity radius of the local projection."""


class LayerError(HazGridError):
    """A required layer is missing or empty."""


class ScenarioSpecError(HazGridError):
    """Invalid transform parameters or non-convex weights."""


class AlignmentError(HazGridError):
    """Two per-cell fields do not share the same cell set."""


class InstanceError(HazGridError):
    """An optimization instance could not be built (e.g. zero candidates)."""


class InfeasibleError(HazGridError):
    """The requested station count cannot be placed."""


class BudgetError(HazGridError):
    """Exhaustive enumeration would exceed the combinatorial budget."""


class FitError(HazGridError):
    """Not enough usable bins for a scaling-law fit."""
