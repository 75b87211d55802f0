"""Exception hierarchy shared by all fairdice modules."""


class DiceError(ValueError):
    """Base class for every error raised by fairdice."""


class DomainError(DiceError):
    """An argument lies outside the domain of the operation."""


class DegenerateGeometryError(DiceError):
    """Geometry collapses (apex on a face plane, duplicate points, zero mean vector)."""


class UnsupportedInputError(DiceError):
    """Input is well formed but not handled (self-intersecting or non-planar polygons)."""


class NumericError(DiceError):
    """A numerical procedure failed to produce a result."""


class OverlapError(DiceError):
    """Two carved caps intersect."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class CentroidDisplacementError(DiceError):
    """Carving moves the center of gravity beyond the accepted threshold."""


class ResolutionError(DiceError):
    """Requested mesh resolution is too coarse."""


class NotWatertightError(DiceError):
    """Mesh has edges not shared by exactly two triangles."""

    def __init__(self, message, edges=()):
        super().__init__(message)
        self.edges = list(edges)


class ParseError(DiceError):
    """Malformed input text."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ValidationError(DiceError):
    """Parsed values violate a record invariant."""


class EmptyDatasetError(DiceError):
    """A dataset has no records."""


class SingularFitError(DiceError):
    """Least-squares system is singular (all abscissae equal)."""


class NoSolutionError(DiceError):
    """An equation has no solution (zero slope)."""
