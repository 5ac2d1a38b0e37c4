"""Exception types shared across the package."""


class PowerLloydError(Exception):
    """Base class for all library errors."""


class GeometryError(PowerLloydError):
    pass


class CoincidentGenerators(GeometryError):
    """Two generators have identical position and weight."""


class InvalidDomain(GeometryError):
    """The domain polygon failed validation."""


class InadmissibleCost(PowerLloydError):
    """Cost function violates concavity / sign requirements."""


class InvalidMassVector(PowerLloydError):
    """Mass vector does not satisfy the total-mass constraint."""


class EmptyCell(PowerLloydError):
    """Lloyd map requested for a state with an empty or below-floor cell."""


class DegenerateState(PowerLloydError):
    """All cells vanished; the iteration cannot continue."""


class PointContactAdjacency(PowerLloydError):
    """Adjacent cells share only a point, so edge-based derivatives fail."""


class NotAFixedPoint(PowerLloydError):
    """Hessian assembly requested away from a fixed point."""


class SingularDescentMatrix(PowerLloydError):
    """Reduced weight-mass matrix is numerically singular."""


class InsufficientData(PowerLloydError):
    """Not enough trace data for a convergence-rate fit."""


class RasterParseError(PowerLloydError):
    """Malformed raster density file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(PowerLloydError):
    """Invalid problem configuration."""
