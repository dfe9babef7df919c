"""Exception types raised by the calibration library."""


class CalibrationError(Exception):
    """Base class for all domain-specific failures."""


class ParallelRaysError(CalibrationError):
    """The two rays are (numerically) parallel; no closest point exists."""


class SingularModelError(CalibrationError):
    """A projection matrix is rank deficient and cannot be inverted."""


class PointAtCameraPlaneError(CalibrationError):
    """Projection scale is ~0: the point lies on the camera's principal plane."""


class InsufficientObservationsError(CalibrationError):
    """Fewer than two usable observations of a pattern point."""


class DegenerateGeometryError(CalibrationError):
    """All ray pairs were rejected (parallel or below the angle gate)."""


class DegenerateFusionError(CalibrationError):
    """Every input covariance is singular beyond regularization."""


class PlaneParallelError(CalibrationError):
    """A ray is parallel to the mapping plane; no intersection exists."""


class InitializationFailureError(CalibrationError):
    """Every MCMC walker started at a -inf log likelihood."""


class ScenarioGenerationError(CalibrationError):
    """Synthetic platform pose sampling failed after the retry budget."""


class SchemaError(CalibrationError):
    """An input file does not match the expected schema."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{message} (field: {field})" if field else message)
