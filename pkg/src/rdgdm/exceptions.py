"""Exception types shared across the package."""


class RdgdmError(Exception):
    """Base class for all package errors."""


class MeshParseError(RdgdmError):
    """Raised when a mesh file cannot be parsed; carries the offending line."""

    def __init__(self, line_no, message):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class MeshValidationError(RdgdmError):
    """Raised when mesh geometry or incidence violates an invariant."""


class UnsupportedMeshError(RdgdmError):
    """Raised when a discretisation cannot be built on the given mesh."""


class GeometryError(RdgdmError):
    """Raised for degenerate cell geometry (e.g. centroid on a face line)."""


class DefinitenessError(RdgdmError):
    """Raised when a matrix expected to be SPD is not (broken norm property)."""


class StepSizeError(RdgdmError):
    """Raised when the contraction guard rejects a time step."""


class NonconvergenceError(RdgdmError):
    """Raised when the fixed-point iteration exhausts its budget.

    Attributes
    ----------
    last_ratio : float
        Ratio of the last two successive-iterate distances.
    """

    def __init__(self, message, last_ratio=float("nan")):
        self.last_ratio = last_ratio
        super().__init__(message)


class NormalizationError(RdgdmError):
    """Raised when a relative error is requested against a zero norm."""
