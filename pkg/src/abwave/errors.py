"""Exception types raised across the package."""


class AbwaveError(Exception):
    """Base class for all package errors."""


class QuadratureNonConvergence(AbwaveError):
    """Adaptive quadrature hit its depth limit before reaching tolerance."""


class OpenPathError(AbwaveError):
    """A loop integral was requested on a path whose ends do not meet."""


class NonpositiveWavelength(AbwaveError):
    pass


class StationMismatch(AbwaveError):
    """Wavefront and aperture sit at different axial stations."""


class DegenerateGeometry(AbwaveError):
    """Source and target points are too close for the far-zone kernel."""


class ChannelMismatch(AbwaveError):
    pass


class UnknownScenario(AbwaveError):
    pass


class TooFewFringes(AbwaveError):
    pass


class GridMismatch(AbwaveError):
    pass


class ValidationError(AbwaveError):
    def __init__(self, field, message):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class ParseError(AbwaveError):
    def __init__(self, line, message):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")
