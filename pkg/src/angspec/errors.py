"""Exception hierarchy shared by the simulator, the scene language and the CLI."""


class AngspecError(Exception):
    """Base class for every error raised by this package."""


class SamplingError(AngspecError, ValueError):
    """A grid or element is too coarse (or too small) for the requested operation."""


class AliasingError(AngspecError, ValueError):
    """Spectral energy near the Nyquist wavevector exceeds the guard threshold."""


class GeometryError(AngspecError, ValueError):
    """Inconsistent bench geometry, e.g. an object in the front focal plane."""


class FitError(AngspecError, RuntimeError):
    """A least-squares fit failed its precondition or residual gate."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
