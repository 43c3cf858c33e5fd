"""Exception hierarchy shared across the package."""


class SpdcError(Exception):
    """Base class for all errors raised by this package."""


class WavelengthRangeError(SpdcError):
    """Wavelength outside the declared validity window of a Sellmeier set."""


class EvanescentWaveError(SpdcError):
    """Transverse wave vector too large: the longitudinal component is imaginary."""


class PhaseMatchingError(SpdcError):
    """No degenerate phase-matching solution for the requested cut/angle."""


class DegenerateInputError(SpdcError):
    """Inputs hit an undefined combination (e.g. walk-off/shift ratio at zero shift)."""


class NumericalDerivativeError(SpdcError):
    """Finite-difference stencil failed to converge under step halving."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class QuadratureError(SpdcError):
    """Quadrature result still changing under refinement; carries both estimates."""

    def __init__(self, message, coarse=None, fine=None):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


class ConfigError(SpdcError):
    """Malformed or inconsistent run configuration."""
