"""Exception hierarchy shared across the toolkit."""


class MvtriError(Exception):
    """Base class for every error raised by this package."""


class DegeneratePoint(MvtriError):
    """Projection is undefined: the point lies on the principal plane."""


class InvalidRotation(MvtriError):
    """Rotation matrix fails the orthonormality tolerance."""


class RankDeficient(MvtriError):
    """Matrix does not have the rank required by the operation."""


class CoincidentCenters(MvtriError):
    """Two-view geometry is undefined because the camera centers coincide."""


class DegenerateAllZero(MvtriError):
    """Every polynomial coefficient vanishes."""


class NonFiniteResidual(MvtriError):
    """Residual function produced a non-finite value."""


class InsufficientPoints(MvtriError):
    """Too few correspondences for calibration."""


class DegenerateGeometry(MvtriError):
    """Calibration geometry is degenerate (coplanar or collapsed points)."""


class InsufficientObservations(MvtriError):
    """A track does not carry enough observations to triangulate."""


class RankDeficientF(MvtriError):
    """Fundamental matrix has rank below two."""


class EpipoleAtPoint(MvtriError):
    """An epipole coincides with a measured point; correction is undefined."""


class InitializationFailed(MvtriError):
    """No usable starting point for iterative refinement."""


class InvalidSpec(MvtriError):
    """Scene or rig specification violates an invariant."""


class DomainError(MvtriError):
    """Argument outside the mathematical domain of the function."""


class EmptyInput(MvtriError):
    """Metric requested over an empty collection."""


class ConfigError(MvtriError):
    """Experiment configuration is unusable."""


class ParseError(ConfigError):
    """Configuration file could not be parsed."""


class ValidationError(ConfigError):
    """Configuration value violates an invariant."""
