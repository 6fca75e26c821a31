"""Exception types raised by siabf.

Every error a user can trigger with bad data or bad arguments derives from
:class:`SiabfError`; the CLI maps those to exit code 1.
"""


class SiabfError(Exception):
    """Base class for data and usage errors."""


class MalformedFile(SiabfError, ValueError):
    pass


class NonUniformSampling(SiabfError, ValueError):
    pass


class TooShort(SiabfError, ValueError):
    pass


class BoundaryGap(SiabfError, ValueError):
    pass


class ZeroVariance(SiabfError, ValueError):
    pass


class DegenerateSpectrum(SiabfError, ValueError):
    pass


class EmptySpec(SiabfError, ValueError):
    pass


class DimensionMismatch(SiabfError, ValueError):
    pass


class InsufficientData(SiabfError, ValueError):
    pass


class LengthMismatch(SiabfError, ValueError):
    pass


class ModelFileError(SiabfError, ValueError):
    """Model file failed to parse or did not match the expected schema."""


class ConvergenceWarning(UserWarning):
    """Coordinate descent hit ``max_iterations`` before meeting the tolerance."""
