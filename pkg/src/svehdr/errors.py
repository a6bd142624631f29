"""Exception types shared across the toolkit.

The CLI maps these onto its exit-code contract, so the taxonomy is part of
the public surface: configuration/usage problems, file-format problems,
calibration-coverage problems, and profile mismatches are distinct.
"""


class SveHdrError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SveHdrError):
    """Invalid parameter or configuration value."""


class UnknownIlluminantError(SveHdrError):
    """No transmittance table entry within tolerance of the requested wavelength."""


class CalibrationError(SveHdrError):
    """Calibration could not produce a valid correction profile."""


class InsufficientCoverageError(CalibrationError):
    """Too few samples on one side of the linear-region boundary or in a tier."""


class EolMismatchError(SveHdrError):
    """SVE image and correction profile disagree on the end-of-linearity value."""


class FormatError(SveHdrError):
    """Base class for file-format errors; readers raise only these on bad input."""


class HeaderError(FormatError):
    """Malformed or unsupported file header."""


class TruncatedError(FormatError):
    """Payload shorter than the header promises."""


class SampleRangeError(FormatError):
    """Sample value outside the declared bit depth."""


class SchemaError(FormatError):
    """Missing, unknown, or ill-typed key in a structured document."""


class VersionError(FormatError):
    """Unsupported format version."""


class ProfileInvariantError(FormatError):
    """A loaded profile violates a correction-profile invariant."""
