"""Exception types shared across the package."""


class Fr3ScanError(Exception):
    """Base class for all package errors."""


class ValidationError(Fr3ScanError):
    """Invalid input data: bad manifest, grid mismatch, off-grid band edge, ..."""


class CalibrationError(Fr3ScanError):
    """Reference trace unusable (near-zero samples, grid mismatch)."""


class OutageError(Fr3ScanError):
    """All power removed by gating; no finite parameter can be reported."""


class FitError(Fr3ScanError):
    """Regression or distribution fit impossible on the given samples."""


class SynthesisError(Fr3ScanError):
    """Requested synthetic channel targets cannot be realized."""
