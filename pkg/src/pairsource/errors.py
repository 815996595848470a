"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the region where a formula is defined."""


class NoPhaseMatchingError(RuntimeError):
    """The momentum mismatch has no sign change inside the scanned angle range."""

    def __init__(self, message, scan_range=None, residual_min=None, residual_max=None):
        super().__init__(message)
        self.scan_range = scan_range
        self.residual_min = residual_min
        self.residual_max = residual_max


class FitError(RuntimeError):
    """A least-squares problem is rank deficient."""
