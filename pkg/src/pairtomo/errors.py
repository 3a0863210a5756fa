"""Error and warning types shared across the package."""


class StructureError(ValueError):
    """Tensor-product structure is missing or inconsistent."""


class DegeneracyError(ValueError):
    """An operation requires non-degenerate input (distinct eigenvalues, 0 < p < 1)."""


class InconsistencyError(ValueError):
    """Measured tables imply parameters outside the physical region."""


class IncompleteDesignError(ValueError):
    """Detector design is informationally incomplete (rank-deficient)."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class TruncationWarning(UserWarning):
    """Population reached the top of the truncated Fock ladder."""


class ProjectionWarning(UserWarning):
    """An estimate was projected back onto the physical region."""


class BalanceWarning(UserWarning):
    """Exact balancing was impossible for the requested counts."""
