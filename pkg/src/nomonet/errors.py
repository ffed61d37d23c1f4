"""Exception hierarchy shared across the package."""


class NomonetError(Exception):
    """Base class for all package-specific errors."""


class EmptyIndicator(NomonetError):
    """Raised when indicator text is empty after preprocessing."""


class DuplicateId(NomonetError):
    """Raised when two corpus rows share the same indicator id."""

    def __init__(self, indicator_id, first_row, second_row):
        self.indicator_id = indicator_id
        self.first_row = first_row
        self.second_row = second_row
        super().__init__(
            f"duplicate id {indicator_id!r} (rows {first_row} and {second_row})"
        )


class RowRejected(NomonetError):
    """Raised when a corpus row cannot be turned into an Indicator."""

    def __init__(self, row, cause):
        self.row = row
        self.cause = cause
        super().__init__(f"row {row} rejected: {cause}")


class ProviderError(NomonetError):
    """Raised when an embedding or naming provider call fails."""

    def __init__(self, message, batch_index=None):
        self.batch_index = batch_index
        if batch_index is not None:
            message = f"{message} (batch {batch_index})"
        super().__init__(message)


class DimensionMismatch(NomonetError):
    """Raised when vectors of different dimensions are combined."""


class ZeroVector(NomonetError):
    """Raised when a cosine similarity is requested for a zero vector."""


class InsufficientRank(NomonetError):
    """Raised when more components are requested than positive eigenvalues exist."""


class EmptyExtraction(InsufficientRank):
    """Raised when a component-count rule retains zero components."""


class SingularRotation(NomonetError):
    """Raised when the oblique rotation transformation is singular."""


class IllConditioned(NomonetError):
    """Raised when a projection would invert a nearly singular matrix."""


class CorruptNetwork(NomonetError):
    """Raised when a persisted network directory fails integrity checks."""


class UndefinedMetric(NomonetError):
    """Raised when an evaluation metric is requested for single-class input."""


class NumericalFault(NomonetError):
    """Raised when a training step produces a non-finite loss or gradient."""

    def __init__(self, message, batch_index=None):
        self.batch_index = batch_index
        if batch_index is not None:
            message = f"{message} (batch {batch_index})"
        super().__init__(message)


class GradCheckFailure(NomonetError):
    """Raised when an analytic gradient disagrees with finite differences."""

    def __init__(self, message, seed=None):
        self.seed = seed
        if seed is not None:
            message = f"{message} (reproduce with seed={seed})"
        super().__init__(message)


class NamingFailure(NomonetError):
    """Raised when a naming client cannot produce a valid response."""
