"""Exception types raised by cascadeboost.

Two families matter for the CLI exit-code contract: :class:`DataError`
(malformed or unusable input data, exit code 2) and :class:`ModelError`
(model construction, lookup or persistence problems, exit code 3).
"""


class CascadeBoostError(Exception):
    """Base class for all cascadeboost errors."""


class DataError(CascadeBoostError):
    """Input data is malformed or unusable."""


class EmptyDatasetError(DataError):
    """Dataset contains no instances."""


class SingleClassError(DataError):
    """Both classes are required but only one is present."""


class NonFiniteFeatureError(DataError):
    """A feature value is NaN or infinite."""

    def __init__(self, row, col):
        self.row = row
        self.col = col
        super().__init__(f"non-finite feature value at row {row}, column {col}")


class NonBinaryLabelError(DataError):
    """A label is not the literal 0 or 1."""


class NonNumericCellError(DataError):
    """A CSV cell could not be parsed as a real number."""


class MissingColumnError(DataError):
    """A mandatory CSV column is absent."""


class DuplicateIdError(DataError):
    """The same instance id appears more than once."""


class InvalidSpecError(DataError):
    """A split or synthetic-data specification violates its invariants."""


class EmptySetError(DataError):
    """A metric was asked to score an empty set."""


class InsufficientFeaturesError(DataError):
    """Too few features for the requested feature selection."""


class ModelError(CascadeBoostError):
    """Model structure, addressing or persistence problem."""


class DimensionMismatchError(ModelError):
    """Instance width does not match the model's feature space."""


class IndexOutOfRangeError(ModelError):
    """A tree, leaf or level ordinal does not address an existing element."""


class DegenerateLeafError(ModelError):
    """A leaf received zero instances from the full dataset."""


class LevelWidthMismatchError(ModelError):
    """A cascade level spec references columns outside its input width."""


class NotACascadeLevelError(ModelError):
    """Level 1 has no preceding level to explain against."""


class PersistenceError(ModelError):
    """Base class for model file problems."""


class ParseError(PersistenceError):
    """Model file is not well formed."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class UnsupportedVersionError(PersistenceError):
    """Model file declares an unknown format version."""


class KindMismatchError(PersistenceError):
    """Model file holds a different model kind than requested."""


class InvariantViolationError(PersistenceError):
    """A loaded model failed an invariant re-check."""
