"""Input validation helpers shared by the estimators."""

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    EmptyDatasetError,
    NonBinaryLabelError,
    NonFiniteFeatureError,
    SingleClassError,
)


def check_feature_matrix(X):
    """Coerce X to a 2-D float64 array with only finite values."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D feature matrix, got ndim={X.ndim}")
    if X.shape[0] == 0:
        raise EmptyDatasetError("feature matrix has no rows")
    if X.shape[1] == 0:
        raise EmptyDatasetError("feature matrix has no columns")
    if not np.isfinite(X).all():
        row, col = np.argwhere(~np.isfinite(X))[0]
        raise NonFiniteFeatureError(int(row), int(col))
    return X


def check_binary_labels(y, n_rows=None):
    """Coerce y to an int64 vector of 0/1 values."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-D label vector, got ndim={y.ndim}")
    if n_rows is not None and len(y) != n_rows:
        raise DimensionMismatchError(f"{n_rows} feature rows but {len(y)} labels")
    if len(y) == 0:
        raise EmptyDatasetError("label vector is empty")
    values = np.unique(y)
    if not np.isin(values, (0, 1)).all():
        bad = values[~np.isin(values, (0, 1))][0]
        raise NonBinaryLabelError(f"label {bad!r} is not 0 or 1")
    return y.astype(np.int64)


def check_both_classes(y):
    if y.min() == y.max():
        raise SingleClassError(
            f"all labels are {int(y[0])}; both classes are required"
        )


def check_width(X, expected):
    """Check column count of an instance batch against the model width."""
    if X.shape[1] != expected:
        raise DimensionMismatchError(
            f"model expects {expected} features, got {X.shape[1]}"
        )
    return X
