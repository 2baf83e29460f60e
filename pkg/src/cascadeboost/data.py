"""Datasets, CSV ingestion, id-based splitting and synthetic generators.

The CSV format is: UTF-8, first line header, mandatory columns ``id``
(string, unique) and ``label`` (literal ``0`` or ``1``); every other
column is parsed as a decimal real and becomes a feature, in header
order. Comma separated, LF or CRLF line endings.
"""

import csv
import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DuplicateIdError,
    EmptyDatasetError,
    InvalidSpecError,
    MissingColumnError,
    NonBinaryLabelError,
    NonNumericCellError,
)
from .validation import check_binary_labels, check_feature_matrix


@dataclass
class Dataset:
    """Immutable bundle of instance ids, features and binary labels.

    Invariants are checked at construction: equal row counts, labels in
    {0, 1}, finite feature values and unique feature names matching the
    column count.
    """

    ids: list
    features: np.ndarray
    labels: np.ndarray
    feature_names: list

    def __post_init__(self):
        self.ids = [str(i) for i in self.ids]
        if self.ids:
            self.features = check_feature_matrix(self.features)
            self.labels = check_binary_labels(self.labels, n_rows=self.features.shape[0])
        else:
            # empty datasets are legal containers (e.g. a split part with
            # no ids); training entry points reject them separately
            features = np.asarray(self.features, dtype=np.float64)
            if features.ndim != 2:
                features = features.reshape(0, len(self.feature_names))
            self.features = features
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if len(self.labels) != 0:
                raise InvalidSpecError("labels present but no ids")
        if len(self.ids) != self.features.shape[0]:
            raise InvalidSpecError(
                f"{len(self.ids)} ids but {self.features.shape[0]} feature rows"
            )
        self.feature_names = [str(n) for n in self.feature_names]
        if len(self.feature_names) != self.features.shape[1]:
            raise InvalidSpecError(
                f"{len(self.feature_names)} feature names but "
                f"{self.features.shape[1]} feature columns"
            )
        if len(set(self.feature_names)) != len(self.feature_names):
            raise InvalidSpecError("feature names are not unique")

    def __len__(self):
        return len(self.ids)

    @property
    def n_features(self):
        return self.features.shape[1]

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            ids=[self.ids[i] for i in indices],
            features=self.features[indices],
            labels=self.labels[indices],
            feature_names=list(self.feature_names),
        )


@dataclass(frozen=True)
class SplitSpec:
    """Train/validation/test fractions; must sum to 1."""

    train_fraction: float = 0.4
    validation_fraction: float = 0.2
    test_fraction: float = 0.4

    def __post_init__(self):
        parts = (self.train_fraction, self.validation_fraction, self.test_fraction)
        if any(not (0.0 < p < 1.0) for p in parts):
            raise InvalidSpecError(f"split fractions must lie in (0,1), got {parts}")
        if abs(sum(parts) - 1.0) > 1e-12:
            raise InvalidSpecError(f"split fractions must sum to 1, got {sum(parts)!r}")


@dataclass(frozen=True)
class SyntheticSpec:
    """Configuration for the synthetic dataset generators.

    ``linear`` draws labels from a steep logistic model over the strong
    features. ``weak_xor`` hides the signal in the parity of the weak
    features' signs, so each weak feature is marginally uninformative
    while their combination is strongly informative; strong features
    carry a direct but partial label correlation.
    """

    kind: str = "weak_xor"
    n_instances: int = 1000
    n_strong: int = 2
    n_weak: int = 3
    n_noise: int = 10
    noise_level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("linear", "weak_xor"):
            raise InvalidSpecError(f"unknown synthetic kind {self.kind!r}")
        if self.n_instances <= 0:
            raise InvalidSpecError("n_instances must be positive")
        if min(self.n_strong, self.n_weak, self.n_noise) < 0:
            raise InvalidSpecError("feature counts must be non-negative")
        if self.kind == "weak_xor" and self.n_weak < 2:
            raise InvalidSpecError("weak_xor requires n_weak >= 2")
        if self.noise_level < 0:
            raise InvalidSpecError("noise_level must be non-negative")


# Steepness of the linear generator's logistic link; large enough that
# noise_level=0 yields a nearly separable problem.
_LINEAR_STEEPNESS = 8.0

# Bernoulli rate offset for the xor parity: P(y=1 | z) = 0.5 +- 0.35.
_XOR_RATE_SHIFT = 0.35

# Label-conditional mean shift of each strong feature in weak_xor data.
_STRONG_SHIFT = 0.3


def generate_synthetic(spec):
    """Generate a Dataset per ``spec``, deterministically in ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n_instances

    if spec.kind == "weak_xor":
        weak = rng.uniform(-1.0, 1.0, size=(n, spec.n_weak))
        z = np.logical_xor.reduce(weak > 0.0, axis=1)
        p = 0.5 + _XOR_RATE_SHIFT * (2.0 * z - 1.0)
        labels = (rng.uniform(size=n) < p).astype(np.int64)
        strong = _STRONG_SHIFT * (2.0 * labels[:, None] - 1.0) + (
            1.0 + spec.noise_level
        ) * rng.standard_normal((n, spec.n_strong))
        noise = rng.standard_normal((n, spec.n_noise))
    else:
        strong = rng.standard_normal((n, spec.n_strong))
        logits = strong.sum(axis=1) * (_LINEAR_STEEPNESS / math.sqrt(max(spec.n_strong, 1)))
        logits = logits + spec.noise_level * rng.standard_normal(n)
        labels = (rng.uniform(size=n) < 1.0 / (1.0 + np.exp(-logits))).astype(np.int64)
        weak = rng.uniform(-1.0, 1.0, size=(n, spec.n_weak))
        noise = rng.standard_normal((n, spec.n_noise))

    names = (
        [f"strong_{j}" for j in range(spec.n_strong)]
        + [f"weak_{j}" for j in range(spec.n_weak)]
        + [f"noise_{j}" for j in range(spec.n_noise)]
    )
    features = np.concatenate([strong, weak, noise], axis=1)
    ids = [f"{i:08d}" for i in range(n)]
    return Dataset(ids=ids, features=features, labels=labels, feature_names=names)


def _id_to_unit(instance_id, seed):
    """Map (id, seed) to a stable point in [0, 1)."""
    digest = hashlib.blake2b(
        f"{seed}|{instance_id}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") / 2.0**64


def split_by_id(dataset, spec=None, seed=0):
    """Partition a dataset into (train, validation, test) by hashed id.

    Each distinct id lands in exactly one part; the assignment depends
    only on (id, seed), never on row order, so growing a dataset never
    reassigns existing ids.
    """
    spec = spec if spec is not None else SplitSpec()
    cut_train = spec.train_fraction
    cut_val = spec.train_fraction + spec.validation_fraction
    units = np.array([_id_to_unit(i, seed) for i in dataset.ids])
    train_idx = np.nonzero(units < cut_train)[0]
    val_idx = np.nonzero((units >= cut_train) & (units < cut_val))[0]
    test_idx = np.nonzero(units >= cut_val)[0]
    return (
        dataset.subset(train_idx),
        dataset.subset(val_idx),
        dataset.subset(test_idx),
    )


def load_csv(path):
    """Read a Dataset from ``path`` per the documented CSV format."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path} is empty") from None
        for required in ("id", "label"):
            if required not in header:
                raise MissingColumnError(f"mandatory column {required!r} is missing")
        id_col = header.index("id")
        label_col = header.index("label")
        feature_cols = [
            (i, name)
            for i, name in enumerate(header)
            if i not in (id_col, label_col)
        ]

        ids, labels, rows = [], [], []
        seen = set()
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            instance_id = row[id_col]
            if instance_id in seen:
                raise DuplicateIdError(f"duplicate id {instance_id!r} at line {line_no}")
            seen.add(instance_id)
            raw_label = row[label_col].strip()
            if raw_label not in ("0", "1"):
                raise NonBinaryLabelError(
                    f"label {raw_label!r} at line {line_no} is not 0 or 1"
                )
            values = np.empty(len(feature_cols))
            for k, (col, name) in enumerate(feature_cols):
                try:
                    values[k] = float(row[col])
                except (ValueError, IndexError):
                    cell = row[col] if col < len(row) else "<missing>"
                    raise NonNumericCellError(
                        f"cell {cell!r} at line {line_no}, column {name!r} "
                        "is not a number"
                    ) from None
            ids.append(instance_id)
            labels.append(int(raw_label))
            rows.append(values)

    if not ids:
        raise EmptyDatasetError(f"{path} contains a header but no data rows")
    features = np.vstack(rows) if rows else np.empty((0, len(feature_cols)))
    return Dataset(
        ids=ids,
        features=features,
        labels=np.array(labels, dtype=np.int64),
        feature_names=[name for _, name in feature_cols],
    )


def write_csv(dataset, path):
    """Write a Dataset to ``path``; floats keep full round-trip precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label", *dataset.feature_names])
        for i, instance_id in enumerate(dataset.ids):
            writer.writerow(
                [
                    instance_id,
                    int(dataset.labels[i]),
                    *(repr(float(v)) for v in dataset.features[i]),
                ]
            )
