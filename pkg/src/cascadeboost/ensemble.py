"""Ensembles of parallel cascades joined by a final concatenating GBDT.

Two feature-routing modes exist. ``random`` gives every cascade's first
level an independent random subset of all raw features. ``importance``
first partitions the raw features by cumulative importance from a
pre-trained GBDT into strong (SCF) and weak (WCF) groups, routes only
WCF into first levels, and injects random SCF subsets at deeper levels.
The final head GBDT sees only the concatenated last-level entropy
features of all cascades.

All randomness flows from the master seed through documented draws:
(optional partition seed), one seed per cascade, then the head seed.
Within a cascade: the level-1 feature subset, then per level the
injection subset (levels >= 2) and that level's GBDT seed.
"""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .cascade import CascadeClassifier, CascadeLevelSpec
from .exceptions import (
    InsufficientFeaturesError,
    InvalidSpecError,
    InvariantViolationError,
)
from .gbdt import GbdtConfig, GBDTClassifier
from .validation import (
    check_binary_labels,
    check_both_classes,
    check_feature_matrix,
    check_width,
)


def split_importance_prefix(importances, threshold):
    """Split feature indices into (strong, weak) by cumulative importance.

    Features are ranked by descending importance (ties by lower index);
    the strong group is the minimal prefix whose cumulative normalized
    importance reaches ``threshold``. Both groups are kept non-empty by
    demoting the last strong element (or promoting the first weak one)
    when necessary.
    """
    imp = np.asarray(importances, dtype=np.float64)
    if imp.ndim != 1 or len(imp) < 2:
        raise InsufficientFeaturesError(
            "importance partition needs at least two features"
        )
    if (imp < 0).any():
        raise InvalidSpecError("importances must be non-negative")
    if not (0.0 < threshold < 1.0):
        raise InvalidSpecError(f"threshold must lie in (0, 1), got {threshold!r}")
    total = imp.sum()
    norm = imp / total if total > 0 else np.full(len(imp), 1.0 / len(imp))
    order = sorted(range(len(imp)), key=lambda j: (-norm[j], j))
    cum = np.cumsum(norm[order])
    n_strong = int(np.searchsorted(cum, threshold - 1e-12)) + 1
    n_strong = min(max(n_strong, 1), len(imp) - 1)
    return order[:n_strong], order[n_strong:]


@dataclass
class FeaturePartition:
    """Strong/weak correlation feature split from a pre-trained model.

    ``scf`` and ``wcf`` are (feature_index, normalized importance) pairs
    in descending importance order; together they cover all features and
    every strong importance is >= every weak importance.
    """

    scf: list
    wcf: list
    source: object = None

    def validate(self):
        scf_idx = [i for i, _ in self.scf]
        wcf_idx = [i for i, _ in self.wcf]
        if not scf_idx or not wcf_idx:
            raise InvariantViolationError("both partition sides must be non-empty")
        if set(scf_idx) & set(wcf_idx):
            raise InvariantViolationError("partition sides overlap")
        n = len(scf_idx) + len(wcf_idx)
        if set(scf_idx) | set(wcf_idx) != set(range(n)):
            raise InvariantViolationError("partition does not cover all features")
        if min(v for _, v in self.scf) < max(v for _, v in self.wcf):
            raise InvariantViolationError("partition is not importance-prefix ordered")
        return self

    @property
    def scf_indices(self):
        return [i for i, _ in self.scf]

    @property
    def wcf_indices(self):
        return [i for i, _ in self.wcf]


def partition_features(X, y, threshold=0.9, config=None, feature_names=None):
    """Pre-train a GBDT on all raw features and split them by importance."""
    config = (config or GbdtConfig()).validate()
    source = GBDTClassifier(
        **{f: getattr(config, f) for f in config.__dataclass_fields__}
    ).fit(X, y, feature_names=feature_names)
    imp = source.feature_importances_
    strong, weak = split_importance_prefix(imp, threshold)
    return FeaturePartition(
        scf=[(j, float(imp[j])) for j in strong],
        wcf=[(j, float(imp[j])) for j in weak],
        source=source,
    ).validate()


def build_cascade_plan(cascade_seed, num_levels, level1_pool, inject_pool,
                       level1_fraction, inject_fraction, gbdt_params):
    """Resolve one cascade's level specs from its seed.

    Reproducible in isolation: the same arguments always yield the same
    feature subsets and per-level GBDT seeds.
    """
    pool = np.asarray(sorted(level1_pool), dtype=np.int64)
    if pool.size < 1:
        raise InsufficientFeaturesError("level-1 feature pool is empty")
    rng = np.random.default_rng(cascade_seed)
    k1 = max(1, math.ceil(level1_fraction * pool.size))
    level1 = np.sort(rng.choice(pool, size=k1, replace=False))

    inject = None
    if inject_pool is not None:
        inject = np.asarray(sorted(inject_pool), dtype=np.int64)
        if inject.size < 1:
            raise InsufficientFeaturesError("injection feature pool is empty")

    specs = []
    for t in range(num_levels):
        if t == 0:
            raw = tuple(int(i) for i in level1)
        elif inject is not None:
            ki = max(1, math.ceil(inject_fraction * inject.size))
            raw = tuple(int(i) for i in np.sort(rng.choice(inject, size=ki, replace=False)))
        else:
            raw = ()
        level_seed = int(rng.integers(2**63))
        specs.append(CascadeLevelSpec(
            gbdt_config=GbdtConfig(seed=level_seed, **gbdt_params),
            raw_feature_indices=raw,
        ))
    return specs


class CascadeEnsembleClassifier(BaseEstimator):
    """Parallel cascades over randomized feature pools, joined by a head GBDT.

    ``feature_routing="random"`` draws each cascade's first-level
    features from the whole raw pool; ``"importance"`` pre-trains an
    importance model, restricts first levels to weak-correlation
    features and injects strong-correlation subsets at deeper levels.
    """

    def __init__(self, num_cascades=3, levels_per_cascade=2,
                 first_level_feature_fraction=0.6, scf_inject_fraction=0.6,
                 scf_cumulative_threshold=0.9, feature_routing="random",
                 num_trees=150, max_depth=8, min_instances_per_split=20,
                 learning_rate=0.01, row_subsample=0.6, feature_subsample=0.6,
                 seed=42, prob_clamp_epsilon=1e-15):
        self.num_cascades = num_cascades
        self.levels_per_cascade = levels_per_cascade
        self.first_level_feature_fraction = first_level_feature_fraction
        self.scf_inject_fraction = scf_inject_fraction
        self.scf_cumulative_threshold = scf_cumulative_threshold
        self.feature_routing = feature_routing
        self.num_trees = num_trees
        self.max_depth = max_depth
        self.min_instances_per_split = min_instances_per_split
        self.learning_rate = learning_rate
        self.row_subsample = row_subsample
        self.feature_subsample = feature_subsample
        self.seed = seed
        self.prob_clamp_epsilon = prob_clamp_epsilon

    def _gbdt_params(self):
        return dict(
            num_trees=self.num_trees,
            max_depth=self.max_depth,
            min_instances_per_split=self.min_instances_per_split,
            learning_rate=self.learning_rate,
            row_subsample=self.row_subsample,
            feature_subsample=self.feature_subsample,
            prob_clamp_epsilon=self.prob_clamp_epsilon,
        )

    def _validate_params(self):
        if self.num_cascades < 1:
            raise InvalidSpecError("num_cascades must be >= 1")
        if self.levels_per_cascade < 1:
            raise InvalidSpecError("levels_per_cascade must be >= 1")
        for name in ("first_level_feature_fraction", "scf_inject_fraction"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise InvalidSpecError(f"{name} must lie in (0, 1], got {v!r}")
        if not (0.0 < self.scf_cumulative_threshold < 1.0):
            raise InvalidSpecError("scf_cumulative_threshold must lie in (0, 1)")
        if self.feature_routing not in ("random", "importance"):
            raise InvalidSpecError(
                f"feature_routing must be 'random' or 'importance', "
                f"got {self.feature_routing!r}"
            )

    def fit(self, X, y, feature_names=None):
        self._validate_params()
        X = check_feature_matrix(X)
        y = check_binary_labels(y, n_rows=X.shape[0])
        check_both_classes(y)
        d = X.shape[1]
        names = (
            list(feature_names) if feature_names is not None
            else [f"f{j}" for j in range(d)]
        )
        base = self._gbdt_params()
        rng = np.random.default_rng(self.seed)

        partition = None
        partition_seed = None
        if self.feature_routing == "importance":
            partition_seed = int(rng.integers(2**63))
            partition = partition_features(
                X, y,
                threshold=self.scf_cumulative_threshold,
                config=GbdtConfig(seed=partition_seed, **base),
                feature_names=names,
            )
            level1_pool = partition.wcf_indices
            inject_pool = partition.scf_indices
        else:
            level1_pool = list(range(d))
            inject_pool = None

        cascade_seeds = [int(rng.integers(2**63)) for _ in range(self.num_cascades)]
        head_seed = int(rng.integers(2**63))

        cascades = []
        for cascade_seed in cascade_seeds:
            plan = build_cascade_plan(
                cascade_seed, self.levels_per_cascade, level1_pool, inject_pool,
                self.first_level_feature_fraction, self.scf_inject_fraction, base,
            )
            cascades.append(
                CascadeClassifier(level_specs=plan).fit(X, y, feature_names=names)
            )

        blocks, head_names = [], []
        for ci, cascade in enumerate(cascades):
            block = cascade.transform(X)
            blocks.append(block)
            level = len(cascade.levels_)
            head_names.extend(
                f"C{ci + 1}.L{level}.T{j + 1}" for j in range(block.shape[1])
            )
        head = GBDTClassifier(seed=head_seed, **base).fit(
            np.hstack(blocks), y, feature_names=head_names
        )

        self.cascades_ = cascades
        self.head_ = head
        self.partition_ = partition
        self.partition_seed_ = partition_seed
        self.cascade_seeds_ = cascade_seeds
        self.head_seed_ = head_seed
        self.n_features_in_ = d
        self.feature_names_ = names
        return self

    @classmethod
    def _from_parts(cls, cascades, head, feature_names, params=None,
                    partition=None, partition_seed=None, cascade_seeds=(),
                    head_seed=None):
        model = cls(**(params or {}))
        model.cascades_ = list(cascades)
        model.head_ = head
        model.partition_ = partition
        model.partition_seed_ = partition_seed
        model.cascade_seeds_ = list(cascade_seeds)
        model.head_seed_ = head_seed
        model.n_features_in_ = len(feature_names)
        model.feature_names_ = list(feature_names)
        return model

    def _check_fitted(self):
        if not hasattr(self, "cascades_"):
            raise NotFittedError("this CascadeEnsembleClassifier is not fitted yet")

    def _head_input(self, X):
        self._check_fitted()
        X = check_width(check_feature_matrix(X), self.n_features_in_)
        return np.hstack([cascade.transform(X) for cascade in self.cascades_])

    def predict_score(self, X):
        return self.head_.predict_score(self._head_input(X))

    def predict_proba(self, X):
        p = self.predict_score(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.predict_score(X) >= 0.5).astype(np.int64)
