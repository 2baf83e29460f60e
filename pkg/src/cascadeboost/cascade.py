"""Multi-level cascades of boosting models.

Each level is a GBDT plus a per-leaf cross-entropy table. The entropy
of leaf k of tree j is the mean logistic loss of the training instances
routed to that leaf, scored with the staged probability through tree j.
Level t+1 trains on those per-tree entropy values (optionally
concatenated with selected raw columns), always against the original
labels. A split at level t+1 therefore selects a subset of level-t
leaves, which is what `explain_leaf` reports.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .exceptions import (
    DegenerateLeafError,
    IndexOutOfRangeError,
    InvalidSpecError,
    InvariantViolationError,
    LevelWidthMismatchError,
    NotACascadeLevelError,
)
from .gbdt import GbdtConfig, GBDTClassifier
from .validation import (
    check_binary_labels,
    check_both_classes,
    check_feature_matrix,
    check_width,
)


@dataclass
class LeafEntropyTable:
    """Per-tree leaf cross-entropies and full-dataset leaf counts."""

    entropies: list  # one float array per tree, indexed by leaf ordinal
    counts: list     # matching int arrays of instances per leaf

    def validate(self, trees=None):
        if len(self.entropies) != len(self.counts):
            raise InvariantViolationError("entropy/count tree counts differ")
        for j, (ent, cnt) in enumerate(zip(self.entropies, self.counts)):
            if len(ent) != len(cnt):
                raise InvariantViolationError(f"tree {j}: entropy/count lengths differ")
            if trees is not None and len(ent) != trees[j].n_leaves:
                raise InvariantViolationError(
                    f"tree {j}: {len(ent)} entropies for {trees[j].n_leaves} leaves"
                )
            if not np.isfinite(ent).all() or (np.asarray(ent) < 0).any():
                raise InvariantViolationError(f"tree {j}: entropies must be finite and >= 0")
            if (np.asarray(cnt) < 1).any():
                raise InvariantViolationError(f"tree {j}: every leaf needs >= 1 instance")
        return self


def compute_leaf_cross_entropy(model, X, y):
    """Cross-entropy and instance count per leaf of every tree of ``model``.

    X/y must be the training data that populated the leaves. Counts are
    over the full dataset, not the per-tree subsample. Probabilities are
    the staged predictions through each tree, clamped before the logs.
    """
    model._check_fitted()
    X = check_width(check_feature_matrix(X), model.n_features_in_)
    y = check_binary_labels(y, n_rows=X.shape[0])
    eps = model.config_.prob_clamp_epsilon
    lr = model.config_.learning_rate

    scores = np.full(X.shape[0], model.base_score_)
    entropies, counts = [], []
    for j, tree in enumerate(model.trees_):
        leaves = tree.apply(X)
        scores = scores + lr * tree.leaf_values[leaves]
        p = np.clip(expit(scores), eps, 1.0 - eps)
        loss = -(y * np.log(p) + (1 - y) * np.log(1.0 - p))
        cnt = np.bincount(leaves, minlength=tree.n_leaves)
        if (cnt == 0).any():
            empty = int(np.nonzero(cnt == 0)[0][0])
            raise DegenerateLeafError(
                f"leaf {empty} of tree {j} received no instances; "
                "model and dataset do not match"
            )
        total = np.bincount(leaves, weights=loss, minlength=tree.n_leaves)
        entropies.append(total / cnt)
        counts.append(cnt)
    return LeafEntropyTable(entropies=entropies, counts=counts)


@dataclass(frozen=True)
class CascadeLevelSpec:
    """Configuration of one cascade level.

    ``raw_feature_indices`` are columns of the original feature matrix.
    For level 1 they are the level's whole input (None means all
    columns); for deeper levels they are appended after the preceding
    level's entropy features (None means entropy features only).
    """

    gbdt_config: GbdtConfig = field(default_factory=GbdtConfig)
    raw_feature_indices: tuple = None

    def resolved_indices(self, n_raw, level_ordinal):
        if self.raw_feature_indices is None:
            return tuple(range(n_raw)) if level_ordinal == 1 else ()
        idx = tuple(int(i) for i in self.raw_feature_indices)
        if any(not 0 <= i < n_raw for i in idx):
            raise LevelWidthMismatchError(
                f"level {level_ordinal} references raw columns outside 0..{n_raw - 1}"
            )
        if len(set(idx)) != len(idx):
            raise LevelWidthMismatchError(f"level {level_ordinal} repeats raw columns")
        if level_ordinal == 1 and not idx:
            raise LevelWidthMismatchError("level 1 needs at least one input column")
        return idx


@dataclass
class CascadeLevel:
    """A fitted level: its GBDT, entropy table and raw-column selection."""

    gbdt: GBDTClassifier
    entropy_table: LeafEntropyTable
    raw_feature_indices: tuple

    def transform(self, level_input):
        """Entropy feature vector per row: component j is the entropy of
        the leaf of tree j that the row lands in."""
        level_input = check_width(
            check_feature_matrix(level_input), self.gbdt.n_features_in_)
        out = np.empty((level_input.shape[0], len(self.gbdt.trees_)))
        for j, tree in enumerate(self.gbdt.trees_):
            out[:, j] = self.entropy_table.entropies[j][tree.apply(level_input)]
        return out


@dataclass(frozen=True)
class PathConstraint:
    """One split along a path, as a partition of the preceding tree's leaves.

    Ordinals are 1-based to match the reporting format. ``s_minus``
    holds the leaves whose entropy is <= threshold (chosen by the left
    branch), ``s_plus`` the remainder.
    """

    tree: int
    threshold: float
    went_left: bool
    s_minus: tuple
    s_plus: tuple

    @property
    def selected(self):
        return self.s_minus if self.went_left else self.s_plus


@dataclass(frozen=True)
class RawPathConstraint:
    """A path split on an injected raw column rather than an entropy feature."""

    feature_name: str
    column: int
    threshold: float
    went_left: bool


@dataclass
class PathExplanation:
    """Root-to-leaf path of a cascade tree, expressed over the preceding
    level's leaves. All ordinals 1-based."""

    level: int
    tree: int
    leaf: int
    constraints: list
    raw_constraints: list

    def selected_by_tree(self):
        """Per constrained preceding tree, the intersection of the leaf
        subsets selected along the path. Unconstrained trees are absent."""
        out = {}
        for c in self.constraints:
            sel = frozenset(c.selected)
            out[c.tree] = out[c.tree] & sel if c.tree in out else sel
        return out

    def expression(self):
        prev = self.level - 1
        parts = []
        for c in self.constraints:
            leaves = " ∪ ".join(
                f"L{prev}.T{c.tree}.leaf{k}" for k in c.selected
            )
            parts.append(f"({leaves})")
        for r in self.raw_constraints:
            op = "≤" if r.went_left else ">"
            parts.append(f"({r.feature_name} {op} {r.threshold!r})")
        return " ∩ ".join(parts)


class CascadeClassifier(BaseEstimator):
    """Stacked GBDT levels with cross-entropy leaf features in between.

    With default settings every level reuses the same boosting
    hyper-parameters; level 1 trains with ``seed`` itself and deeper
    levels with seeds drawn from a generator seeded by it. Pass
    ``level_specs`` for full control over per-level configuration and
    raw-column selection (``num_levels`` is then ignored).
    """

    def __init__(self, num_levels=2, num_trees=150, max_depth=8,
                 min_instances_per_split=20, learning_rate=0.01,
                 row_subsample=0.6, feature_subsample=0.6, seed=42,
                 prob_clamp_epsilon=1e-15, level_specs=None):
        self.num_levels = num_levels
        self.num_trees = num_trees
        self.max_depth = max_depth
        self.min_instances_per_split = min_instances_per_split
        self.learning_rate = learning_rate
        self.row_subsample = row_subsample
        self.feature_subsample = feature_subsample
        self.seed = seed
        self.prob_clamp_epsilon = prob_clamp_epsilon
        self.level_specs = level_specs

    def _resolve_specs(self):
        if self.level_specs is not None:
            if len(self.level_specs) < 1:
                raise InvalidSpecError("at least one cascade level is required")
            return list(self.level_specs)
        if self.num_levels < 1:
            raise InvalidSpecError("num_levels must be >= 1")
        base = dict(
            num_trees=self.num_trees,
            max_depth=self.max_depth,
            min_instances_per_split=self.min_instances_per_split,
            learning_rate=self.learning_rate,
            row_subsample=self.row_subsample,
            feature_subsample=self.feature_subsample,
            prob_clamp_epsilon=self.prob_clamp_epsilon,
        )
        rng = np.random.default_rng(self.seed)
        specs = []
        for t in range(self.num_levels):
            level_seed = self.seed if t == 0 else int(rng.integers(2**63))
            specs.append(CascadeLevelSpec(GbdtConfig(seed=level_seed, **base)))
        return specs

    def fit(self, X, y, feature_names=None):
        specs = self._resolve_specs()
        X = check_feature_matrix(X)
        y = check_binary_labels(y, n_rows=X.shape[0])
        check_both_classes(y)
        n_raw = X.shape[1]
        raw_names = (
            list(feature_names) if feature_names is not None
            else [f"f{j}" for j in range(n_raw)]
        )
        if len(raw_names) != n_raw:
            raise InvalidSpecError(f"{len(raw_names)} names for {n_raw} columns")

        levels = []
        level_input = None
        input_names = None
        for t, spec in enumerate(specs):
            raw_idx = spec.resolved_indices(n_raw, t + 1)
            if t == 0:
                level_input = X[:, raw_idx]
                input_names = [raw_names[i] for i in raw_idx]
            else:
                prev = levels[-1]
                entropy_features = prev.transform(level_input)
                ent_names = [f"L{t}.T{j + 1}" for j in range(entropy_features.shape[1])]
                level_input = (
                    np.concatenate([entropy_features, X[:, raw_idx]], axis=1)
                    if raw_idx else entropy_features
                )
                input_names = ent_names + [raw_names[i] for i in raw_idx]
            gbdt = GBDTClassifier(
                **{f: getattr(spec.gbdt_config, f)
                   for f in spec.gbdt_config.__dataclass_fields__}
            ).fit(level_input, y, feature_names=input_names)
            table = compute_leaf_cross_entropy(gbdt, level_input, y)
            levels.append(CascadeLevel(gbdt, table, raw_idx))

        self.levels_ = levels
        self.n_features_in_ = n_raw
        self.feature_names_ = raw_names
        return self

    @classmethod
    def _from_parts(cls, levels, feature_names, params=None):
        model = cls(**(params or {}))
        model.levels_ = list(levels)
        model.n_features_in_ = len(feature_names)
        model.feature_names_ = list(feature_names)
        return model

    def _check_fitted(self):
        if not hasattr(self, "levels_"):
            raise NotFittedError("this CascadeClassifier is not fitted yet")

    def _last_level_input(self, X):
        """Fold X through the transforms, returning the last level's input."""
        self._check_fitted()
        X = check_width(check_feature_matrix(X), self.n_features_in_)
        level_input = X[:, self.levels_[0].raw_feature_indices]
        for t in range(1, len(self.levels_)):
            entropy_features = self.levels_[t - 1].transform(level_input)
            raw_idx = self.levels_[t].raw_feature_indices
            level_input = (
                np.concatenate([entropy_features, X[:, raw_idx]], axis=1)
                if raw_idx else entropy_features
            )
        return level_input

    def transform(self, X):
        """Entropy features of the last level; the cascade's learned
        representation, of width equal to the last level's tree count."""
        return self.levels_[-1].transform(self._last_level_input(X))

    def predict_score(self, X):
        return self.levels_[-1].gbdt.predict_score(self._last_level_input(X))

    def predict_proba(self, X):
        p = self.predict_score(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.predict_score(X) >= 0.5).astype(np.int64)

    def explain_leaf(self, level, tree, leaf):
        """Explain a leaf of a level >= 2 tree as leaf subsets of the
        preceding level. ``level``, ``tree`` and ``leaf`` are 1-based."""
        self._check_fitted()
        if level == 1:
            raise NotACascadeLevelError("level 1 has no preceding level to explain")
        if not 2 <= level <= len(self.levels_):
            raise IndexOutOfRangeError(
                f"level must lie in [2, {len(self.levels_)}], got {level}"
            )
        lv = self.levels_[level - 1]
        prev = self.levels_[level - 2]
        if not 1 <= tree <= len(lv.gbdt.trees_):
            raise IndexOutOfRangeError(
                f"level {level} has {len(lv.gbdt.trees_)} trees, got tree {tree}"
            )
        t = lv.gbdt.trees_[tree - 1]
        if not 1 <= leaf <= t.n_leaves:
            raise IndexOutOfRangeError(
                f"tree has {t.n_leaves} leaves, got leaf {leaf}"
            )

        n_prev = len(prev.gbdt.trees_)
        constraints, raw_constraints = [], []
        for feat, threshold, went_left in t.path_to_leaf(leaf - 1):
            if feat < n_prev:
                ent = prev.entropy_table.entropies[feat]
                below = np.nonzero(ent <= threshold)[0]
                above = np.nonzero(ent > threshold)[0]
                constraints.append(PathConstraint(
                    tree=feat + 1,
                    threshold=threshold,
                    went_left=went_left,
                    s_minus=tuple(int(k) + 1 for k in below),
                    s_plus=tuple(int(k) + 1 for k in above),
                ))
            else:
                col = lv.raw_feature_indices[feat - n_prev]
                raw_constraints.append(RawPathConstraint(
                    feature_name=self.feature_names_[col],
                    column=int(col),
                    threshold=threshold,
                    went_left=went_left,
                ))
        return PathExplanation(
            level=level, tree=tree, leaf=leaf,
            constraints=constraints, raw_constraints=raw_constraints,
        )
