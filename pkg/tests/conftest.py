import numpy as np
import pytest

from cascadeboost.gbdt import GbdtConfig, GBDTClassifier, Tree


def make_tree(feature, threshold, left, right, value, leaf_index):
    return Tree(feature, threshold, left, right, value, leaf_index)


def single_leaf_tree(value=0.0):
    return make_tree([-1], [0.0], [-1], [-1], [value], [0])


def stump(feature, threshold, left_value, right_value):
    return make_tree(
        [feature, -1, -1],
        [threshold, 0.0, 0.0],
        [1, -1, -1],
        [2, -1, -1],
        [0.0, left_value, right_value],
        [-1, 0, 1],
    )


def manual_gbdt(trees, n_features, base_score=0.0, learning_rate=0.1, seed=0):
    """Assemble a fitted classifier from hand-built trees."""
    config = GbdtConfig(
        num_trees=max(len(trees), 1), learning_rate=learning_rate, seed=seed,
        row_subsample=1.0, feature_subsample=1.0,
    )
    names = [f"f{j}" for j in range(n_features)]
    return GBDTClassifier._from_parts(
        config, base_score, trees, names, np.zeros(n_features)
    )


@pytest.fixture
def separable_dataset():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 3))
    y = (X[:, 0] > 0).astype(int)
    return X, y
