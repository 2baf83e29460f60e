"""Cascaded gradient boosted trees with cross-entropy leaf features."""

from . import exceptions
from .cascade import (
    CascadeClassifier,
    CascadeLevel,
    CascadeLevelSpec,
    LeafEntropyTable,
    PathConstraint,
    PathExplanation,
    RawPathConstraint,
    compute_leaf_cross_entropy,
)
from .data import (
    Dataset,
    SplitSpec,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    split_by_id,
    write_csv,
)
from .ensemble import (
    CascadeEnsembleClassifier,
    FeaturePartition,
    build_cascade_plan,
    partition_features,
    split_importance_prefix,
)
from .gbdt import GbdtConfig, GBDTClassifier, Tree
from .metrics import auc, f1_score, logloss, prf_at_topk
from .persistence import FORMAT_VERSION, load_model, model_kind, save_model

__version__ = "0.1.0"

__all__ = [
    "CascadeClassifier",
    "CascadeEnsembleClassifier",
    "CascadeLevel",
    "CascadeLevelSpec",
    "Dataset",
    "FORMAT_VERSION",
    "FeaturePartition",
    "GBDTClassifier",
    "GbdtConfig",
    "LeafEntropyTable",
    "PathConstraint",
    "PathExplanation",
    "RawPathConstraint",
    "SplitSpec",
    "SyntheticSpec",
    "Tree",
    "auc",
    "build_cascade_plan",
    "compute_leaf_cross_entropy",
    "exceptions",
    "f1_score",
    "generate_synthetic",
    "load_csv",
    "load_model",
    "logloss",
    "model_kind",
    "partition_features",
    "prf_at_topk",
    "save_model",
    "split_by_id",
    "split_importance_prefix",
    "write_csv",
]
