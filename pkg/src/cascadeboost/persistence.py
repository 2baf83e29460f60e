"""Versioned text serialization for every model kind.

Models are stored as indented JSON so files diff cleanly and entropy
tables can be inspected by hand. Floats are written in Python's
shortest round-trip representation, which makes save/load prediction
behaviour bit-identical and double-saving byte-identical. All type
invariants are re-validated on load; persisted files are untrusted
input.
"""

import json

import numpy as np

from .cascade import CascadeClassifier, CascadeLevel, LeafEntropyTable
from .ensemble import CascadeEnsembleClassifier, FeaturePartition
from .exceptions import (
    InvalidSpecError,
    InvariantViolationError,
    KindMismatchError,
    ParseError,
    UnsupportedVersionError,
)
from .gbdt import GbdtConfig, GBDTClassifier, Tree

FORMAT_VERSION = 1

MODEL_KINDS = ("gbdt", "ldctree", "eldctree", "feldctree")


def model_kind(model):
    if isinstance(model, GBDTClassifier):
        return "gbdt"
    if isinstance(model, CascadeClassifier):
        return "ldctree"
    if isinstance(model, CascadeEnsembleClassifier):
        return "eldctree" if model.feature_routing == "random" else "feldctree"
    raise InvalidSpecError(f"cannot serialize {type(model).__name__}")


def _encode_tree(tree):
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
        "leaf_index": tree.leaf_index.tolist(),
    }


def _encode_gbdt(model):
    return {
        "config": {f: getattr(model.config_, f)
                   for f in model.config_.__dataclass_fields__},
        "base_score": float(model.base_score_),
        "feature_names": list(model.feature_names_),
        "per_feature_gain": model.per_feature_gain_.tolist(),
        "train_logloss_curve": [float(v) for v in model.train_logloss_curve_],
        "trees": [_encode_tree(t) for t in model.trees_],
    }


def _encode_cascade(model):
    return {
        "feature_names": list(model.feature_names_),
        "seed": int(model.seed),
        "levels": [
            {
                "gbdt": _encode_gbdt(level.gbdt),
                "entropies": [e.tolist() for e in level.entropy_table.entropies],
                "counts": [c.tolist() for c in level.entropy_table.counts],
                "raw_feature_indices": list(level.raw_feature_indices),
            }
            for level in model.levels_
        ],
    }


def _encode_ensemble(model):
    partition = None
    if model.partition_ is not None:
        partition = {
            "scf": [[int(i), float(v)] for i, v in model.partition_.scf],
            "wcf": [[int(i), float(v)] for i, v in model.partition_.wcf],
        }
    return {
        "feature_names": list(model.feature_names_),
        "params": {
            "num_cascades": model.num_cascades,
            "levels_per_cascade": model.levels_per_cascade,
            "first_level_feature_fraction": model.first_level_feature_fraction,
            "scf_inject_fraction": model.scf_inject_fraction,
            "scf_cumulative_threshold": model.scf_cumulative_threshold,
            "feature_routing": model.feature_routing,
            "seed": int(model.seed),
        },
        "partition": partition,
        "partition_seed": model.partition_seed_,
        "cascade_seeds": list(model.cascade_seeds_),
        "head_seed": model.head_seed_,
        "cascades": [_encode_cascade(c) for c in model.cascades_],
        "head": _encode_gbdt(model.head_),
    }


def save_model(model, path):
    """Write ``model`` to ``path``; same model always yields same bytes."""
    kind = model_kind(model)
    if kind == "gbdt":
        payload = _encode_gbdt(model)
    elif kind == "ldctree":
        payload = _encode_cascade(model)
    else:
        payload = _encode_ensemble(model)
    document = {
        "format_version": FORMAT_VERSION,
        "model_kind": kind,
        "payload": payload,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(document, fh, indent=2, allow_nan=False)
        fh.write("\n")


def _decode_tree(obj):
    feature = np.asarray(obj["feature"], dtype=np.int64)
    threshold = np.asarray(obj["threshold"], dtype=np.float64)
    left = np.asarray(obj["left"], dtype=np.int64)
    right = np.asarray(obj["right"], dtype=np.int64)
    value = np.asarray(obj["value"], dtype=np.float64)
    leaf_index = np.asarray(obj["leaf_index"], dtype=np.int64)
    n = len(feature)
    for arr, name in ((threshold, "threshold"), (left, "left"), (right, "right"),
                      (value, "value"), (leaf_index, "leaf_index")):
        if len(arr) != n:
            raise InvariantViolationError(f"tree array {name!r} has wrong length")
    if n == 0:
        raise InvariantViolationError("tree has no nodes")
    if not (np.isfinite(threshold).all() and np.isfinite(value).all()):
        raise InvariantViolationError("tree thresholds/values must be finite")
    is_leaf = feature == -1
    internal = np.nonzero(~is_leaf)[0]
    if (feature[internal] < 0).any():
        raise InvariantViolationError("split nodes need non-negative feature ids")
    for child in (left[internal], right[internal]):
        if ((child <= internal) | (child >= n)).any():
            raise InvariantViolationError("tree child pointers are not depth-first")
    leaves = np.sort(leaf_index[is_leaf])
    if not np.array_equal(leaves, np.arange(is_leaf.sum())):
        raise InvariantViolationError("leaf indices are not contiguous from 0")
    if (leaf_index[~is_leaf] != -1).any():
        raise InvariantViolationError("internal nodes must carry leaf_index -1")
    return Tree(feature, threshold, left, right, value, leaf_index)


def _decode_config(obj):
    try:
        return GbdtConfig(**obj).validate()
    except (TypeError, InvalidSpecError) as exc:
        raise InvariantViolationError(f"bad model config: {exc}") from exc


def _decode_gbdt(obj):
    config = _decode_config(obj["config"])
    trees = [_decode_tree(t) for t in obj["trees"]]
    feature_names = [str(s) for s in obj["feature_names"]]
    if len(trees) > config.num_trees:
        raise InvariantViolationError("more trees than the config allows")
    base_score = float(obj["base_score"])
    if not np.isfinite(base_score):
        raise InvariantViolationError("base_score must be finite")
    gain = np.asarray(obj["per_feature_gain"], dtype=np.float64)
    if len(gain) != len(feature_names) or (gain < 0).any():
        raise InvariantViolationError("per_feature_gain must be >= 0 per feature")
    for tree in trees:
        split_features = tree.feature[tree.feature >= 0]
        if split_features.size and split_features.max() >= len(feature_names):
            raise InvariantViolationError("tree splits on a feature outside the model")
    return GBDTClassifier._from_parts(
        config, base_score, trees, feature_names, gain,
        [float(v) for v in obj["train_logloss_curve"]],
    )


def _decode_cascade(obj):
    feature_names = [str(s) for s in obj["feature_names"]]
    n_raw = len(feature_names)
    levels = []
    for t, entry in enumerate(obj["levels"]):
        gbdt = _decode_gbdt(entry["gbdt"])
        raw_idx = tuple(int(i) for i in entry["raw_feature_indices"])
        if any(not 0 <= i < n_raw for i in raw_idx):
            raise InvariantViolationError(f"level {t + 1} raw columns out of range")
        if t == 0:
            expected = len(raw_idx)
        else:
            expected = len(levels[-1].gbdt.trees_) + len(raw_idx)
        if gbdt.n_features_in_ != expected:
            raise InvariantViolationError(
                f"level {t + 1} expects {expected} input features, "
                f"model has {gbdt.n_features_in_}"
            )
        table = LeafEntropyTable(
            entropies=[np.asarray(e, dtype=np.float64) for e in entry["entropies"]],
            counts=[np.asarray(c, dtype=np.int64) for c in entry["counts"]],
        ).validate(gbdt.trees_)
        levels.append(CascadeLevel(gbdt, table, raw_idx))
    if not levels:
        raise InvariantViolationError("cascade has no levels")
    return CascadeClassifier._from_parts(
        levels, feature_names,
        params={"num_levels": len(levels), "seed": int(obj["seed"])},
    )


def _decode_ensemble(obj, kind):
    feature_names = [str(s) for s in obj["feature_names"]]
    params = dict(obj["params"])
    expected_routing = "random" if kind == "eldctree" else "importance"
    if params.get("feature_routing") != expected_routing:
        raise InvariantViolationError(
            f"{kind} model must use {expected_routing!r} feature routing"
        )
    cascades = [_decode_cascade(c) for c in obj["cascades"]]
    if not cascades:
        raise InvariantViolationError("ensemble has no cascades")
    head = _decode_gbdt(obj["head"])
    width = sum(len(c.levels_[-1].gbdt.trees_) for c in cascades)
    if head.n_features_in_ != width:
        raise InvariantViolationError(
            f"head expects {head.n_features_in_} features, cascades provide {width}"
        )
    partition = None
    if obj["partition"] is not None:
        partition = FeaturePartition(
            scf=[(int(i), float(v)) for i, v in obj["partition"]["scf"]],
            wcf=[(int(i), float(v)) for i, v in obj["partition"]["wcf"]],
        ).validate()
    if (kind == "feldctree") != (partition is not None):
        raise InvariantViolationError(
            "feldctree models carry a partition; eldctree models do not"
        )
    return CascadeEnsembleClassifier._from_parts(
        cascades, head, feature_names, params=params,
        partition=partition,
        partition_seed=obj["partition_seed"],
        cascade_seeds=[int(s) for s in obj["cascade_seeds"]],
        head_seed=obj["head_seed"],
    )


def load_model(path, expect_kind=None):
    """Load a model, re-validating all invariants.

    ``expect_kind`` (one of gbdt/ldctree/eldctree/feldctree) raises
    KindMismatchError when the file holds something else.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise ParseError(f"not a valid model document: {exc.msg}", offset=offset) from exc
    if not isinstance(document, dict):
        raise ParseError("model document must be a JSON object")

    version = document.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"format_version {version!r} is not supported (expected {FORMAT_VERSION})"
        )
    kind = document.get("model_kind")
    if kind not in MODEL_KINDS:
        raise ParseError(f"unknown model_kind {kind!r}")
    if expect_kind is not None and kind != expect_kind:
        raise KindMismatchError(f"expected a {expect_kind} model, file holds {kind}")

    try:
        payload = document["payload"]
        if kind == "gbdt":
            return _decode_gbdt(payload)
        if kind == "ldctree":
            return _decode_cascade(payload)
        return _decode_ensemble(payload, kind)
    except InvariantViolationError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed {kind} payload: {exc}") from exc
