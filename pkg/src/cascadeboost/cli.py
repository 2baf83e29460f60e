"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 model error.
Metrics go to standard output (machine-parseable where noted);
diagnostics go to standard error. All randomness flows from --seed.
"""

import argparse
import sys

from sklearn.exceptions import NotFittedError

from .cascade import CascadeClassifier
from .data import SplitSpec, SyntheticSpec, generate_synthetic, load_csv, split_by_id, write_csv
from .ensemble import CascadeEnsembleClassifier, split_importance_prefix
from .exceptions import (
    DataError,
    ModelError,
    NotACascadeLevelError,
)
from .gbdt import GBDTClassifier
from .metrics import auc, logloss, prf_at_topk
from .persistence import load_model, save_model

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_MODEL = 3


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with code 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _info(message):
    print(message, file=sys.stderr)


def _read_dataset(path):
    try:
        return load_csv(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _read_model(path, expect_kind=None):
    try:
        return load_model(path, expect_kind=expect_kind)
    except OSError as exc:
        raise ModelError(f"cannot read model {path}: {exc}") from exc


def _write_model(model, path):
    try:
        save_model(model, path)
    except OSError as exc:
        raise ModelError(f"cannot write model {path}: {exc}") from exc


def _fractions(parser, text, flag):
    try:
        values = [float(v) for v in text.split(",") if v != ""]
    except ValueError:
        parser.error(f"{flag} expects comma-separated numbers, got {text!r}")
    if not values:
        parser.error(f"{flag} expects at least one value")
    return values


def _check_feature_space(model, dataset):
    if list(model.feature_names_) != list(dataset.feature_names):
        raise ModelError(
            "model/feature-space mismatch: model was trained on columns "
            f"{model.feature_names_}, data has {dataset.feature_names}"
        )


def _build_model(args):
    common = dict(
        num_trees=args.trees,
        max_depth=args.depth,
        learning_rate=args.lr,
        row_subsample=args.row_subsample,
        feature_subsample=args.feature_subsample,
        seed=args.seed,
    )
    if args.model_kind == "gbdt":
        return GBDTClassifier(**common)
    if args.model_kind == "ldctree":
        return CascadeClassifier(num_levels=args.levels, **common)
    routing = "random" if args.model_kind == "eldctree" else "importance"
    return CascadeEnsembleClassifier(
        num_cascades=args.cascades,
        levels_per_cascade=args.levels,
        scf_cumulative_threshold=args.scf_threshold,
        feature_routing=routing,
        **common,
    )


def cmd_gen_data(args, parser):
    spec = SyntheticSpec(
        kind=args.kind,
        n_instances=args.n,
        n_strong=args.n_strong,
        n_weak=args.n_weak,
        n_noise=args.n_noise,
        noise_level=args.noise_level,
        seed=args.seed,
    )
    dataset = generate_synthetic(spec)
    try:
        write_csv(dataset, args.out)
    except OSError as exc:
        raise DataError(f"cannot write {args.out}: {exc}") from exc
    _info(f"wrote {len(dataset)} instances, {dataset.n_features} features to {args.out}")
    return EXIT_OK


def cmd_train(args, parser):
    parts = _fractions(parser, args.split, "--split")
    if len(parts) != 3:
        parser.error(f"--split expects three fractions, got {args.split!r}")
    try:
        split_spec = SplitSpec(*parts)
    except DataError as exc:
        parser.error(str(exc))

    dataset = _read_dataset(args.data)
    train, validation, _ = split_by_id(dataset, split_spec, args.seed)
    _info(
        f"training a {args.model_kind} model on {len(train)} instances "
        f"({len(validation)} validation)"
    )
    model = _build_model(args)
    model.fit(train.features, train.labels, feature_names=dataset.feature_names)
    _write_model(model, args.out)

    train_scores = model.predict_score(train.features)
    val_scores = model.predict_score(validation.features)
    report = {
        "model_kind": args.model_kind,
        "seed": args.seed,
        "train_instances": len(train),
        "validation_instances": len(validation),
        "train_auc": f"{auc(train.labels, train_scores):.6f}",
        "train_logloss": f"{logloss(train.labels, train_scores):.6f}",
        "validation_auc": f"{auc(validation.labels, val_scores):.6f}",
        "validation_logloss": f"{logloss(validation.labels, val_scores):.6f}",
        "model_path": args.out,
    }
    for key, value in report.items():
        print(f"{key}={value}")
    return EXIT_OK


def cmd_predict(args, parser):
    model = _read_model(args.model)
    dataset = _read_dataset(args.data)
    _check_feature_space(model, dataset)
    scores = model.predict_score(dataset.features)
    try:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("id,score\n")
            for instance_id, score in zip(dataset.ids, scores):
                fh.write(f"{instance_id},{score:.6f}\n")
    except OSError as exc:
        raise DataError(f"cannot write {args.out}: {exc}") from exc
    _info(f"wrote {len(dataset)} scores to {args.out}")
    return EXIT_OK


def cmd_evaluate(args, parser):
    fractions = _fractions(parser, args.topk, "--topk")
    for fraction in fractions:
        if not (0.0 < fraction <= 1.0):
            parser.error(f"--topk fractions must lie in (0, 1], got {fraction!r}")
    model = _read_model(args.model)
    dataset = _read_dataset(args.data)
    _check_feature_space(model, dataset)
    scores = model.predict_score(dataset.features)

    print(f"AUC        {auc(dataset.labels, scores):.4f}")
    print(f"{'threshold':<11}{'precision':<11}{'recall':<11}f1")
    for fraction in fractions:
        precision, recall, f1 = prf_at_topk(dataset.labels, scores, fraction)
        label = f"top@{fraction * 100:g}%"
        cells = [f"{v * 100:.2f}%" for v in (precision, recall, f1)]
        print(f"{label:<11}{cells[0]:<11}{cells[1]:<11}{cells[2]}")
    return EXIT_OK


def cmd_importance(args, parser):
    model = _read_model(args.model)
    if isinstance(model, GBDTClassifier):
        table = model.feature_importance()
        importances = model.feature_importances_
        names = model.feature_names_
    elif isinstance(model, CascadeClassifier):
        level1 = model.levels_[0].gbdt
        table = level1.feature_importance()
        importances = level1.feature_importances_
        names = level1.feature_names_
    elif model.partition_ is not None:
        scf = model.partition_.scf
        wcf = model.partition_.wcf
        print(f"{'feature':<24}importance")
        for idx, value in [*scf, *wcf]:
            print(f"{model.feature_names_[idx]:<24}{value:.6f}")
        print(
            f"SCF (recorded, threshold {model.scf_cumulative_threshold:g}): "
            + ", ".join(model.feature_names_[i] for i, _ in scf)
        )
        print("WCF: " + ", ".join(model.feature_names_[i] for i, _ in wcf))
        return EXIT_OK
    else:
        raise ModelError(
            "eldctree models record no raw-feature importance; "
            "inspect a gbdt, ldctree or feldctree model instead"
        )

    print(f"{'feature':<24}importance")
    for name, value in table:
        print(f"{name:<24}{value:.6f}")
    strong, weak = split_importance_prefix(importances, args.scf_threshold)
    print(
        f"SCF (threshold {args.scf_threshold:g}): "
        + ", ".join(names[i] for i in strong)
    )
    print("WCF: " + ", ".join(names[i] for i in weak))
    return EXIT_OK


def cmd_explain(args, parser):
    model = _read_model(args.model)
    if isinstance(model, GBDTClassifier):
        raise ModelError("gbdt models have no cascade levels to explain")
    if isinstance(model, CascadeEnsembleClassifier):
        if not 1 <= args.cascade <= len(model.cascades_):
            raise ModelError(
                f"ensemble has {len(model.cascades_)} cascades, got --cascade {args.cascade}"
            )
        cascade = model.cascades_[args.cascade - 1]
    else:
        cascade = model

    explanation = cascade.explain_leaf(args.level, args.tree, args.leaf)
    prev = args.level - 1
    print(f"leaf L{args.level}.T{args.tree}.leaf{args.leaf}")
    for c in explanation.constraints:
        branch = "left" if c.went_left else "right"
        s_minus = ", ".join(f"leaf{k}" for k in c.s_minus)
        s_plus = ", ".join(f"leaf{k}" for k in c.s_plus)
        print(
            f"split on L{prev}.T{c.tree} at {c.threshold!r} ({branch}): "
            f"S- = {{{s_minus}}}  S+ = {{{s_plus}}}"
        )
    for r in explanation.raw_constraints:
        op = "<=" if r.went_left else ">"
        print(f"split on raw {r.feature_name} {op} {r.threshold!r}")
    print(f"expression: {explanation.expression()}")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="cascadeboost", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic CSV dataset")
    p.add_argument("--kind", choices=("linear", "weak_xor"), default="weak_xor")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--n-strong", type=int, default=2)
    p.add_argument("--n-weak", type=int, default=3)
    p.add_argument("--n-noise", type=int, default=10)
    p.add_argument("--noise-level", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("train", help="train a model on an id-split CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--model-kind", required=True,
                   choices=("gbdt", "ldctree", "eldctree", "feldctree"))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--cascades", type=int, default=3)
    p.add_argument("--trees", type=int, default=150)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--row-subsample", type=float, default=0.6)
    p.add_argument("--feature-subsample", type=float, default=0.6)
    p.add_argument("--scf-threshold", type=float, default=0.9)
    p.add_argument("--split", default="0.4,0.2,0.4")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("predict", help="score a CSV with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("evaluate", help="AUC and top-k precision/recall/F1")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--topk", default="0.1,0.2,0.5")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("importance", help="sorted importances and the SCF/WCF cut")
    p.add_argument("--model", required=True)
    p.add_argument("--scf-threshold", type=float, default=0.9)
    p.set_defaults(handler=cmd_importance)

    p = sub.add_parser("explain", help="path-combination explanation of a cascade leaf")
    p.add_argument("--model", required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--tree", type=int, required=True)
    p.add_argument("--leaf", type=int, required=True)
    p.add_argument("--cascade", type=int, default=1,
                   help="1-based cascade ordinal for ensemble models")
    p.set_defaults(handler=cmd_explain)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args, parser)
    except NotACascadeLevelError as exc:
        print(f"cascadeboost: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"cascadeboost: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ModelError, NotFittedError) as exc:
        print(f"cascadeboost: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
