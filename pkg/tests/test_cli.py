import json

import numpy as np
import pytest

from cascadeboost.cli import main
from cascadeboost.data import load_csv
from cascadeboost.persistence import load_model, save_model

from conftest import manual_gbdt, stump

TRAIN_KEYS = [
    "model_kind", "seed", "train_instances", "validation_instances",
    "train_auc", "train_logloss", "validation_auc", "validation_logloss",
    "model_path",
]


def run_cli(argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


def parse_report(out):
    pairs = [line.split("=", 1) for line in out.strip().splitlines() if "=" in line]
    return dict(pairs)


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "train.csv"
    code = run_cli(["gen-data", "--kind", "weak_xor", "--n", 800,
                    "--n-strong", 2, "--n-weak", 2, "--n-noise", 2,
                    "--seed", 7, "--out", path])
    assert code == 0
    return path


@pytest.fixture(scope="module")
def gbdt_model(data_csv, tmp_path_factory):
    path = tmp_path_factory.mktemp("models") / "gbdt.json"
    code = run_cli(["train", "--data", data_csv, "--model-kind", "gbdt",
                    "--trees", 8, "--depth", 3, "--lr", 0.1,
                    "--seed", 3, "--out", path])
    assert code == 0
    return path


@pytest.fixture(scope="module")
def cascade_model(data_csv, tmp_path_factory):
    path = tmp_path_factory.mktemp("models") / "cascade.json"
    code = run_cli(["train", "--data", data_csv, "--model-kind", "ldctree",
                    "--levels", 2, "--trees", 6, "--depth", 3, "--lr", 0.1,
                    "--seed", 4, "--out", path])
    assert code == 0
    return path


class TestGenData:
    def test_output_loads(self, data_csv):
        ds = load_csv(data_csv)
        assert len(ds) == 800
        assert ds.feature_names == ["strong_0", "strong_1", "weak_0", "weak_1",
                                    "noise_0", "noise_1"]

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert run_cli(["gen-data", "--n", 50, "--seed", 9, "--out", out]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_bad_kind_is_usage_error(self, tmp_path):
        assert run_cli(["gen-data", "--kind", "cubic",
                        "--out", tmp_path / "x.csv"]) == 1


class TestTrain:
    def test_shipping_defaults_accepted_explicitly(self, data_csv, tmp_path, capsys):
        out_path = tmp_path / "model.json"
        code = run_cli(["train", "--data", data_csv, "--model-kind", "gbdt",
                        "--depth", 8, "--trees", 150, "--lr", 0.01,
                        "--row-subsample", 0.6, "--feature-subsample", 0.6,
                        "--out", out_path])
        assert code == 0
        report = parse_report(capsys.readouterr().out)
        assert list(report) == TRAIN_KEYS
        model = load_model(out_path, expect_kind="gbdt")
        assert model.config_.num_trees == 150
        assert model.config_.max_depth == 8
        assert model.config_.learning_rate == 0.01

    def test_missing_data_flag_is_usage_error(self, tmp_path):
        assert run_cli(["train", "--model-kind", "gbdt",
                        "--out", tmp_path / "m.json"]) == 1

    def test_unknown_flag_rejected(self, data_csv, tmp_path):
        assert run_cli(["train", "--data", data_csv, "--model-kind", "gbdt",
                        "--out", tmp_path / "m.json", "--bogus", 1]) == 1

    def test_bad_split_is_usage_error(self, data_csv, tmp_path):
        assert run_cli(["train", "--data", data_csv, "--model-kind", "gbdt",
                        "--out", tmp_path / "m.json", "--split", "0.5,0.5"]) == 1

    @pytest.mark.parametrize("kind,extra", [
        ("eldctree", []),
        ("feldctree", ["--scf-threshold", 0.5]),
    ])
    def test_ensemble_kinds_train(self, data_csv, tmp_path, kind, extra):
        out_path = tmp_path / f"{kind}.json"
        code = run_cli(["train", "--data", data_csv, "--model-kind", kind,
                        "--cascades", 2, "--levels", 2, "--trees", 4,
                        "--depth", 3, "--lr", 0.1, "--seed", 5,
                        "--out", out_path, *extra])
        assert code == 0
        assert load_model(out_path, expect_kind=kind) is not None

    def test_same_seed_gives_identical_model_files(self, data_csv, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            code = run_cli(["train", "--data", data_csv, "--model-kind",
                            "ldctree", "--trees", 5, "--depth", 3,
                            "--lr", 0.1, "--seed", 11, "--out", out])
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_single_class_data_is_data_error(self, tmp_path):
        path = tmp_path / "oneclass.csv"
        path.write_text("id,label,f0\n" + "".join(
            f"r{i},1,{i}.5\n" for i in range(40)))
        assert run_cli(["train", "--data", path, "--model-kind", "gbdt",
                        "--out", tmp_path / "m.json"]) == 2

    def test_malformed_csv_is_data_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,label,f0\na,0,oops\n")
        assert run_cli(["train", "--data", path, "--model-kind", "gbdt",
                        "--out", tmp_path / "m.json"]) == 2

    def test_missing_file_is_data_error(self, tmp_path):
        assert run_cli(["train", "--data", tmp_path / "nope.csv",
                        "--model-kind", "gbdt", "--out", tmp_path / "m.json"]) == 2


class TestPredict:
    def test_output_format(self, gbdt_model, data_csv, tmp_path, capsys):
        out_path = tmp_path / "scores.csv"
        assert run_cli(["predict", "--model", gbdt_model, "--data", data_csv,
                        "--out", out_path]) == 0
        lines = out_path.read_text().splitlines()
        assert lines[0] == "id,score"
        ds = load_csv(data_csv)
        model = load_model(gbdt_model)
        expected = model.predict_score(ds.features)
        assert len(lines) == len(ds) + 1
        for line, instance_id, score in zip(lines[1:], ds.ids, expected):
            assert line == f"{instance_id},{score:.6f}"

    def test_missing_model_is_model_error(self, data_csv, tmp_path):
        assert run_cli(["predict", "--model", tmp_path / "ghost.json",
                        "--data", data_csv, "--out", tmp_path / "out.csv"]) == 3


class TestEvaluate:
    def test_row_per_fraction(self, gbdt_model, data_csv, capsys):
        assert run_cli(["evaluate", "--model", gbdt_model, "--data", data_csv,
                        "--topk", "0.1,0.2,0.5"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0].startswith("AUC")
        assert out[1].split() == ["threshold", "precision", "recall", "f1"]
        assert [line.split()[0] for line in out[2:]] == [
            "top@10%", "top@20%", "top@50%"]
        for line in out[2:]:
            assert all(cell.endswith("%") for cell in line.split()[1:])

    def test_perfect_model_prints_unit_auc(self, tmp_path, capsys):
        data = tmp_path / "sep.csv"
        rows = [f"r{i},{1 if v > 0 else 0},{v}" for i, v in
                enumerate(np.linspace(-1, 1, 41))]
        data.write_text("id,label,f0\n" + "\n".join(rows) + "\n")
        model_path = tmp_path / "perfect.json"
        save_model(manual_gbdt([stump(0, 0.0, -5.0, 5.0)], n_features=1,
                               learning_rate=1.0), model_path)
        assert run_cli(["evaluate", "--model", model_path, "--data", data]) == 0
        first = capsys.readouterr().out.splitlines()[0]
        assert first.split() == ["AUC", "1.0000"]

    def test_topk_zero_is_usage_error(self, gbdt_model, data_csv):
        assert run_cli(["evaluate", "--model", gbdt_model, "--data", data_csv,
                        "--topk", "0"]) == 1

    def test_feature_space_mismatch_is_model_error(self, gbdt_model, tmp_path):
        other = tmp_path / "renamed.csv"
        other.write_text("id,label,x0,x1,x2,x3,x4,x5\n"
                         "a,0,1,2,3,4,5,6\nb,1,2,3,4,5,6,7\n")
        assert run_cli(["evaluate", "--model", gbdt_model, "--data", other]) == 3


class TestImportance:
    def test_gbdt_table_and_cut(self, gbdt_model, capsys):
        assert run_cli(["importance", "--model", gbdt_model,
                        "--scf-threshold", 0.5]) == 0
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert lines[0].split() == ["feature", "importance"]
        assert any(line.startswith("SCF") for line in lines)
        assert any(line.startswith("WCF") for line in lines)

    def test_feldctree_prints_recorded_partition(self, data_csv, tmp_path, capsys):
        model_path = tmp_path / "f.json"
        assert run_cli(["train", "--data", data_csv, "--model-kind", "feldctree",
                        "--cascades", 2, "--trees", 4, "--depth", 3,
                        "--lr", 0.1, "--scf-threshold", 0.5,
                        "--out", model_path]) == 0
        capsys.readouterr()
        assert run_cli(["importance", "--model", model_path]) == 0
        out = capsys.readouterr().out
        assert "SCF (recorded" in out

    def test_eldctree_has_no_importance(self, data_csv, tmp_path):
        model_path = tmp_path / "e.json"
        assert run_cli(["train", "--data", data_csv, "--model-kind", "eldctree",
                        "--cascades", 2, "--trees", 4, "--depth", 3,
                        "--lr", 0.1, "--out", model_path]) == 0
        assert run_cli(["importance", "--model", model_path]) == 3


class TestExplain:
    def test_prints_sets_and_expression(self, cascade_model, capsys):
        assert run_cli(["explain", "--model", cascade_model, "--level", 2,
                        "--tree", 1, "--leaf", 1]) == 0
        out = capsys.readouterr().out
        assert out.startswith("leaf L2.T1.leaf1")
        assert "expression:" in out
        assert "S- = {" in out and "S+ = {" in out
        assert "∪" in out or "(L1.T" in out

    def test_level_one_is_usage_error(self, cascade_model):
        assert run_cli(["explain", "--model", cascade_model, "--level", 1,
                        "--tree", 1, "--leaf", 1]) == 1

    def test_invalid_address_is_model_error(self, cascade_model):
        assert run_cli(["explain", "--model", cascade_model, "--level", 2,
                        "--tree", 999, "--leaf", 1]) == 3

    def test_gbdt_cannot_be_explained(self, gbdt_model):
        assert run_cli(["explain", "--model", gbdt_model, "--level", 2,
                        "--tree", 1, "--leaf", 1]) == 3

    def test_ensemble_cascade_flag(self, data_csv, tmp_path, capsys):
        model_path = tmp_path / "ens.json"
        assert run_cli(["train", "--data", data_csv, "--model-kind", "eldctree",
                        "--cascades", 2, "--levels", 2, "--trees", 4,
                        "--depth", 3, "--lr", 0.1, "--out", model_path]) == 0
        assert run_cli(["explain", "--model", model_path, "--level", 2,
                        "--tree", 1, "--leaf", 1, "--cascade", 2]) == 0
        assert run_cli(["explain", "--model", model_path, "--level", 2,
                        "--tree", 1, "--leaf", 1, "--cascade", 5]) == 3


@pytest.mark.slow
class TestPairedExperiment:
    def test_feldctree_beats_gbdt_on_weak_xor(self, tmp_path, capsys):
        """Paired train invocations on the same seeds; feldctree routes the
        masked parity features into first levels and wins on validation AUC."""
        gaps = []
        for seed in (1, 4):
            data = tmp_path / f"xor{seed}.csv"
            assert run_cli(["gen-data", "--kind", "weak_xor", "--n", 50000,
                            "--n-strong", 2, "--n-weak", 3, "--n-noise", 10,
                            "--seed", seed, "--out", data]) == 0
            capsys.readouterr()
            aucs = {}
            for kind in ("gbdt", "feldctree"):
                out_path = tmp_path / f"{kind}{seed}.json"
                assert run_cli(["train", "--data", data, "--model-kind", kind,
                                "--trees", 40, "--depth", 8, "--lr", 0.01,
                                "--seed", seed, "--scf-threshold", 0.5,
                                "--out", out_path]) == 0
                aucs[kind] = float(parse_report(capsys.readouterr().out)["validation_auc"])
            gaps.append(aucs["feldctree"] - aucs["gbdt"])
        assert float(np.mean(gaps)) >= 0.02
