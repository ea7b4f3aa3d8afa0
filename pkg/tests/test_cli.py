import json

import numpy as np
import pytest
from click.testing import CliRunner

from src.cli.main import cli
from src.core.io import write_matrix_csv
from src.core.linalg import DenseMatrix


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


@pytest.fixture
def identity6_csv(tmp_path, identity6):
    path = tmp_path / "i6.csv"
    write_matrix_csv(path, identity6)
    return path


@pytest.fixture
def identity64_csv(tmp_path):
    path = tmp_path / "i64.csv"
    write_matrix_csv(path, DenseMatrix.identity(64))
    return path


@pytest.fixture
def gaussian_csv(tmp_path, gaussian_12x24):
    path = tmp_path / "g.csv"
    write_matrix_csv(path, gaussian_12x24)
    return path


def _pack(runner, path, n=64, k=4, size="lemma", seed=0):
    result = runner.invoke(cli, ["--seed", str(seed), "--out", str(path), "pack", "--n", str(n), "--k", str(k),
                                 "--size", size])
    assert result.exit_code == 0, result.stderr
    return json.loads(result.stdout)


class TestBound:
    """bound subcommand."""

    def test_identity(self, runner, identity6_csv):
        result = runner.invoke(cli, ["bound", str(identity6_csv), "--k", "2"])
        assert result.exit_code == 0, result.stderr
        data = json.loads(result.stdout)
        assert data["bound_simple"] == pytest.approx(1 / 3)
        assert data["fano_vacuous"] is True

    def test_signal_noise(self, runner, gaussian_csv):
        result = runner.invoke(cli, ["bound", str(gaussian_csv), "--k", "2", "--noise-model", "signal"])
        assert result.exit_code == 0, result.stderr
        data = json.loads(result.stdout)
        assert data["noise_model"] == "signal"
        assert data["effective_rows"] == 12

    def test_text_format(self, runner, identity6_csv):
        result = runner.invoke(cli, ["bound", str(identity6_csv), "--k", "2", "--format", "text"])
        assert result.exit_code == 0
        assert "Best lower bound" in result.stdout

    def test_malformed_matrix(self, runner, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3,oops\n")
        result = runner.invoke(cli, ["bound", str(path), "--k", "1"])
        assert result.exit_code == 1
        assert "line 2" in result.stderr
        assert result.stdout == ""

    def test_out_file(self, runner, identity6_csv, tmp_path):
        out = tmp_path / "report.json"
        result = runner.invoke(cli, ["--out", str(out), "bound", str(identity6_csv), "--k", "2"])
        assert result.exit_code == 0
        assert result.stdout == ""
        assert json.loads(out.read_text())["k"] == 2

    def test_non_positive_sigma(self, runner, identity6_csv):
        result = runner.invoke(cli, ["bound", str(identity6_csv), "--k", "2", "--sigma", "0"])
        assert result.exit_code == 1


class TestPack:
    """pack subcommand."""

    def test_lemma_sized_to_stdout(self, runner):
        result = runner.invoke(cli, ["pack", "--n", "64", "--k", "4"])
        assert result.exit_code == 0, result.stderr
        packing = json.loads(result.stdout)
        summary = json.loads(result.stderr)
        assert len(packing["points"]) == 16
        assert summary["lemma_size"] == 16
        assert summary["min_dist_sq"] >= 0.5
        assert summary["scatter_identity_residual"] <= 1e-10
        assert summary["p2_bound"] == pytest.approx(0.5)

    def test_same_seed_same_bytes(self, runner, tmp_path):
        _pack(runner, tmp_path / "a.json", seed=3)
        _pack(runner, tmp_path / "b.json", seed=3)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_odd_k(self, runner):
        result = runner.invoke(cli, ["pack", "--n", "64", "--k", "3"])
        assert result.exit_code == 1
        assert "even" in result.stderr

    def test_bad_size(self, runner):
        result = runner.invoke(cli, ["pack", "--n", "64", "--k", "4", "--size", "many"])
        assert result.exit_code == 1

    def test_exhausted(self, runner):
        result = runner.invoke(cli, ["pack", "--n", "6", "--k", "2", "--size", "100"])
        assert result.exit_code == 2
        assert "Numerical failure" in result.stderr


class TestCertify:
    """certify subcommand."""

    def test_identity_with_lemma_packing(self, runner, identity64_csv, tmp_path):
        packing = tmp_path / "p.json"
        _pack(runner, packing)
        result = runner.invoke(cli, ["certify", str(identity64_csv), str(packing)])
        assert result.exit_code == 0, result.stderr
        data = json.loads(result.stdout)
        assert data["certificate"]["M_cert"] > 0
        assert data["comparison"]["dominates"] is True

    def test_tiny_packing_is_vacuous(self, runner, identity64_csv, tmp_path):
        packing = tmp_path / "p.json"
        _pack(runner, packing, size="4")
        result = runner.invoke(cli, ["certify", str(identity64_csv), str(packing)])
        assert result.exit_code == 0
        assert json.loads(result.stdout)["certificate"]["vacuous"] is True

    def test_design_scaling(self, runner, tmp_path):
        packing = tmp_path / "p.json"
        _pack(runner, packing)
        values = []
        for c in (1.0, 2.0):
            path = tmp_path / f"a{c}.csv"
            write_matrix_csv(path, DenseMatrix.identity(64).scaled(c))
            result = runner.invoke(cli, ["certify", str(path), str(packing)])
            values.append(json.loads(result.stdout)["certificate"]["M_cert"])
        assert values[1] == pytest.approx(values[0] / 4, rel=1e-12)

    def test_dimension_mismatch(self, runner, identity6_csv, tmp_path):
        packing = tmp_path / "p.json"
        _pack(runner, packing)
        result = runner.invoke(cli, ["certify", str(identity6_csv), str(packing)])
        assert result.exit_code == 1

    def test_needs_both_files(self, runner, identity64_csv):
        result = runner.invoke(cli, ["certify", str(identity64_csv)])
        assert result.exit_code == 1

    def test_text_format(self, runner, identity64_csv, tmp_path):
        packing = tmp_path / "p.json"
        _pack(runner, packing)
        result = runner.invoke(cli, ["certify", str(identity64_csv), str(packing), "--format", "text"])
        assert result.exit_code == 0
        assert "M_cert" in result.stdout


class TestSimulate:
    """simulate subcommand."""

    def test_oracle_with_support(self, runner, gaussian_csv):
        result = runner.invoke(cli, ["--seed", "1", "simulate", str(gaussian_csv), "--estimator", "oracle-ls",
                                     "--support", "0,3", "--trials", "200"])
        assert result.exit_code == 0, result.stderr
        data = json.loads(result.stdout)
        assert data["estimator"] == "oracle-ls"
        assert data["trials"] == 200
        assert data["seed"] == 1
        assert data["failures"] == 0

    def test_zero_estimator_on_packing(self, runner, identity64_csv, tmp_path):
        packing = tmp_path / "p.json"
        _pack(runner, packing)
        result = runner.invoke(cli, ["simulate", str(identity64_csv), "--estimator", "zero",
                                     "--packing", str(packing), "--level", "0.001", "--trials", "20"])
        assert result.exit_code == 0, result.stderr
        assert json.loads(result.stdout)["mean_risk"] == pytest.approx(0.016, rel=1e-12)

    def test_random_signal_lasso(self, runner, gaussian_csv):
        result = runner.invoke(cli, ["simulate", str(gaussian_csv), "--estimator", "lasso", "--k", "2",
                                     "--trials", "20"])
        assert result.exit_code == 0, result.stderr
        assert json.loads(result.stdout)["estimator"] == "lasso"

    def test_one_trial_rejected(self, runner, gaussian_csv):
        result = runner.invoke(cli, ["simulate", str(gaussian_csv), "--estimator", "zero", "--k", "2",
                                     "--trials", "1"])
        assert result.exit_code == 1

    def test_unknown_estimator(self, runner, gaussian_csv):
        result = runner.invoke(cli, ["simulate", str(gaussian_csv), "--estimator", "ridge", "--k", "2"])
        assert result.exit_code == 1

    def test_packing_needs_level(self, runner, identity64_csv, tmp_path):
        packing = tmp_path / "p.json"
        _pack(runner, packing)
        result = runner.invoke(cli, ["simulate", str(identity64_csv), "--estimator", "zero",
                                     "--packing", str(packing)])
        assert result.exit_code == 1


class TestCompare:
    """compare subcommand."""

    def test_csv_output(self, runner):
        result = runner.invoke(cli, ["compare", "--n", "32", "--k", "2", "--m", "12,16", "--trials", "5",
                                     "--signals", "1"])
        assert result.exit_code == 0, result.stderr
        lines = result.stdout.strip().split("\n")
        assert lines[0] == "m,lower_bound,certificate,lasso_risk,oracle_rate,ds_rate"
        assert [line.split(",")[0] for line in lines[1:]] == ["12", "16"]

    def test_needs_m(self, runner):
        result = runner.invoke(cli, ["compare", "--n", "32", "--k", "2"])
        assert result.exit_code == 1

    def test_wrong_recipe_kind(self, runner):
        result = runner.invoke(cli, ["compare", "--recipe", "bernstein"])
        assert result.exit_code == 1
        assert "not compare" in result.stderr


class TestBernsteinAndRecipes:
    """bernstein and recipes subcommands."""

    def test_bernstein_json(self, runner):
        result = runner.invoke(cli, ["bernstein", "--n", "8", "--k", "2", "--size", "8", "--reps", "20"])
        assert result.exit_code == 0, result.stderr
        data = json.loads(result.stdout)
        assert len(data["rows"]) == 5
        assert data["draw_norm_violations"] == 0

    def test_bernstein_text(self, runner):
        result = runner.invoke(cli, ["bernstein", "--n", "8", "--k", "2", "--size", "8", "--reps", "20",
                                     "--format", "text"])
        assert result.exit_code == 0
        assert "rho^2" in result.stdout

    def test_bernstein_too_large(self, runner):
        result = runner.invoke(cli, ["bernstein", "--n", "128", "--k", "4", "--reps", "20"])
        assert result.exit_code == 1

    def test_recipes_listing(self, runner):
        result = runner.invoke(cli, ["recipes"])
        assert result.exit_code == 0
        assert "gap" in result.stdout
        assert "certify" in result.stdout

    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "1.0.0" in result.stdout
