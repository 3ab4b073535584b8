import json

import numpy as np
import pytest

from caspar.cli import main


def run(args):
    return main([str(a) for a in args])


def read_json(path):
    with open(path) as handle:
        return json.load(handle)


@pytest.fixture
def design(tmp_path):
    out = tmp_path / "sim"
    code = run(
        ["simulate", "--n", 40, "--p", 20, "--groups", 2, "--group-size", 3,
         "--seed", 7, "--out", out]
    )
    assert code == 0
    return out


class TestSimulate:
    def test_writes_design_meta_and_config(self, design):
        assert (design.parent / "sim.design.csv").exists()
        meta = read_json(design.parent / "sim.meta.json")
        assert len(meta["beta_true"]) == 20
        assert meta["positions"] == list(range(20))
        config = read_json(design.parent / "sim.config.json")
        assert config["seed"] == 7 and config["command"] == "simulate"

    def test_rerun_is_byte_identical(self, tmp_path):
        args = ["simulate", "--n", 25, "--p", 12, "--groups", 2, "--group-size", 3,
                "--seed", 3, "--out", tmp_path / "a"]
        assert run(args) == 0
        first = (tmp_path / "a.design.csv").read_bytes()
        assert run(args) == 0
        assert (tmp_path / "a.design.csv").read_bytes() == first


class TestFit:
    def test_alpha_one_matches_stepwise_end_to_end(self, design, tmp_path):
        meta = design.parent / "sim.meta.json"
        csv = design.parent / "sim.design.csv"
        assert run(["fit", "--design", csv, "--method", "caspar", "--epsilon", 5,
                    "--alpha", 1.0, "--bandwidth", 2, "--meta", meta,
                    "--out", tmp_path / "c"]) == 0
        assert run(["fit", "--design", csv, "--method", "stepwise", "--epsilon", 5,
                    "--out", tmp_path / "s"]) == 0
        caspar_doc = read_json(tmp_path / "c.fit.json")
        stepwise_doc = read_json(tmp_path / "s.fit.json")
        assert caspar_doc["selected"] == stepwise_doc["selected"]
        assert caspar_doc["final"] == stepwise_doc["final"]

    def test_missing_input_exits_2_and_names_path(self, tmp_path, capsys):
        code = run(["fit", "--design", tmp_path / "nope.csv", "--method", "stepwise",
                    "--epsilon", 1, "--out", tmp_path / "x"])
        assert code == 2
        record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert "nope.csv" in record["message"]

    def test_fit_rerun_byte_identical_and_inputs_untouched(self, design, tmp_path):
        csv = design.parent / "sim.design.csv"
        before = csv.read_bytes()
        args = ["fit", "--design", csv, "--method", "stepwise", "--epsilon", 5,
                "--out", tmp_path / "f"]
        assert run(args) == 0
        first = (tmp_path / "f.fit.json").read_bytes()
        assert run(args) == 0
        assert (tmp_path / "f.fit.json").read_bytes() == first
        assert csv.read_bytes() == before

    def test_lasso_fit(self, design, tmp_path):
        csv = design.parent / "sim.design.csv"
        assert run(["fit", "--design", csv, "--method", "lasso", "--lam", 50,
                    "--out", tmp_path / "l"]) == 0
        doc = read_json(tmp_path / "l.fit.json")
        assert doc["method"] == "lasso"
        assert len(doc["final"]["support"]) == len(doc["final"]["values"])

    def test_numerical_failure_exits_3(self, design, tmp_path):
        csv = design.parent / "sim.design.csv"
        code = run(["fit", "--design", csv, "--method", "lasso", "--lam", 0.0001,
                    "--tol", 1e-14, "--max-iters", 1, "--out", tmp_path / "n"])
        assert code == 3

    def test_caspar_requires_structure(self, design, tmp_path):
        csv = design.parent / "sim.design.csv"
        code = run(["fit", "--design", csv, "--method", "caspar", "--epsilon", 5,
                    "--out", tmp_path / "u"])
        assert code == 1

    def test_graph_structure_accepted(self, design, tmp_path):
        csv = design.parent / "sim.design.csv"
        edges = tmp_path / "edges.txt"
        edges.write_text("\n".join(f"{i} {i + 1} 1.0" for i in range(19)) + "\n")
        node_map = tmp_path / "map.txt"
        node_map.write_text("\n".join(str(i) for i in range(20)) + "\n")
        assert run(["fit", "--design", csv, "--method", "caspar", "--epsilon", 5,
                    "--alpha", 0.5, "--bandwidth", 2, "--graph-edges", edges,
                    "--graph-map", node_map, "--out", tmp_path / "g"]) == 0


class TestUsageErrors:
    def test_no_subcommand(self, capsys):
        assert run([]) == 1
        record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert record["kind"] == "usage"

    def test_unknown_flag(self):
        assert run(["simulate", "--n", 10, "--frobnicate", 1, "--out", "x"]) == 1

    def test_bad_method_choice(self, tmp_path):
        assert run(["fit", "--design", "d.csv", "--method", "ridge",
                    "--out", tmp_path / "x"]) == 1


class TestCv:
    def test_writes_table_and_config(self, design, tmp_path):
        csv = design.parent / "sim.design.csv"
        out = tmp_path / "cv"
        assert run(["cv", "--design", csv, "--method", "stepwise", "--folds", 4,
                    "--seed", 1, "--eps-count", 4, "--threads", 1, "--out", out]) == 0
        lines = (tmp_path / "cv.cv.csv").read_text().splitlines()
        assert lines[0] == "method,eps,fold_0,fold_1,fold_2,fold_3,mean,chosen"
        assert len(lines) == 5
        assert sum(line.endswith(",1") for line in lines[1:]) == 1

    def test_caspar_cv_with_meta(self, design, tmp_path):
        csv = design.parent / "sim.design.csv"
        meta = design.parent / "sim.meta.json"
        out = tmp_path / "cv"
        assert run(["cv", "--design", csv, "--method", "caspar", "--folds", 4,
                    "--seed", 1, "--eps-count", 3, "--alphas", "0.5,1",
                    "--bandwidths", "2", "--meta", meta, "--threads", 1,
                    "--out", out]) == 0
        lines = (tmp_path / "cv.cv.csv").read_text().splitlines()
        assert lines[0].startswith("method,eps,h,alpha,fold_0")
        assert len(lines) == 1 + 3 * 2


class TestDiagnose:
    def test_with_explicit_support(self, design, tmp_path):
        csv = design.parent / "sim.design.csv"
        assert run(["diagnose", "--design", csv, "--support", "0,3,5",
                    "--out", tmp_path / "d"]) == 0
        doc = read_json(tmp_path / "d.diagnostics.json")
        assert doc["support"] == [0, 3, 5]
        assert doc["rho"] > 0

    def test_with_meta_support(self, design, tmp_path):
        csv = design.parent / "sim.design.csv"
        meta = design.parent / "sim.meta.json"
        assert run(["diagnose", "--design", csv, "--meta", meta,
                    "--out", tmp_path / "d2"]) == 0
        doc = read_json(tmp_path / "d2.diagnostics.json")
        assert len(doc["support"]) == 6  # 2 groups of 3


class TestEncode:
    def test_end_to_end(self, tmp_path):
        (tmp_path / "seqs.csv").write_text("s1,ACDA\ns2,ACEA\ns3,GCDA\n")
        (tmp_path / "phenos.csv").write_text("s1,APV,10\ns2,APV,100\ns3,APV,1000\n")
        out = tmp_path / "enc"
        assert run(["encode", "--sequences", tmp_path / "seqs.csv",
                    "--phenotypes", tmp_path / "phenos.csv", "--drug", "APV",
                    "--out", out]) == 0
        lines = (tmp_path / "enc.design.csv").read_text().splitlines()
        assert lines[0].startswith("y,")
        meta = read_json(tmp_path / "enc.meta.json")
        assert meta["transform"] == "log10"
        assert all(c["position"] in (1, 3) for c in meta["columns"])

    def test_encode_data_error_exit_2(self, tmp_path):
        (tmp_path / "seqs.csv").write_text("s1,AAA\ns2,AAA\n")
        (tmp_path / "phenos.csv").write_text("s1,APV,10\ns2,APV,20\n")
        code = run(["encode", "--sequences", tmp_path / "seqs.csv",
                    "--phenotypes", tmp_path / "phenos.csv", "--drug", "APV",
                    "--out", tmp_path / "e"])
        assert code == 2


class TestExperiment:
    def test_grid_row_count_rerun_and_schema(self, tmp_path):
        args = ["experiment", "--ns", "30,40", "--replicates", 2,
                "--methods", "stepwise,caspar,lasso", "--p", 20, "--groups", 2,
                "--group-size", 3, "--seed", 5, "--folds", 4,
                "--alphas", "0.5,1", "--bandwidths", "2", "--eps-count", 4,
                "--lambda-count", 4, "--threads", 1, "--out", tmp_path / "exp"]
        assert run(args) == 0
        text = (tmp_path / "exp.results.csv").read_bytes()
        lines = text.decode().splitlines()
        assert lines[0] == "n,replicate,method,recovery_error,tpr,fpr,n_selected,eps,h,alpha,seed"
        assert len(lines) == 1 + 2 * 2 * 3
        assert run(args) == 0
        assert (tmp_path / "exp.results.csv").read_bytes() == text
        config = read_json(tmp_path / "exp.config.json")
        assert config["ns"] == [30, 40]
