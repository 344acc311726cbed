import csv
import json
import subprocess
import sys

import pytest

from cpt_lab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


MARKET = {"d": 1, "k": 1, "T": 1.0, "grid": [0.0, 1.0], "mu": [[0.08]], "sigma": [[[0.2]]], "s0": [1.0]}


@pytest.fixture
def market_file(tmp_path):
    path = tmp_path / "market.json"
    path.write_text(json.dumps(MARKET))
    return path


class TestClassify:
    def test_example(self, capsys):
        code, out, _ = run(capsys, "classify", "--alpha", "0.5", "--beta", "0.8", "--gamma", "0.6", "--delta", "0.7")
        assert code == 0 and out["verdict"] == "WellPosed"

    def test_fractions(self, capsys):
        code, out, _ = run(capsys, "classify", "--alpha", "1/2", "--beta", "3/5", "--gamma", "1/2", "--delta", "1/2")
        assert out == {"verdict": "Boundary", "cause": "AlphaEqGamma"}

    def test_spec_file(self, capsys, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"alpha": 0.8, "beta": 0.5, "gamma": 0.9, "delta": 0.9, "form": "tk"}))
        _, out, _ = run(capsys, "classify", "--spec-file", str(path))
        assert out == {"verdict": "IllPosed", "cause": "AlphaGeBeta", "tk_caveat": True}

    def test_missing_exponent(self, capsys):
        code, _, err = run(capsys, "classify", "--alpha", "0.5")
        assert code == 2 and "give --spec-file" in err

    def test_bad_json_reports_line(self, capsys, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text('{\n  "alpha": 0.5,\n  oops\n}')
        code, _, err = run(capsys, "classify", "--spec-file", str(path))
        assert code == 2 and f"{path}:3:" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "classify", "--spec-file", str(tmp_path / "nope.json"))
        assert code == 2

    def test_usage_error_exit_code(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["classify", "--bogus"])
        assert exc.value.code == 2

    def test_grid(self, capsys, tmp_path):
        code, out, _ = run(capsys, "classify-grid", "--step", "1/5", "--output-dir", str(tmp_path))
        assert code == 0 and out["points"] == 625 and sum(out["counts"].values()) == 625
        rows = list(csv.DictReader(open(out["csv_path"])))
        assert len(rows) == 625 and rows[0]["alpha"] == "1/5"


class TestEvaluate:
    def test_atoms(self, capsys, tmp_path):
        law = tmp_path / "law.json"
        law.write_text(json.dumps({"kind": "atoms", "atoms": [[-100, 0.5, 0.5], [100, 0.5, 0.5]]}))
        code, out, _ = run(capsys, "evaluate", "--alpha", "0.9", "--beta", "0.5", "--gamma", "1", "--delta", "1", "--law-file", str(law))
        assert code == 0 and out["value"]["kind"] == "Finite"
        assert out["value"]["value"] == pytest.approx(26.548, abs=1e-3)

    def test_divergent(self, capsys, tmp_path):
        law = tmp_path / "law.json"
        law.write_text(json.dumps({"kind": "quantile", "grid": [[0.0, 1.0], [0.0, 1.0]], "tail": {"coef": 1.0, "exp": 0.5}}))
        _, out, _ = run(capsys, "evaluate", "--alpha", "0.5", "--beta", "0.8", "--gamma", "0.6", "--delta", "0.7", "--law-file", str(law))
        assert out["value"]["kind"] == "PosInfinite"

    def test_undefined(self, capsys, tmp_path):
        law = tmp_path / "law.json"
        law.write_text(json.dumps({"kind": "atoms", "atoms": [[1.0, 0.5, 0.2], [2.0, 0.6, 0.8]]}))
        code, _, _ = run(capsys, "evaluate", "--alpha", "0.5", "--beta", "0.8", "--gamma", "0.6", "--delta", "0.7", "--law-file", str(law))
        assert code == 2


class TestWitness:
    def test_first_construction_row(self, capsys, tmp_path):
        code, out, _ = run(capsys, "witness", "--cause", "a_ge_b", "--n-max", "100", "--x0", "0", "--v", "0", "--output-dir", str(tmp_path))
        assert code == 0
        rows = {int(r["n"]): r for r in csv.DictReader(open(out["csv_path"]))}
        assert float(rows[100]["numeric"]) == pytest.approx(26.548, abs=1e-3)
        assert float(rows[100]["closed_form"]) == pytest.approx(26.548, abs=1e-3)

    def test_market_file(self, capsys, tmp_path, market_file):
        code, out, _ = run(capsys, "witness", "--cause", "ag_gt_1", "--n-max", "50", "--points", "5", "--market-file", str(market_file), "--output-dir", str(tmp_path))
        assert code == 0 and out["report"]["v"] == pytest.approx(0.16)

    def test_precondition_exit(self, capsys, tmp_path):
        code, _, err = run(capsys, "witness", "--cause", "bd_lt_1", "--n-max", "10", "--x0", "1", "--output-dir", str(tmp_path))
        assert code == 2 and "PreconditionError" in err


class TestAudit:
    def test_byte_identical(self, capsys, tmp_path):
        outs = []
        for sub in ("a", "b"):
            code, out, _ = run(capsys, "audit", "--lemma", "eleql", "--corpus-size", "100", "--seed", "1", "--output-dir", str(tmp_path / sub))
            assert code == 0 and out["violation"] == 0
            outs.append(open(out["csv_path"], "rb").read())
        assert outs[0] == outs[1]

    def test_full_precision(self, capsys, tmp_path):
        _, out, _ = run(capsys, "audit", "--lemma", "l1l2", "--corpus-size", "5", "--seed", "2", "--output-dir", str(tmp_path))
        row = next(csv.DictReader(open(out["csv_path"])))
        assert float(repr(float(row["lhs"]))) == float(row["lhs"])


class TestMarket:
    def test_kernel_and_samples(self, capsys, tmp_path, market_file):
        code, out, _ = run(capsys, "market", "--market-file", str(market_file), "--samples", "1000", "--measure", "Q", "--check-samples", "1000", "--output-dir", str(tmp_path))
        assert code == 0
        assert out["kernel"]["v"] == pytest.approx(0.16) and out["assumptions"]["passed"]
        assert open(out["sample_csv_path"]).readline().strip() == "rho,U,U_star"


class TestSearch:
    def test_optimize(self, capsys, tmp_path):
        code, out, _ = run(capsys, "optimize", "--alpha", "0.5", "--beta", "0.8", "--gamma", "0.6", "--delta", "0.7", "--x0", "1", "--iters", "100", "--starts", "2", "--n-u", "4", "--n-star", "1", "--output-dir", str(tmp_path))
        assert code == 0 and out["best_value"] >= 1.0
        trace = [float(r["best_value"]) for r in csv.DictReader(open(out["trace_csv_path"]))]
        assert trace == sorted(trace) and trace[-1] == out["best_value"]

    def test_optimize_regime_exit(self, capsys, tmp_path):
        code, _, err = run(capsys, "optimize", "--alpha", "0.9", "--beta", "0.5", "--gamma", "1", "--delta", "1", "--x0", "1", "--output-dir", str(tmp_path))
        assert code == 2 and "RegimeError" in err

    def test_diverge(self, capsys, tmp_path):
        code, out, _ = run(capsys, "diverge", "--alpha", "0.9", "--beta", "0.5", "--gamma", "1", "--delta", "1", "--target-M", "25", "--output-dir", str(tmp_path))
        assert code == 0 and out["value"] > 25 and out["index"] <= 100


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "cpt_lab", "classify", "--alpha", "0.5", "--beta", "0.8", "--gamma", "0.6", "--delta", "0.7"],
        capture_output=True,
        text=True,
        cwd=tmp_path,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["verdict"] == "WellPosed"
