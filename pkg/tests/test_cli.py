import csv
import json

import numpy as np
import pytest

from privsample.cli import main
from privsample.harness import certify_runtime_law


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_account_prints_table_value(capsys):
    assert main(["account", "--R", "2", "--delta", "1e-6"]) == 0
    assert capsys.readouterr().out.strip() == "12.43"


def test_account_from_probabilities(tmp_path, capsys):
    assert main(["account", "--p", "0.19", "--q", "0.1", "--eps", "0", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "0.25" in out
    rows = read_csv(tmp_path / "f_R_2.csv")
    assert rows[0] == ["alpha", "beta", "source"] and rows[1][2] == "f_R"


def test_sample_squeeze_csv(tmp_path):
    assert main(["sample", "--sampler", "squeeze", "--target", "gaussian-demo", "--n", "3000", "--seed", "7",
                 "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "samples_squeeze_gaussian-demo_seed7.csv")
    assert rows[0] == ["x0", "runtime", "accepted"] and len(rows) == 3001
    assert certify_runtime_law([int(r[1]) for r in rows[1:]], 0.5).passed


def test_sample_rerun_is_byte_identical(tmp_path):
    args = ["sample", "--sampler", "adaptive", "--target", "example4-lipschitz", "--n", "300", "--seed", "11"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    name = "samples_adaptive_example4-lipschitz_seed11.csv"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_outputs_are_append_only(tmp_path, capsys):
    args = ["sample", "--sampler", "simple", "--n", "10", "--seed", "1", "--out", str(tmp_path)]
    assert main(args) == 0
    assert main(args) == 2
    assert "append-only" in capsys.readouterr().err


@pytest.mark.parametrize("sampler", ["simple", "truncated", "wait", "squeeze"])
def test_all_samplers_on_kng(tmp_path, sampler):
    assert main(["sample", "--sampler", sampler, "--target", "kng-demo", "--n", "50", "--seed", "2",
                 "--out", str(tmp_path)]) == 0


def test_ridge_erm_from_file(tmp_path):
    db = tmp_path / "db.json"
    db.write_text(json.dumps({"records": [[1, 2], [0.5, -1]], "alpha_reg": 1, "L_loss": 1, "delta_sens": 1,
                              "eps": 1}))
    assert main(["sample", "--sampler", "squeeze", "--target", "ridge-erm", "--erm", str(db), "--n", "20",
                 "--seed", "3", "--out", str(tmp_path), "--events"]) == 0
    assert (tmp_path / "samples_squeeze_ridge-erm_seed3_events.jsonl").exists()


def test_config_file(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"sampler": "squeeze", "target": "gaussian-demo", "n": 5}))
    assert main(["sample", "--seed", "4", "--config", str(cfg), "--out", str(tmp_path)]) == 0


@pytest.mark.parametrize("argv", [
    ["sample", "--sampler", "squeeze", "--target", "nope", "--n", "5", "--seed", "1"],
    ["sample", "--sampler", "adaptive", "--target", "gaussian-demo", "--n", "5", "--seed", "1"],
    ["sample", "--sampler", "wait", "--target", "ridge-erm", "--n", "5", "--seed", "1"],
    ["account", "--R", "0.5", "--delta", "0.1"],
    ["attack", "--p", "0", "--q", "0.5", "--seed", "1"],
])
def test_invalid_config_exit_2(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["sample", "--seed", "1", "--config", str(cfg)]) == 2


def test_unknown_subcommand_and_missing_seed():
    with pytest.raises(SystemExit) as e:
        main(["launch"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["sample", "--sampler", "simple", "--n", "3"])
    assert e.value.code == 2


def test_attack_outputs(tmp_path):
    assert main(["attack", "--p", "0.19", "--q", "0.1", "--n", "20000", "--seed", "5", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "attack_p0.19_q0.1_seed5.csv")
    assert rows[0] == ["alpha", "beta", "source"]
    assert {r[2] for r in rows[1:]} == {"exact", "empirical", "f_R"}
    summary = json.loads((tmp_path / "attack_p0.19_q0.1_seed5.json").read_text())
    assert summary["R"] == pytest.approx(2.0)


def test_reproduce(tmp_path):
    assert main(["reproduce", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "eps_delta_table.csv")
    assert len(rows) == 13
    eps = {(float(r[0]), float(r[1])): float(r[2]) for r in rows[1:]}
    assert eps[(2.0, 0.1)] == pytest.approx(0.916, abs=0.005)
    for q in ("0.1", "0.6"):
        fig = read_csv(tmp_path / f"tradeoff_vs_f_R_q{q}.csv")
        assert {r[2] for r in fig[1:]} == {"exact", "exact_inverse", "f_R"}
        alpha = np.array([float(r[0]) for r in fig[1:]])
        assert alpha.min() == 0.0 and alpha.max() == 1.0


def test_verify_quick_writes_reports(tmp_path):
    code = main(["verify", "--suite", "quick", "--seed", "7", "--out", str(tmp_path)])
    lines = (tmp_path / "verify_quick_seed7.jsonl").read_text().splitlines()
    reports = [json.loads(x) for x in lines]
    assert code == (0 if all(r["pass"] for r in reports) else 1)
    assert code == 0


def test_verify_failure_exit_1(monkeypatch, capsys):
    from privsample import harness

    monkeypatch.setattr(harness, "run_suite", lambda seed, scale: [harness.TestReport("x", 1.0, 0.0, False)])
    assert main(["verify", "--seed", "1"]) == 1
    assert "[FAIL] x" in capsys.readouterr().out
