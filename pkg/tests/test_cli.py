import csv
import json
from pathlib import Path

import numpy as np
import pytest

from loctime import cli
from loctime.cli import SAMPLES_HEADER, RunManifest, UsageError, emit_report, main, parse_args
from loctime.montecarlo import ExperimentConfig, run_experiment, zero_field


def strict_loads(text):
    def reject(name):
        raise ValueError(f"non-standard JSON constant {name}")

    return json.loads(text, parse_constant=reject)


def test_parse_clt_example():
    m = parse_args("clt --q 2 --t 1 --dt 1e-4 --bin 0.01 --h 0.4,0.2,0.1,0.05 --paths 4000 --seed 7".split())
    assert m.command == "clt"
    assert m.config == ExperimentConfig(
        mode="fixed-time", q=2, t=1.0, dt=1e-4, bin_width=0.01,
        h_list=(0.4, 0.2, 0.1, 0.05), n_paths=4000, master_seed=7,
    )


def test_parse_alignment_error():
    with pytest.raises(UsageError, match="multiple"):
        parse_args("clt --h 0.03 --bin 0.02".split())


def test_parse_config_precedence(tmp_path):
    base = tmp_path / "base.json"
    base.write_text(json.dumps({"q": 3, "n_paths": 500, "h_list": [0.2, 0.1], "master_seed": 4}))
    m = parse_args(["clt", "--config", str(base), "--paths", "100"])
    assert m.config.q == 3 and m.config.n_paths == 100 and m.config.h_list == (0.2, 0.1)
    assert m.config.master_seed == 4


def test_parse_rejects_unknown_keys_and_conflicts(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"q": 2, "paths_total": 3}))
    with pytest.raises(UsageError, match="paths_total"):
        parse_args(["clt", "--config", str(bad)])
    with pytest.raises(UsageError, match="--tau-start"):
        parse_args("clt --tau-start 1".split())
    with pytest.raises(UsageError, match="--t"):
        parse_args("tau-clt --t 2".split())
    tau = tmp_path / "tau.json"
    tau.write_text(json.dumps({"mode": "tau"}))
    with pytest.raises(UsageError, match="conflicts"):
        parse_args(["clt", "--config", str(tau)])
    with pytest.raises(UsageError, match="--bogus"):
        parse_args("clt --bogus 1".split())
    with pytest.raises(UsageError):
        parse_args("expectation-scan --q 3".split())


def test_parse_command_defaults():
    assert parse_args(["tau-clt"]).config.mode == "tau"
    assert parse_args(["conjecture-probe"]).config.q == 4
    m = parse_args(["verify-identities", "--paths", "5"])
    assert m.config is None and m.identity_paths == 5


def test_exit_codes(tmp_path, capsys, monkeypatch):
    assert main(["clt", "--h", "0.03", "--bin", "0.02"]) == 1
    assert main(["verify-identities", "--paths", "3", "--out", str(tmp_path / "v")]) == 0
    report = strict_loads((tmp_path / "v" / "identities.json").read_text())
    assert all(c["passed"] for c in report["checks"])

    import loctime.verification as verification
    from loctime.verification import CheckResult

    monkeypatch.setattr(verification, "run_identity_suite", lambda **kw: [CheckResult("x", False, "forced")])
    assert main(["verify-identities", "--out", str(tmp_path / "v2")]) == 2


def _manifest(tmp_path, name="out", fmt="both"):
    return RunManifest("clt", None, tmp_path / name, fmt)


def test_zero_stub_report(tmp_path):
    cfg = ExperimentConfig(q=2, h_list=(0.2, 0.1), n_paths=2, master_seed=1)
    emit_report(run_experiment(cfg, zero_field), _manifest(tmp_path))
    text = (tmp_path / "out" / "samples.csv").read_text(encoding="utf-8")
    assert "\r" not in text
    rows = list(csv.reader(text.splitlines()))
    assert rows[0] == SAMPLES_HEADER
    assert len(rows) == 1 + 2 * 2
    for row in rows[1:]:
        assert all(float(v) == 0.0 for v in row[4:])
    summary = strict_loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["per_h"][0]["var_ratio"] is None


def _check_samples_schema(path: Path, cfg: ExperimentConfig):
    rows = list(csv.reader(path.read_text(encoding="utf-8").splitlines()))
    assert rows[0] == SAMPLES_HEADER
    assert len(rows) - 1 == cfg.n_paths * len(cfg.h_list)
    for i, row in enumerate(rows[1:]):
        assert len(row) == len(SAMPLES_HEADER)
        assert int(row[0]) == i // len(cfg.h_list)
        assert float(row[1]) == cfg.h_list[i % len(cfg.h_list)]
        assert (int(row[2]), int(row[3])) == (cfg.q, cfg.r)
        for v in row[4:]:
            assert "e" not in v.lower()
            digits = v.lstrip("-").replace(".", "").lstrip("0") or "0"
            assert len(digits) >= 17 or float(v) == 0.0
            float(v)


@pytest.mark.parametrize("q,r,mode", [(2, 0, "fixed-time"), (3, 1, "fixed-time"), (2, 0, "tau")])
def test_samples_schema(tmp_path, q, r, mode):
    cfg = ExperimentConfig(mode=mode, q=q, r=r, h_list=(0.2, 0.05), n_paths=6, master_seed=2)
    rep = run_experiment(cfg)
    emit_report(rep, _manifest(tmp_path))
    _check_samples_schema(tmp_path / "out" / "samples.csv", cfg)
    rows = list(csv.reader((tmp_path / "out" / "samples.csv").read_text().splitlines()))[1:]
    t_col = np.array([float(r[6]) for r in rows]).reshape(6, 2)
    np.testing.assert_array_equal(t_col, rep.t_q)


def test_summary_round_trip(tmp_path):
    cfg = ExperimentConfig(q=2, h_list=(0.2, 0.1), n_paths=10, master_seed=9)
    emit_report(run_experiment(cfg), _manifest(tmp_path))
    text = (tmp_path / "out" / "summary.json").read_text(encoding="utf-8")
    doc = strict_loads(text)
    assert json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n" == text
    assert doc["master_seed"] == 9
    assert set(doc["per_h"][0]) >= {"h", "ks_stat", "var_ratio", "mean_T", "mean_S", "stderr"}
    assert len(doc["path_seeds"]) == 10


def test_rerun_is_byte_identical_and_reconstructible(tmp_path):
    args = ["clt", "--q", "3", "--h", "0.2,0.1", "--paths", "20", "--seed", "11"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    for name in ("samples.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    summary = strict_loads((tmp_path / "a" / "summary.json").read_text())
    cfg_file = tmp_path / "echo.json"
    cfg_file.write_text(json.dumps(summary["config"]))
    assert main(["clt", "--config", str(cfg_file), "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "a" / "samples.csv").read_bytes() == (tmp_path / "c" / "samples.csv").read_bytes()


def test_format_selection_and_tables(tmp_path):
    assert main(["expectation-scan", "--h", "0.2,0.1", "--paths", "10", "--format", "csv", "--out", str(tmp_path / "e")]) == 0
    assert (tmp_path / "e" / "samples.csv").exists()
    assert not (tmp_path / "e" / "summary.json").exists()
    assert (tmp_path / "e" / "expectation.csv").read_text().startswith("h,mean_S,stderr,deviation,mean_S_plus_R\n")
    assert main(["conjecture-probe", "--q", "5", "--h", "0.2", "--paths", "10", "--format", "json", "--out", str(tmp_path / "p")]) == 0
    doc = strict_loads((tmp_path / "p" / "summary.json").read_text())
    assert doc["probe"][0]["h"] == 0.2
    assert not (tmp_path / "p" / "samples.csv").exists()


def test_io_error_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = ExperimentConfig(q=2, h_list=(0.1,), n_paths=2)
    with pytest.raises(OSError, match="file"):
        emit_report(run_experiment(cfg, zero_field), RunManifest("clt", cfg, blocker / "sub", "both"))
