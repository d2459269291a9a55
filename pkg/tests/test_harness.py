import csv
import json

import pytest

from drcbl.cli import main
from drcbl.harness import (
    RESULTS_HEADER,
    ExperimentSpec,
    compare,
    read_results,
    run_benchmark,
)
from drcbl.metrics import aggregate


def spec_for(tmp_path, **kw):
    base = dict(
        problem="synthq-2",
        dims=(2, 2),
        runs=3,
        results_path=str(tmp_path / "r.csv"),
        summary_path=str(tmp_path / "s.json"),
        trace_path=str(tmp_path / "t.csv"),
    )
    base.update(kw)
    return ExperimentSpec(**base)


def test_files_and_row_contract(tmp_path):
    out = run_benchmark(spec_for(tmp_path, seed0=4))
    rows = read_results(tmp_path / "r.csv")
    assert [r["seed"] for r in rows] == [4, 5, 6]
    with open(tmp_path / "r.csv") as fh:
        assert next(csv.reader(fh)) == list(RESULTS_HEADER)
    for r in rows:
        assert r["fes_total"] == r["fes_u"] + r["fes_l"]
        assert r["acc_u"] >= 1e-6 and r["acc_l"] >= 1e-6
    summary = json.loads((tmp_path / "s.json").read_text())
    for name in ("acc_u", "fes_total", "upper_gens"):
        med, iqr = aggregate([r[name] for r in rows])
        assert abs(summary["metrics"][name]["median"] - med) <= 1e-12
        assert abs(summary["metrics"][name]["iqr"] - iqr) <= 1e-12
    trace_rows = (tmp_path / "t.csv").read_text().splitlines()[1:]
    assert len(trace_rows) == summary["trace_run"]["executions"] == out.records[0].executions
    assert "unpaired" in summary["significance_test"]


def test_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    run_benchmark(spec_for(a, problem="smd1", dims=(2, 3), runs=2))
    run_benchmark(spec_for(b, problem="smd1", dims=(2, 3), runs=2))
    for name in ("r.csv", "t.csv", "s.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_parallel_matches_serial(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    run_benchmark(spec_for(a, runs=3))
    run_benchmark(spec_for(b, runs=3, jobs=2))
    assert (a / "r.csv").read_bytes() == (b / "r.csv").read_bytes()
    assert (a / "t.csv").read_bytes() == (b / "t.csv").read_bytes()


def test_wall_time_opt_in(tmp_path):
    out = run_benchmark(spec_for(tmp_path, runs=1, record_wall_time=True))
    assert out.records[0].wall_s > 0
    assert "wall_s" in out.summary["metrics"]


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec("smd1", (2, 3), runs=0)
    with pytest.raises(ValueError):
        ExperimentSpec("smd1", (2, 3), algo="bleaq")


def test_bad_outputs_and_ids(tmp_path):
    with pytest.raises(FileNotFoundError):
        run_benchmark(spec_for(tmp_path, results_path=str(tmp_path / "missing" / "r.csv")))
    with pytest.raises(KeyError):
        run_benchmark(spec_for(tmp_path, problem="tp3"))


def test_overrides_reach_the_solver(tmp_path):
    out = run_benchmark(spec_for(tmp_path, runs=1, overrides={"fes_u_max": 40}))
    assert out.records[0].fes_u <= 40 + 4


def test_compare_labels_unpaired(tmp_path):
    rows_a = [{"fes_total": v} for v in (1, 2, 3)]
    rows_b = [{"fes_total": v} for v in (10, 11, 12)]
    res = compare(rows_a, rows_b)
    assert res["p_value"] == pytest.approx(0.1)
    assert "unpaired" in res["test"]


def test_cli_run_and_compare(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gamma": 0.4, "alpha": 0.6, "cic_normalize": True}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", "--problem", "synthq-2", "--dims", "2,2", "--runs", "2", "--out", str(a),
                 "--config", str(cfg)]) == 0
    assert main(["run", "--problem", "synthq-2", "--dims", "2,2", "--algo", "nested", "--runs", "2",
                 "--out", str(b), "--summary", str(tmp_path / "s.json"), "--trace", str(tmp_path / "t.csv")]) == 0
    capsys.readouterr()
    assert main(["compare", str(a), str(b)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["metric"] == "fes_total" and 0 <= printed["p_value"] <= 1


def test_cli_errors(tmp_path, capsys):
    assert main(["run", "--problem", "nope", "--dims", "2,3", "--runs", "1"]) == 2
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"not_a_key": 1}))
    assert main(["run", "--problem", "smd1", "--dims", "2,3", "--config", str(cfg)]) == 2
    with pytest.raises(SystemExit):
        main(["run", "--problem", "smd1", "--dims", "2x3"])
