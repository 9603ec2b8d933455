import csv
from types import SimpleNamespace

import pytest

from sfdoi_cvrp import cli
from sfdoi_cvrp.instance import to_cvrplib


@pytest.fixture
def t4_file(tmp_path, t4):
    p = tmp_path / "T4-k2.vrp"
    p.write_text(to_cvrplib(t4).replace("NAME : T4", "NAME : T4-k2"))
    return p


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_all_modes(tmp_path, t4_file):
    out = tmp_path / "out"
    code = cli.main(["run", "--instance", str(t4_file), "--ng-size", "1", "--out", str(out)])
    assert code == 0
    trace = _read(out / "trace.csv")
    assert list(trace[0]) == ["instance", "mode", "restart", "iter", "phase", "time_s", "rmp_obj",
                              "lower_bound", "min_rc", "n_cols", "n_active_doi"]
    assert [m for m in ("none", "S", "F", "SF") if any(r["mode"] == m for r in trace)] == \
        ["none", "S", "F", "SF"]
    summary = _read(out / "summary.csv")
    assert [r["instance"] for r in summary] == ["T4-k2", "mean", "median"]
    row = summary[0]
    assert row["values_agree"] == "1"
    vals = {float(row[f"value_{m}"]) for m in ("none", "S", "F", "SF")}
    assert len(vals) == 1
    for m in ("S", "F", "SF"):
        assert float(row[f"speedup_{m}"]) == round(float(row[f"speedup_{m}_raw"]), 1)
        assert float(row[f"speedup_{m}_raw"]) > 0


def test_output_is_deterministic_apart_from_timing(tmp_path, t4_file):
    runs = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        cli.main(["run", "--instance", str(t4_file), "--doi", "none,sf", "--out", str(out)])
        rows = _read(out / "trace.csv")
        runs.append([{k: v for k, v in r.items() if k != "time_s"} for r in rows])
    assert runs[0] == runs[1]


def test_unreadable_instance_is_a_run_error(tmp_path, t4_file):
    code = cli.main(["run", "--instance", str(tmp_path / "missing.vrp"),
                     "--instance", str(t4_file), "--doi", "none", "--out", str(tmp_path)])
    assert code == cli.EXIT_RUN_ERROR
    assert [r["instance"] for r in _read(tmp_path / "summary.csv")][0] == "T4-k2"


def test_value_mismatch_exits_with_certification_failure(tmp_path, t4_file, monkeypatch):
    real = cli.solve

    def skewed(inst, cfg):
        res = real(inst, cfg)
        if cfg.doi_mode == "S":
            res.value += 1.0
        return res

    monkeypatch.setattr(cli, "solve", skewed)
    code = cli.main(["run", "--instance", str(t4_file), "--doi", "none", "--doi", "s",
                     "--out", str(tmp_path)])
    assert code == cli.EXIT_CERT_FAILURE
    row = _read(tmp_path / "summary.csv")[0]
    assert row["values_agree"] == "0" and row["speedup_S"] == "" and row["speedup_S_raw"] == ""


def test_speedup_rounding():
    assert f"{cli.speedup(387, 339):.1f}" == "1.1"


def test_aggregate_rows_mean_and_median():
    fields = ["instance", "iters_none", "speedup_S", "speedup_S_raw"]
    rows = [{"instance": "a", "iters_none": 10, "speedup_S": "1.0", "speedup_S_raw": "1.0"},
            {"instance": "b", "iters_none": 20, "speedup_S": "", "speedup_S_raw": ""},
            {"instance": "c", "iters_none": 60, "speedup_S": "2.0", "speedup_S_raw": "2.0"}]
    mean, median = cli.aggregate_rows(rows, fields)
    assert mean["iters_none"] == "30" and median["iters_none"] == "20"
    assert mean["speedup_S"] == "1.5" and median["speedup_S_raw"] == "1.5"


def test_bad_mode_flag(tmp_path, t4_file):
    assert cli.main(["run", "--instance", str(t4_file), "--doi", "q", "--out",
                     str(tmp_path)]) == cli.EXIT_RUN_ERROR


def test_bundled_selection(tmp_path, monkeypatch):
    seen = []

    def fake(inst, cfg):
        seen.append(inst.name)
        return SimpleNamespace(value=1.0, certified=True, elapsed=1.0, iterations=1, restarts=0,
                               removed_doi=0, trace=SimpleNamespace(rows=[]))

    monkeypatch.setattr(cli, "solve", fake)
    assert cli.main(["run", "--bundled", "P", "--max-customers", "20", "--doi", "none",
                     "--out", str(tmp_path)]) == 0
    assert seen == ["P-n16-k8", "P-n19-k2", "P-n20-k2", "P-n21-k2"]
