import json
import subprocess
import sys

import pytest

from seqtrial.cli import main, read_design_csv
from seqtrial.config import hypothetical_document


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "trial.json"
    path.write_text(json.dumps(hypothetical_document()))
    return path


def _variant(tmp_path, name, edit):
    d = hypothetical_document()
    edit(d)
    path = tmp_path / name
    path.write_text(json.dumps(d))
    return path


def test_design_table(cfg_path, tmp_path, capsys):
    assert main(["design", "--config", str(cfg_path), "--out", str(tmp_path / "out")]) == 0
    text = capsys.readouterr().out
    lines = {ln.split()[0]: ln.split() for ln in text.splitlines() if ln.strip()}
    assert lines["IA1"][1:5] == ["0.33", "129", "19.8", "1"]
    assert lines["IA2"][1:] == ["0.67", "257", "35.7", "0.9", "0.012", "0.731"]
    assert lines["Primary"][1:] == ["1.00", "385", "55.0", "0.046", "0.816"]
    assert lines["Updated"][1:] == ["500", "76.4"]
    header = (tmp_path / "out" / "design.csv").read_text().splitlines()[0]
    assert header.startswith("label,information_fraction,target_events,predicted_month,futility_hr,"
                             "nominal_alpha_2sided,efficacy_z,efficacy_hr")


def test_design_csv_round_trip(cfg_path, tmp_path, config, table):
    assert main(["design", "--config", str(cfg_path), "--out", str(tmp_path)]) == 0
    assert read_design_csv(tmp_path / "design.csv", config) == table


def test_fixed_design_config(tmp_path, capsys):
    def edit(d):
        d["design"]["analyses"] = [{"label": "Primary", "information_fraction": 1.0, "efficacy": True}]
    path = _variant(tmp_path, "fixed.json", edit)
    assert main(["design", "--config", str(path), "--format", "csv"]) == 0
    rows = [r for r in capsys.readouterr().out.splitlines()[1:] if not r.startswith("Updated")]
    assert len(rows) == 1 and rows[0].split(",")[2] == "380"


def test_invalid_config_exit_code(tmp_path, capsys):
    path = _variant(tmp_path, "bad.json", lambda d: d["design"].update(alpha_one_sided=0.5))
    assert main(["design", "--config", str(path)]) == 2
    assert "alpha_one_sided" in capsys.readouterr().err
    assert main(["design", "--config", str(tmp_path / "missing.json")]) == 2


def test_timing(cfg_path, tmp_path, capsys):
    assert main(["design", "--config", str(cfg_path), "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    assert main(["timing", "--config", str(cfg_path), "--design", str(tmp_path / "design.csv"),
                 "--format", "csv", "--out", str(tmp_path)]) == 0
    rows = [r.split(",") for r in capsys.readouterr().out.splitlines()]
    assert rows[0] == ["analysis", "target_events", "predicted_month", "predicted_date", "minimal_followup_months"]
    assert rows[1][0] == "IA1" and abs(float(rows[1][2]) - 19.7) < 0.3
    assert rows[1][3].startswith("2021-12")


def test_timing_without_first_patient_in(tmp_path, capsys):
    path = _variant(tmp_path, "nofpi.json", lambda d: d["reporting"].pop("first_patient_in_date"))
    assert main(["timing", "--config", str(path), "--format", "csv"]) == 0
    assert all(r.split(",")[3] == "" for r in capsys.readouterr().out.splitlines()[1:])


def test_zero_dropout_is_earlier(cfg_path, tmp_path, capsys):
    path = _variant(tmp_path, "nodrop.json", lambda d: d["dropout"].update(annual_rate=0.0))
    main(["timing", "--config", str(cfg_path), "--format", "csv"])
    base = capsys.readouterr().out.splitlines()[1:]
    main(["timing", "--config", str(path), "--format", "csv"])
    nodrop = capsys.readouterr().out.splitlines()[1:]
    assert all(n.split(",")[3] < b.split(",")[3] for n, b in zip(nodrop, base))


def test_monitor_flow(cfg_path, tmp_path, capsys):
    course = tmp_path / "course.json"
    assert main(["monitor", "--course", str(course), "--init", "--config", str(cfg_path)]) == 0
    assert main(["monitor", "--course", str(course), "--label", "IA2", "--ccod", "2023-04-10",
                 "--ssd", "2023-05-29", "--events", "255", "--hr", "0.689"]) == 0
    out = capsys.readouterr().out
    assert "HR 0.7294" in out and "0.011771 (2-sided)" in out
    assert "decision: stop_efficacy" in out and "IA2: confirmatory_analysis" in out
    assert main(["monitor", "--course", str(course), "--label", "Primary", "--ccod", "2024-11-01",
                 "--events", "385", "--hr", "0.7"]) == 3
    assert main(["report", "--course", str(course)]) == 0
    assert "Confirmatory analysis" in capsys.readouterr().out


def test_monitor_futility(cfg_path, tmp_path, capsys):
    course = tmp_path / "course.json"
    main(["monitor", "--course", str(course), "--init", "--config", str(cfg_path),
          "--label", "IA1", "--ccod", "2021-11-01", "--events", "132", "--hr", "1.07"])
    assert "decision: stop_futility" in capsys.readouterr().out
    assert json.loads(course.read_text())["hypothesis_state"] == "abandoned_futility"


def test_delayed_primary_exit_code(cfg_path, tmp_path):
    course = tmp_path / "course.json"
    main(["monitor", "--course", str(course), "--init", "--config", str(cfg_path)])
    assert main(["monitor", "--course", str(course), "--label", "Primary", "--ccod", "2026-01-01",
                 "--events", "470", "--hr", "0.8"]) == 3


def test_report_lint_exit_code(tmp_path):
    def edit(d):
        d["reporting"]["endpoint"] = "final analysis of survival"
    cfg = _variant(tmp_path, "ep.json", edit)
    course = tmp_path / "course.json"
    main(["monitor", "--course", str(course), "--init", "--config", str(cfg), "--label", "IA1",
          "--ccod", "2021-11-01", "--events", "132", "--hr", "1.07"])
    assert main(["report", "--course", str(course)]) == 3


def test_simulate_is_byte_deterministic(cfg_path, tmp_path, capsys):
    args = ["simulate", "--config", str(cfg_path), "--trials", "300", "--seed", "9", "--hr-true", "0.8",
            "--honor-futility", "false", "--per-trial"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("oc.json", "trials.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    oc = json.loads((tmp_path / "a" / "oc.json").read_text())
    assert oc["honor_futility"] is False and oc["n_trials"] == 300
    assert sum(oc["futility_stop_probability"].values()) == 0.0


def test_simulate_csv_format(cfg_path, capsys):
    assert main(["simulate", "--config", str(cfg_path), "--trials", "50", "--format", "csv"]) == 0
    header, row = capsys.readouterr().out.splitlines()
    assert "rejection_probability" in header.split(",") and len(header.split(",")) == len(row.split(","))


def test_bad_boolean_flag(cfg_path):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--config", str(cfg_path), "--honor-futility", "maybe"])
    assert exc.value.code == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "seqtrial", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "simulate" in res.stdout
