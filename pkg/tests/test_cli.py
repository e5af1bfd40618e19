from __future__ import annotations

import csv
import json

import pytest

from swinglab.cli import main, parse_range
from swinglab.energy_analysis import analyze_trace
from swinglab.fileio import CSV_COLUMNS, read_scenario
from swinglab.scenario_lab import builtin_case, list_cases
from swinglab.simulator import run_simulation

ORDER = {"Stable": 0, "Unstable": 1}


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "c1"
    assert main(["run", "--case", "1", "--variant", "0", "--out", str(out)]) == 0
    for name in ("trace.csv", "phase.csv", "summary.json", "cycles.json", "scenario.toml"):
        assert (out / name).exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["outcome"] == "Stable"
    # accelerating first swing
    assert summary["swings"][0]["direction"] == "AngleIncreasing"
    assert read_scenario(out / "scenario.toml") == builtin_case(1, 0)
    assert "Stable" in capsys.readouterr().out


@pytest.mark.parametrize("row", list_cases(), ids=lambda r: f"case{r['case']}-{r['variant']}")
def test_exit_status_contract(tmp_path, row):
    out = tmp_path / "o"
    code = main(["run", "--case", str(row["case"]), "--variant", str(row["variant"]),
                 "--out", str(out), "--no-phase"])
    summary = json.loads((out / "summary.json").read_text())
    assert code == (2 if summary["outcome"] == "Unstable" else 0)


@pytest.mark.xfail(strict=True, reason="reduced model keeps Case 7 stable at D = 10; "
                                        "see acceptance criterion 7")
def test_case7_slow_recovery_exit_unstable(tmp_path):
    out = tmp_path / "c7"
    assert main(["run", "--case", "7", "--variant", "1", "--out", str(out)]) == 2
    assert json.loads((out / "summary.json").read_text())["instability_swing_index"] == 3


def test_missing_scenario_file(tmp_path, capsys):
    missing = tmp_path / "absent.toml"
    assert main(["run", "--scenario", str(missing), "--out", str(tmp_path / "o")]) == 1
    assert str(missing) in capsys.readouterr().err


def test_scenario_file_with_overrides(tmp_path):
    out = tmp_path / "o"
    main(["run", "--case", "2", "--out", str(out), "--t-end", "1.0"])
    code = main(["run", "--scenario", str(out / "scenario.toml"), "--dt", "0.002",
                 "--out", str(tmp_path / "o2")])
    assert code == 0
    rows = _rows(tmp_path / "o2" / "trace.csv")
    assert len(rows) == 501 and float(rows[-1]["t_s"]) == 1.0


def test_bad_scenario_file_diagnostic(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("t_end_s = 1.0\nfault.r_f = 3.0\n")
    assert main(["run", "--scenario", str(path), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "line 2" in err and "fault.r_f" in err


def test_analyze_matches_in_memory(tmp_path):
    out = tmp_path / "c6"
    main(["run", "--case", "6", "--variant", "1", "--out", str(out), "--t-end", "4.0"])
    assert main(["analyze", str(out / "trace.csv"), "--out", str(tmp_path / "an")]) == 0
    tr = run_simulation(builtin_case(6, 1, t_end=4.0))
    mem = analyze_trace(tr, tr.energy_ref, tr.equilibrium.delta_uep)
    verdict = json.loads((tmp_path / "an" / "verdict.json").read_text())
    assert verdict == json.loads(json.dumps(mem.verdict.to_dict()))
    cyc = json.loads((tmp_path / "an" / "cycles.json").read_text())
    assert len(cyc) == len(mem.cycles)
    for stored, report in zip(cyc, mem.cycles):
        for key in ("dv_total", "dv_w", "dv_d", "mvt_1", "mvt_2"):
            assert abs(stored[key] - getattr(report, key)) <= 1e-12


def test_analyze_missing_column(tmp_path, capsys):
    path = tmp_path / "trace.csv"
    path.write_text(",".join(c for c in CSV_COLUMNS if c != "p_w_pu") + "\n")
    assert main(["analyze", str(path)]) == 1
    assert "p_w_pu" in capsys.readouterr().err


def test_analyze_infers_reference(tmp_path):
    out = tmp_path / "c2"
    main(["run", "--case", "2", "--out", str(out), "--t-end", "3.0"])
    (out / "summary.json").unlink()
    assert main(["analyze", str(out / "trace.csv")]) == 0
    assert json.loads((out / "verdict.json").read_text())["outcome"] == "Stable"


@pytest.mark.parametrize("text, n", [("0.2:2.0:0.2", 10), ("0:1:0.1", 11), ("0.4,inf", 2)])
def test_parse_range(text, n):
    values = parse_range(text)
    assert len(values) == n
    assert values[0] == float(text.replace(":", ",").split(",")[0])


@pytest.mark.parametrize("text", ["1:0:0.1", "0:1:0", "", "0:1"])
def test_parse_range_rejects(text):
    with pytest.raises(ValueError):
        parse_range(text)


def test_sweep_rate_grid(tmp_path):
    out = tmp_path / "sw"
    code = main(["sweep", "--case", "7", "--variant", "1", "--rate", "0.2:2.0:0.2",
                 "--t-end", "1.0", "--workers", "1", "--out", str(out)])
    assert code == 0
    rows = _rows(out / "map.csv")
    assert len(rows) == 10
    assert [float(r["recovery_rate"]) for r in rows] == pytest.approx(
        [0.2 * k for k in range(1, 11)])
    assert len(json.loads((out / "map.json").read_text())["cells"]) == 10


def test_sweep_sigma_direction(tmp_path):
    out = tmp_path / "sw"
    main(["sweep", "--case", "2", "--sigma", "0:0.4:0.1", "--t-end", "3.0",
          "--workers", "1", "--out", str(out)])
    rows = _rows(out / "map.csv")
    outcomes = [ORDER[r["outcome"]] for r in rows]
    # lowering sigma never improves the verdict and raises the peak energy
    assert outcomes == sorted(outcomes, reverse=True)
    peaks = [float(r["max_v_pu"]) for r in rows]
    assert all(a > b for a, b in zip(peaks, peaks[1:]))


def test_sweep_errors(tmp_path):
    assert main(["sweep", "--case", "7", "--rate", "1:0:0.1", "--out", str(tmp_path)]) == 1
    assert main(["sweep", "--case", "7", "--out", str(tmp_path)]) == 1
    assert main(["run", "--case", "9", "--out", str(tmp_path)]) == 1


def test_list_cases(capsys):
    assert main(["list-cases", "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 14 and rows[-1]["recovery_rate"] == 0.4
