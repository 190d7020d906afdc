import json

import pytest

from staticlab.cli import main


@pytest.fixture(autouse=True)
def quiet_env(monkeypatch):
    for name in ("THREADS", "DEBUG", "OUTPUT_DIR", "MODELS_PATH", "F_MIN", "SEED"):
        monkeypatch.delenv(f"STATICLAB_{name}", raising=False)


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--bogus"],
        ["verify", "--suite", "statics"],
        ["verify", "--model", "nowhere", "--suite", "statics"],
        ["verify", "--model", "s3", "--tolerance", "bach"],
        ["verify", "--model", "s3", "--tolerance", "bogus=1"],
        ["verify", "--model", "s3", "--p", "1"],
    ],
)
def test_usage_errors_exit_with_two(argv, tmp_path):
    assert main([*argv, "--output", str(tmp_path)]) == 2


@pytest.mark.parametrize("command", ["verify", "ode", "catalog", "report", "tensors"])
def test_unknown_option_is_a_usage_error(command, capsys):
    assert main([command, "--no-such-flag"]) == 2
    assert "--no-such-flag" in capsys.readouterr().err


def test_unknown_command_is_a_usage_error():
    assert main(["integrate-everything"]) == 2


def test_verify_writes_reports(tmp_path, capsys):
    code = main(
        ["verify", "-m", "s3", "-s", "statics", "--samples", "2", "--heavy-samples", "1", "-o", str(tmp_path)]
    )
    assert code == 0
    assert (tmp_path / "checks.jsonl").exists()
    assert "unified_residual" in capsys.readouterr().out


def test_report_of_a_missing_directory(tmp_path):
    assert main(["report", str(tmp_path / "missing")]) == 2


def test_report_of_a_previous_run(tmp_path, capsys):
    main(["verify", "-m", "s3", "-s", "statics", "--samples", "2", "--heavy-samples", "1", "-o", str(tmp_path)])
    capsys.readouterr()
    assert main(["report", str(tmp_path), "--view", "compact"]) == 0
    assert "trace_identity" in capsys.readouterr().out


def test_ode_shooting_writes_a_trajectory(tmp_path):
    assert main(["ode", "--shoot-periodic", "-o", str(tmp_path)]) == 0
    rows = (tmp_path / "ode_trajectory.csv").read_text().splitlines()
    assert rows[0].startswith("s,")
    summary = json.loads((tmp_path / "ode_summary.json").read_text())
    assert summary["k"] == pytest.approx(2.8, abs=1e-9)
    assert summary["first_integrals_ok"] is True


def test_ode_without_a_well_fails(tmp_path):
    assert main(["ode", "--shoot-periodic", "--a", "0", "-o", str(tmp_path)]) == 1


def test_ode_rejects_a_bad_span(tmp_path):
    assert main(["ode", "--span", "0,1,2", "-o", str(tmp_path)]) == 2


def test_catalog_certifies_selected_entries(tmp_path, capsys):
    assert main(["catalog", "--name", "s3", "--name", "s1xs2", "-o", str(tmp_path)]) == 0
    table = capsys.readouterr().out.splitlines()
    assert table[0].split()[:3] == ["name", "dimension", "tags"]
    assert len(table) == 3
    rows = json.loads((tmp_path / "catalog.json").read_text())
    assert [row["name"] for row in rows] == ["s3", "s1xs2"]
    assert (tmp_path / "catalog.csv").exists()


def test_unknown_catalog_entry(tmp_path):
    assert main(["catalog", "--name", "s7", "-o", str(tmp_path)]) == 2


def test_tensors_prints_json_records(capsys):
    code = main(["tensors", "-m", "s3", "--point", "1.0,1.2,0.7", "--tensor", "riemann", "--tensor", "weyl"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    riemann, weyl = (json.loads(line) for line in lines)
    assert riemann["point"] == [1.0, 1.2, 0.7]
    assert len(riemann["components"]) == 3
    assert riemann["residuals"]["decomposition"] < 1e-8
    assert weyl["residuals"]["max_abs"] < 1e-8


@pytest.mark.parametrize(
    "argv",
    [
        ["tensors", "-m", "s3", "--point", "1.0,1.2"],
        ["tensors", "-m", "s3", "--point", "1.0,1.2,0.7", "--tensor", "einstein"],
        ["tensors", "-m", "s3", "--point", "1.0,x,0.7"],
    ],
)
def test_tensors_rejects_bad_input(argv):
    assert main(argv) == 2
