import json

import pytest

from staticlab.config import LabConfig
from staticlab.errors import PreconditionError, StaticLabError
from staticlab.suites import (
    CheckResult,
    CheckStatus,
    ReportView,
    RunConfig,
    SuiteContext,
    SuiteName,
    format_table,
    load_run,
    make_suite,
    run_suites,
    write_run,
)
from staticlab.suites.reports import report_stem, summarize, write_csv


@pytest.fixture
def context():
    return SuiteContext(samples=2, heavy_samples=1, seed=3)


@pytest.mark.parametrize("name", [SuiteName.CURVATURE, SuiteName.STATICS])
def test_model_suites_pass_on_the_sphere(name, context, s3):
    suite = make_suite(name, context)
    results = suite.run(s3)
    assert results
    assert all(r.suite == name.value and r.model == "s3" for r in results)
    assert not [r.to_record() for r in results if r.failed]


def test_three_dimensional_models_skip_the_weyl_route(context, s3):
    results = make_suite(SuiteName.CURVATURE, context).run(s3)
    (routes,) = [r for r in results if r.check == "bach_routes"]
    assert routes.status is CheckStatus.SKIPPED
    assert "n >= 4" in routes.details["reason"]


def test_levelset_suite_skips_chart_models(context, flat_t3):
    (result,) = make_suite(SuiteName.LEVELSET, context).run(flat_t3)
    assert result.status is CheckStatus.SKIPPED


def test_guarded_turns_preconditions_into_skips(context):
    suite = make_suite(SuiteName.STATICS, context)

    def unmet():
        raise PreconditionError("needs a closed manifold")

    (result,) = suite.guarded(None, "closed_identities", unmet)
    assert result.status is CheckStatus.SKIPPED
    assert result.model == "-"
    assert result.details == {"reason": "needs a closed manifold"}


def test_check_compares_against_the_tolerance(context, s3):
    suite = make_suite(SuiteName.CURVATURE, context)
    assert suite.check(s3, "x", 1e-9, 1e-8).status is CheckStatus.PASSED
    failed = suite.check(s3, "x", 1e-7, 1e-8, point=[0.0])
    assert failed.failed
    record = failed.to_record()
    assert record["passed"] is False
    assert record["status"] == "failed"
    assert record["details"] == {"point": [0.0]}


def test_report_stem():
    assert report_stem("s3", "statics") == "s3.statics"
    assert report_stem("-", "ode") == "ode"


def _results():
    return [
        CheckResult("statics", "s3", "unified_residual", CheckStatus.PASSED, 1e-12, 1e-6),
        CheckResult("statics", "s3", "d_routes", CheckStatus.FAILED, 1e-3, 1e-5),
        CheckResult("ode", "-", "periodic_warp", CheckStatus.SKIPPED, details={"reason": "no well"}),
    ]


def test_summary_counts_statuses():
    summary = summarize(_results())
    assert summary["checks"] == 3
    assert (summary["passed"], summary["failed"], summary["skipped"]) == (1, 1, 1)
    assert summary["failures"] == ["s3/statics/d_routes"]
    assert summary["suites"]["statics"] == {"passed": 1, "failed": 1}


def test_write_and_load_a_run(tmp_path):
    artifacts = {"ode_trajectory": [{"s": 0.0, "r": 1.0}], "empty": []}
    written = write_run(tmp_path, _results(), artifacts, {"seed": 0})
    names = {path.name for path in written}
    assert names == {"checks.jsonl", "s3.statics.json", "ode.json", "ode_trajectory.csv", "summary.json"}
    report = json.loads((tmp_path / "s3.statics.json").read_text())
    assert report["passed"] is False
    assert len(report["checks"]) == 2
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config"] == {"seed": 0}
    records = load_run(tmp_path)
    assert [r["check"] for r in records] == ["unified_residual", "d_routes", "periodic_warp"]


def test_load_run_needs_a_report_directory(tmp_path):
    with pytest.raises(StaticLabError, match="checks.jsonl"):
        load_run(tmp_path)
    (tmp_path / "checks.jsonl").write_text("{not json\n", encoding="utf-8")
    with pytest.raises(StaticLabError, match="malformed"):
        load_run(tmp_path)


def test_non_finite_values_are_written_as_strings(tmp_path):
    result = CheckResult("statics", "s3", "blowup", CheckStatus.FAILED, float("inf"), 1.0)
    write_run(tmp_path, [result], {}, {})
    (record,) = load_run(tmp_path)
    assert record["value"] == "inf"


def test_csv_columns_are_the_union_of_keys(tmp_path):
    path = write_csv(tmp_path / "rows.csv", [{"a": 1}, {"b": 2, "a": 3}])
    lines = path.read_text().splitlines()
    assert lines[0] == "a,b"
    assert lines[1:] == ["1,", "3,2"]


def test_table_views():
    records = [r.to_record() for r in _results()]
    full = format_table(records, ReportView.FULL)
    assert "tolerance" in full.splitlines()[0]
    assert len(full.splitlines()) == 2 + 3
    compact = format_table(records, ReportView.COMPACT)
    assert "value" not in compact.splitlines()[0]
    failed = format_table(records, ReportView.FAILED).splitlines()
    assert len(failed) == 3
    assert "d_routes" in failed[2]


def test_run_suites_writes_reports(tmp_path):
    config = RunConfig(
        models=["s3"], suites=["statics"], samples=2, heavy_samples=1, output_dir=tmp_path
    )
    report = run_suites(config, LabConfig(threads=2))
    assert report.exit_code == 0
    assert report.results
    for name in ("checks.jsonl", "s3.statics.json", "summary.json"):
        assert (tmp_path / name).exists()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config"]["threads"] == 2
    assert summary["failed"] == 0
