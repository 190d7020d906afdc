from .base import (
    MODEL_SUITES,
    CheckResult,
    CheckStatus,
    OdeParameters,
    RunConfig,
    Suite,
    SuiteContext,
    SuiteName,
)
from .reports import ReportView, format_table, load_run, write_run
from .runner import RunReport, SuiteRunner, run_suites
from .strategies import SUITES, make_suite

__all__ = [
    "MODEL_SUITES",
    "CheckResult",
    "CheckStatus",
    "OdeParameters",
    "RunConfig",
    "Suite",
    "SuiteContext",
    "SuiteName",
    "SUITES",
    "make_suite",
    "ReportView",
    "format_table",
    "load_run",
    "write_run",
    "RunReport",
    "SuiteRunner",
    "run_suites",
]
