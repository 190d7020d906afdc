"""Runs the selected suites over the selected models on a bounded worker pool."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import anyio
import anyio.to_thread
from loguru import logger

from ..config import LabConfig
from ..models import load_model
from ..statics import StaticModel
from .base import MODEL_SUITES, CheckResult, RunConfig, SuiteContext, SuiteName
from .reports import summarize, write_run
from .strategies import make_suite

__all__ = ["RunReport", "SuiteRunner", "run_suites"]


@dataclass
class RunReport:
    results: list[CheckResult]
    artifacts: dict[str, list[dict[str, Any]]]
    files: list[Path] = field(default_factory=list)

    @property
    def failed(self) -> list[CheckResult]:
        return [r for r in self.results if r.failed]

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0

    def summary(self) -> dict[str, Any]:
        return summarize(self.results)


@dataclass(frozen=True)
class _Task:
    index: int
    suite: SuiteName
    model: StaticModel | None


class SuiteRunner:
    """Schedules (model, suite) tasks; results are gathered back in task order."""

    def __init__(self, config: RunConfig, lab: LabConfig | None = None) -> None:
        self.config = config
        self.lab = lab or LabConfig()
        self.context = SuiteContext.from_config(config)

    def load_models(self) -> list[StaticModel]:
        return [load_model(ref, self.lab.models_path) for ref in self.config.models]

    def plan(self, models: list[StaticModel]) -> list[_Task]:
        tasks: list[_Task] = []
        for suite in self.config.suites:
            targets: list[StaticModel | None] = list(models) if suite in MODEL_SUITES else [None]
            for model in targets:
                tasks.append(_Task(len(tasks), suite, model))
        return tasks

    def _execute(self, task: _Task) -> tuple[list[CheckResult], dict[str, list[dict[str, Any]]]]:
        suite = make_suite(task.suite, self.context)
        label = task.model.name if task.model is not None else "-"
        logger.debug(f"Running {task.suite.value} on {label}")
        results = suite.run(task.model)
        failed = sum(r.failed for r in results)
        logger.info(f"{task.suite.value} on {label}: {len(results)} checks, {failed} failed")
        return results, suite.artifacts

    async def run(self) -> RunReport:
        models = self.load_models()
        tasks = self.plan(models)
        limiter = anyio.CapacityLimiter(self.lab.threads)
        outcomes: dict[int, tuple[list[CheckResult], dict[str, list[dict[str, Any]]]]] = {}
        lock = anyio.Lock()

        async def worker(task: _Task) -> None:
            outcome = await anyio.to_thread.run_sync(self._execute, task, limiter=limiter)
            async with lock:
                outcomes[task.index] = outcome

        async with anyio.create_task_group() as tg:
            for task in tasks:
                tg.start_soon(worker, task)

        results: list[CheckResult] = []
        artifacts: dict[str, list[dict[str, Any]]] = {}
        for index in sorted(outcomes):
            task_results, task_artifacts = outcomes[index]
            results.extend(task_results)
            for stem, rows in task_artifacts.items():
                artifacts.setdefault(stem, []).extend(rows)

        report = RunReport(results, artifacts)
        record = self.config.model_dump(mode="json") | {"threads": self.lab.threads}
        report.files = write_run(self.config.output_dir, results, artifacts, record)
        return report


def run_suites(config: RunConfig, lab: LabConfig | None = None) -> RunReport:
    """Blocking entry point around SuiteRunner.run."""
    runner = SuiteRunner(config, lab)
    return anyio.run(runner.run)
