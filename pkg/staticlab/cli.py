"""staticlab command line: verify, ode, catalog, report and tensors."""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Annotated

import numpy as np
import typer
from loguru import logger
from pydantic import ValidationError

from .config import LabConfig
from .curvature import (
    bach,
    christoffel,
    cotton,
    d_tensor,
    decomposition_residual,
    ricci_scalar_schouten,
    riemann,
    weyl,
)
from .errors import StaticLabError
from .kobayashi import OdeState, build_catalog, effective_potential, find_periodic_warp, integrate
from .models import load_model
from .statics import unified_residual
from .suites import ReportView, RunConfig, SuiteName, format_table, load_run, run_suites
from .suites.reports import write_csv, write_json

__all__ = ["app", "main"]

app = typer.Typer(
    name="staticlab",
    help="Numerical verification of static spaces, CPE metrics and their level sets.",
    add_completion=False,
    no_args_is_help=True,
    pretty_exceptions_enable=False,
)

TENSORS = ("christoffel", "riemann", "ricci", "schouten", "weyl", "cotton", "bach", "d", "unified")


def configure_logging(debug: bool) -> None:
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if debug else "INFO")


def _lab(debug: bool) -> LabConfig:
    lab = LabConfig.from_env()
    configure_logging(debug or lab.debug)
    return lab


def _tolerance_overrides(items: list[str]) -> dict[str, float]:
    overrides = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise typer.BadParameter(f"expected NAME=VALUE, got {item!r}", param_hint="--tolerance")
        try:
            overrides[name.strip()] = float(value)
        except ValueError as e:
            raise typer.BadParameter(f"{item!r}: {e}", param_hint="--tolerance") from e
    return overrides


def _floats(text: str, option: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as e:
        raise typer.BadParameter(f"expected comma separated numbers, got {text!r}", param_hint=option) from e


@app.command()
def verify(
    model: Annotated[list[str] | None, typer.Option("--model", "-m", help="Model name or YAML path; repeatable")] = None,
    suite: Annotated[list[SuiteName] | None, typer.Option("--suite", "-s", help="Suite to run; repeatable")] = None,
    p: Annotated[list[int] | None, typer.Option("--p", help="Power of f in the integral identities; repeatable")] = None,
    tolerance: Annotated[list[str] | None, typer.Option("--tolerance", "-t", help="NAME=VALUE override")] = None,
    samples: Annotated[int, typer.Option(help="Sample points per check")] = 3,
    heavy_samples: Annotated[int, typer.Option(help="Sample points for fourth-derivative checks")] = 2,
    seed: Annotated[int | None, typer.Option(help="Sampling seed (default STATICLAB_SEED)")] = None,
    quadrature_order: Annotated[int, typer.Option(help="Gauss-Legendre nodes per interval")] = 16,
    output: Annotated[Path | None, typer.Option("--output", "-o", help="Report directory")] = None,
    view: Annotated[ReportView, typer.Option(help="Console table view")] = ReportView.FULL,
    debug: Annotated[bool, typer.Option("--debug", help="Log per-point diagnostics")] = False,
) -> None:
    """Run verification suites over models and write reports."""
    lab = _lab(debug)
    fields = {
        "models": model or [],
        "tolerances": _tolerance_overrides(tolerance or []),
        "samples": samples,
        "heavy_samples": heavy_samples,
        "seed": lab.seed if seed is None else seed,
        "f_min": lab.f_min,
        "quadrature_order": quadrature_order,
        "output_dir": output or lab.output_dir,
    }
    if suite:
        fields["suites"] = suite
    if p:
        fields["p_values"] = p
    config = RunConfig(**fields)

    report = run_suites(config, lab)
    records = [r.to_record() for r in report.results]
    typer.echo(format_table(records, view))
    for r in report.results:
        if "lhs" in r.details and "rhs" in r.details:
            typer.echo(f"{r.model} {r.check}: LHS = {r.details['lhs']:.12g}  RHS = {r.details['rhs']:.12g}")
    summary = report.summary()
    status = "[OK]" if not report.failed else "[ERROR]"
    print(
        f"{status} {summary['passed']} passed, {summary['failed']} failed, "
        f"{summary['skipped']} skipped; reports in {config.output_dir}",
        file=sys.stderr,
    )
    raise typer.Exit(report.exit_code)


@app.command()
def ode(
    n: Annotated[int, typer.Option("--n", help="Dimension")] = 3,
    R: Annotated[float, typer.Option("--R", help="Scalar curvature")] = 6.0,
    a: Annotated[float, typer.Option("--a", help="First integral a")] = 0.9,
    span: Annotated[str, typer.Option("--span", help="Integration span s0,s1")] = "0,10",
    shoot_periodic: Annotated[bool, typer.Option("--shoot-periodic", help="Shoot for a periodic warp")] = False,
    r0: Annotated[float, typer.Option("--r0", help="Initial r")] = 1.0,
    rp0: Annotated[float, typer.Option("--rp0", help="Initial r'")] = 0.0,
    f0: Annotated[float, typer.Option("--f0", help="Initial f")] = 0.0,
    fp0: Annotated[float, typer.Option("--fp0", help="Initial f'")] = 1.0,
    samples: Annotated[int, typer.Option(help="Rows in the trajectory CSV")] = 257,
    output: Annotated[Path | None, typer.Option("--output", "-o", help="Output directory")] = None,
    debug: Annotated[bool, typer.Option("--debug")] = False,
) -> None:
    """Integrate the warp system and write the trajectory CSV and a summary."""
    lab = _lab(debug)
    directory = output or lab.output_dir
    directory.mkdir(parents=True, exist_ok=True)
    potential = effective_potential(n, R, a) if R > 0 else None
    summary: dict[str, object] = {"n": n, "R": R, "a": a}
    if potential is not None:
        summary["potential"] = potential.describe()

    if shoot_periodic:
        warp = find_periodic_warp(n, R, a, r0=r0)
        if warp is None:
            print(f"[ERROR] No periodic warp for n={n}, R={R:g}, a={a:g}", file=sys.stderr)
            raise typer.Exit(1)
        solution = warp.solution
        summary |= {"period": warp.period, "closure": warp.closure, "constant": warp.constant}
    else:
        bounds = _floats(span, "--span")
        if len(bounds) != 2:
            raise typer.BadParameter("expected s0,s1", param_hint="--span")
        solution = integrate(OdeState(bounds[0], r0, rp0, f0, fp0, n, R), (bounds[0], bounds[1]), a=a)
        summary["collapsed"] = solution.collapsed

    drift = solution.drift()
    summary |= {
        "span": list(solution.span),
        "k": solution.k,
        "a_drift": drift.a,
        "k_drift": drift.k,
        "first_integrals_ok": solution.drift_ok(lab.tolerances.first_integrals),
    }
    write_csv(directory / "ode_trajectory.csv", solution.rows(samples))
    write_json(directory / "ode_summary.json", summary)
    print(
        f"[OK] Trajectory over {solution.span}: k = {solution.k:.10g}, drift a {drift.a:.2e}, "
        f"k {drift.k:.2e}; files in {directory}",
        file=sys.stderr,
    )


@app.command()
def catalog(
    name: Annotated[list[str] | None, typer.Option("--name", help="Catalog entry; repeatable")] = None,
    output: Annotated[Path | None, typer.Option("--output", "-o", help="Output directory")] = None,
    debug: Annotated[bool, typer.Option("--debug")] = False,
) -> None:
    """Build and certify the catalog of vacuum static spaces."""
    lab = _lab(debug)
    directory = output or lab.output_dir
    directory.mkdir(parents=True, exist_ok=True)
    entries = build_catalog(name or None, certified=True)
    rows = [entry.to_record(lab.tolerances) for entry in entries]
    columns = ("name", "dimension", "tags", "R", "vacuum_static_residual", "bach_max", "slice_constant_error", "passed")
    table = [{k: ("/".join(row[k]) if k == "tags" else row.get(k)) for k in columns} for row in rows]
    widths = {k: max(len(k), *(len(_text(r[k])) for r in table)) for k in columns}
    typer.echo("  ".join(k.ljust(widths[k]) for k in columns))
    for r in table:
        typer.echo("  ".join(_text(r[k]).ljust(widths[k]) for k in columns))
    write_csv(directory / "catalog.csv", rows)
    write_json(directory / "catalog.json", rows)
    failed = [row["name"] for row in rows if not row["passed"]]
    if failed:
        print(f"[ERROR] Certification failed for {failed}", file=sys.stderr)
        raise typer.Exit(1)
    print(f"[OK] Certified {len(rows)} catalog entries; files in {directory}", file=sys.stderr)


def _text(value: object) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.3e}"
    return str(value)


@app.command()
def report(
    directory: Annotated[Path | None, typer.Argument(help="Report directory")] = None,
    view: Annotated[ReportView, typer.Option(help="Table view")] = ReportView.FULL,
    debug: Annotated[bool, typer.Option("--debug")] = False,
) -> None:
    """Aggregate the check records of a previous run."""
    lab = _lab(debug)
    records = load_run(directory or lab.output_dir)
    typer.echo(format_table(records, view))
    failed = sum(r.get("status") == "failed" for r in records)
    suites = sorted({r["suite"] for r in records})
    print(f"[OK] {len(records)} checks across suites {suites}; {failed} failed", file=sys.stderr)
    raise typer.Exit(1 if failed else 0)


@app.command()
def tensors(
    model: Annotated[str, typer.Option("--model", "-m", help="Model name or YAML path")],
    point: Annotated[str, typer.Option("--point", help="Comma separated coordinates")],
    tensor: Annotated[list[str] | None, typer.Option("--tensor", help="Tensor name, e.g. riemann, weyl, bach or d; repeatable")] = None,
    debug: Annotated[bool, typer.Option("--debug")] = False,
) -> None:
    """Dump tensors at one point as JSON records."""
    lab = _lab(debug)
    static = load_model(model, lab.models_path)
    x = np.array(_floats(point, "--point"))
    if x.shape != (static.dimension,):
        raise typer.BadParameter(f"expected {static.dimension} coordinates", param_hint="--point")
    requested = tensor or ["riemann"]
    unknown = sorted(set(requested) - set(TENSORS))
    if unknown:
        raise typer.BadParameter(f"unknown tensor(s) {unknown}; choose from {list(TENSORS)}", param_hint="--tensor")
    metric = static.metric
    builders = {
        "christoffel": lambda: christoffel(metric, x),
        "riemann": lambda: riemann(metric, x),
        "ricci": lambda: ricci_scalar_schouten(metric, x)[0],
        "schouten": lambda: ricci_scalar_schouten(metric, x)[2],
        "weyl": lambda: weyl(metric, x),
        "cotton": lambda: cotton(metric, x),
        "bach": lambda: bach(metric, x),
        "d": lambda: d_tensor(metric, static.f, x),
        "unified": lambda: unified_residual(static, x),
    }
    for name in requested:
        value = builders[name]()
        record = {
            "metric": metric.name,
            "point": x.tolist(),
            **value.to_record(),
            "residuals": {
                "symmetry_defect": value.symmetry_defect(),
                "decomposition": decomposition_residual(metric, x),
                "max_abs": value.max_abs(),
            },
        }
        typer.echo(json.dumps(record))


def main(argv: list[str] | None = None) -> int:
    """Console entry point; usage and configuration errors exit with status 2."""
    try:
        app(args=argv, standalone_mode=True)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else (0 if e.code is None else 2)
    except ValidationError as e:
        print(f"[ERROR] Invalid run configuration: {e}", file=sys.stderr)
        return 2
    except (StaticLabError, ValueError) as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
