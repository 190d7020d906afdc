"""Build StaticModels from validated definitions, and serialize them back."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any

import numpy as np
import sympy as sp
from loguru import logger

from .errors import ModelConfigError, StaticLabError
from .geometry.chart import Chart
from .geometry.fibers import FiberKind, FiberSpec
from .geometry.metric import make_chart_metric, make_scalar_field
from .geometry.warped import make_doubly_warped_product, make_warped_product
from .kobayashi import build_catalog, find_periodic_warp, periodic_warp_model
from .schema import SCHEMA_VERSION, ModelDefinition, load_model_file, validate_definition
from .statics import (
    ModelKind,
    StaticModel,
    manufacture_static_doubly_warped,
    manufacture_static_warped,
)

__all__ = [
    "BUILTIN_MODELS",
    "builtin_model_names",
    "resolve_definition",
    "build_model",
    "load_model",
    "model_levels",
    "dump_model",
    "restore_model",
]

BUILTIN_MODELS = Path(__file__).parent / "models"
TABLE_TOLERANCE = 1e-10


def builtin_model_names(extra: Path | None = None) -> list[str]:
    names = {p.stem for p in BUILTIN_MODELS.glob("*.yaml")}
    if extra is not None and extra.is_dir():
        names.update(p.stem for p in extra.glob("*.yaml"))
    return sorted(names)


def resolve_definition(reference: str, extra: Path | None = None) -> ModelDefinition:
    """A model reference is a path to a YAML file or the name of a known model."""
    candidate = Path(reference)
    if candidate.suffix in {".yaml", ".yml"} or candidate.exists():
        return load_model_file(candidate)
    for directory in (extra, BUILTIN_MODELS):
        if directory is None:
            continue
        path = directory / f"{reference}.yaml"
        if path.exists():
            return load_model_file(path)
    raise ModelConfigError(
        f"Unknown model '{reference}'. Known models: {builtin_model_names(extra)}"
    )


def _fiber(spec: dict[str, Any]) -> FiberSpec:
    kind = FiberKind(spec["kind"])
    radius = float(spec.get("radius", 1.0))
    match kind:
        case FiberKind.SPHERE:
            return FiberSpec.sphere(int(spec.get("dimension", 2)), radius)
        case FiberKind.TORUS:
            return FiberSpec.torus(int(spec.get("dimension", 2)), float(spec.get("length", 2 * math.pi)))
        case FiberKind.HYPERBOLIC:
            window = tuple(spec.get("window", (-1.0, 1.0)))
            return FiberSpec.hyperbolic(int(spec.get("dimension", 2)), radius, window)
        case FiberKind.SPHERE_PRODUCT:
            return FiberSpec.sphere_product(radius)


def _interval(values: list[float]) -> tuple[float, float]:
    return float(values[0]), float(values[1])


def _chart_model(definition: ModelDefinition) -> StaticModel:
    spec = definition["construction"]
    n = len(spec["coordinates"])
    periods = spec.get("periods") or [None] * n
    chart = Chart(
        tuple(spec["coordinates"]),
        tuple(_interval(d) for d in spec["domains"]),
        tuple(None if p is None else float(p) for p in periods),
    )
    local = {sym.name: sym for sym in chart.symbols}
    matrix = sp.Matrix([[sp.sympify(entry, locals=local) for entry in row] for row in spec["metric"]])
    metric = make_chart_metric(chart, matrix, name=definition["name"])
    return _with_potential(definition, metric)


def _with_potential(definition: ModelDefinition, metric: Any) -> StaticModel:
    if "potential" not in definition:
        raise ModelConfigError(f"{definition['name']}: this construction needs a potential")
    f = make_scalar_field(metric.chart, definition["potential"])
    phi = make_scalar_field(metric.chart, definition["phi"], name="phi") if "phi" in definition else None
    kind = ModelKind(definition.get("kind", "unified"))
    return StaticModel(definition["name"], metric, f, kind, phi=phi)


def _construct(definition: ModelDefinition) -> StaticModel:
    spec = definition["construction"]
    name, n = definition["name"], definition["dimension"]
    match spec["type"]:
        case "chart":
            return _chart_model(definition)
        case "warped":
            period = spec.get("period")
            metric = make_warped_product(
                spec["r"], _fiber(spec["fiber"]), n, s_domain=_interval(spec["s_domain"]),
                period=period, name=name,
            )
            return _with_potential(definition, metric)
        case "doubly_warped":
            metric = make_doubly_warped_product(
                spec["a"], spec["b"], _fiber(spec["first"]), _fiber(spec["second"]),
                s_domain=_interval(spec["s_domain"]), period=spec.get("period"), name=name,
            )
            return _with_potential(definition, metric)
        case "manufactured_warped":
            return manufacture_static_warped(
                spec["r"], _fiber(spec["fiber"]), n, spec["f0"], spec["f0_prime"],
                _interval(spec["s_interval"]), s0=spec.get("s0"), name=name,
            )
        case "manufactured_doubly_warped":
            return manufacture_static_doubly_warped(
                spec["a"], _fiber(spec["first"]), _fiber(spec["second"]), spec["b0"],
                spec["b0_prime"], spec["f0"], spec["f0_prime"], _interval(spec["s_interval"]),
                s0=spec.get("s0"), name=name,
            )
        case "kobayashi":
            warp = find_periodic_warp(n, spec["R"], spec["a"], r0=spec.get("r0", 1.0))
            if warp is None:
                raise ModelConfigError(f"{name}: no periodic warp for R={spec['R']}, a={spec['a']}")
            return periodic_warp_model(warp, name, product=spec.get("product_fiber", False))
        case "catalog":
            entry = build_catalog([spec["entry"]], certified=False)[0]
            entry.model.name = name
            return entry.model
    raise ModelConfigError(f"{name}: unknown construction {spec['type']!r}")


def build_model(definition: ModelDefinition) -> StaticModel:
    """Construct the StaticModel a validated definition describes."""
    definition = validate_definition(definition, definition.get("name", "<definition>"))
    try:
        model = _construct(definition)
    except ModelConfigError:
        raise
    except (StaticLabError, sp.SympifyError, ValueError) as e:
        raise ModelConfigError(f"{definition['name']}: {e}") from e
    if model.dimension != definition["dimension"]:
        raise ModelConfigError(
            f"{definition['name']}: built a model of dimension {model.dimension}, "
            f"declared {definition['dimension']}"
        )
    model.definition = definition
    logger.info(f"Built model {model.name} ({definition['construction']['type']}, n={model.dimension})")
    return model


def load_model(reference: str, extra: Path | None = None) -> StaticModel:
    return build_model(resolve_definition(reference, extra))


def model_levels(model: StaticModel) -> tuple[float, float]:
    """Levels for integral checks: declared in the definition, else f at 20% and 80% of the s-span."""
    if model.definition and "levels" in model.definition:
        c1, c2 = model.definition["levels"]
        return float(min(c1, c2)), float(max(c1, c2))
    warp = model.metric.warp
    if warp is None:
        raise ModelConfigError(f"{model.name}: level regions need a warped model")
    lo, hi = warp.s_domain
    values = sorted(model.f.value(warp.point(lo + t * (hi - lo))) for t in (0.2, 0.8))
    return values[0], values[1]


def _table_points(model: StaticModel, count: int) -> np.ndarray:
    warp = model.metric.warp
    if warp is not None:
        lo, hi = warp.s_domain
        if warp.period is not None:
            hi = lo + warp.period
        pad = 0.0 if warp.period is not None else 1e-3 * (hi - lo)
        return np.array([warp.point(s) for s in np.linspace(lo + pad, hi - pad, count)])
    return model.metric.chart.sample_points(count, np.random.default_rng(0), margin=0.1)


def dump_model(model: StaticModel, count: int = 65) -> dict[str, Any]:
    """The model definition plus a table of f at fixed nodes."""
    if model.definition is None:
        raise ModelConfigError(f"{model.name} was not built from a definition; it cannot be dumped")
    points = _table_points(model, count)
    return {
        "schema_version": SCHEMA_VERSION,
        "definition": model.definition,
        "table": {
            "points": points.tolist(),
            "f": [model.f.value(p) for p in points],
        },
    }


def restore_model(record: dict[str, Any]) -> StaticModel:
    """Rebuild a dumped model and check f against the stored table."""
    if record.get("schema_version") != SCHEMA_VERSION:
        raise ModelConfigError(f"Unsupported dump schema_version {record.get('schema_version')!r}")
    model = build_model(record["definition"])
    table = record["table"]
    worst = max(
        (abs(model.f.value(np.asarray(p)) - v) for p, v in zip(table["points"], table["f"], strict=True)),
        default=0.0,
    )
    if worst > TABLE_TOLERANCE:
        raise ModelConfigError(
            f"{model.name}: restored potential differs from the stored table by {worst:.3e}"
        )
    return model
