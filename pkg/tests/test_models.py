import math

import pytest
import yaml

from staticlab.errors import ModelConfigError
from staticlab.models import (
    build_model,
    builtin_model_names,
    dump_model,
    load_model,
    model_levels,
    resolve_definition,
    restore_model,
)
from staticlab.schema import (
    SCHEMA_VERSION,
    load_model_file,
    load_schema,
    model_validator,
    validate_definition,
)
from staticlab.statics import ModelKind

CHART_MODEL = {
    "schema_version": SCHEMA_VERSION,
    "name": "stretched_torus",
    "dimension": 3,
    "kind": "unified",
    "construction": {
        "type": "chart",
        "coordinates": ["x", "y", "z"],
        "domains": [[0.0, 1.0], [0.0, 1.0], [0.0, 1.0]],
        "periods": [1.0, 1.0, 1.0],
        "metric": [[1, 0, 0], [0, 2, 0], [0, 0, "3"]],
    },
    "potential": "1 + x/10",
}


def test_builtin_models_are_listed():
    names = builtin_model_names()
    for name in ("s3", "cpe_s3", "s1xs2", "flat_t3", "warped4", "warped5", "periodic_r3", "s1xs3"):
        assert name in names


def test_schema_compiles_and_pins_the_version():
    assert load_schema()["properties"]["schema_version"]["const"] == SCHEMA_VERSION
    assert callable(model_validator())


@pytest.mark.parametrize("name", builtin_model_names())
def test_builtin_definitions_validate(name):
    definition = resolve_definition(name)
    assert definition["name"] == name
    assert model_validator()(definition)["schema_version"] == SCHEMA_VERSION


@pytest.mark.parametrize("name", ["s3", "cpe_s3", "s1xs2", "flat_t3", "s1xs3", "warped4"])
def test_builtin_models_build(name):
    model = load_model(name)
    assert model.name == name
    assert model.dimension == model.metric.dimension


def test_unknown_model_reference():
    with pytest.raises(ModelConfigError, match="Unknown model 'nowhere'"):
        resolve_definition("nowhere")


def test_builtin_definitions_declare_their_kind(s3, cpe_s3, warped4):
    assert s3.kind is ModelKind.VACUUM_STATIC
    assert cpe_s3.kind is ModelKind.CPE
    assert warped4.kind is ModelKind.STATIC
    assert s3.definition["construction"]["type"] == "warped"


def test_constant_potential(s3, flat_t3):
    assert flat_t3.constant_potential
    assert not s3.constant_potential


@pytest.mark.parametrize(
    ("change", "message"),
    [
        ({"schema_version": "staticlab.model/0"}, "schema_version"),
        ({"dimension": 2}, ""),
        ({"name": "has space"}, ""),
        ({"extra": 1}, ""),
        ({"dimension": 4}, "4 coordinates|3 coordinates"),
    ],
)
def test_invalid_definitions(change, message):
    definition = CHART_MODEL | change
    with pytest.raises(ModelConfigError, match=message):
        validate_definition(definition)


def test_definition_must_be_a_mapping():
    with pytest.raises(ModelConfigError, match="mapping"):
        validate_definition(["not", "a", "mapping"])


def test_metric_must_be_square():
    construction = CHART_MODEL["construction"] | {"metric": [[1, 0], [0, 1], [0, 0]]}
    with pytest.raises(ModelConfigError, match="3x3"):
        validate_definition(CHART_MODEL | {"construction": construction})


def test_chart_model_from_a_definition():
    model = build_model(CHART_MODEL)
    assert model.name == "stretched_torus"
    assert model.kind is ModelKind.UNIFIED
    assert model.metric.warp is None
    assert model.f.value([0.5, 0.5, 0.5]) == pytest.approx(1.05)


def test_construction_errors_become_config_errors():
    missing_potential = {k: v for k, v in CHART_MODEL.items() if k != "potential"}
    with pytest.raises(ModelConfigError, match="needs a potential"):
        build_model(missing_potential)
    wrong_fiber = {
        "schema_version": SCHEMA_VERSION,
        "name": "bad_fiber",
        "dimension": 4,
        "construction": {
            "type": "warped",
            "r": "sin(s)",
            "fiber": {"kind": "sphere", "dimension": 2},
            "s_domain": [0.0, math.pi],
        },
        "potential": "cos(s)",
    }
    with pytest.raises(ModelConfigError, match="bad_fiber"):
        build_model(wrong_fiber)


def test_model_files_from_a_directory(tmp_path):
    (tmp_path / "stretched.yaml").write_text(yaml.safe_dump(CHART_MODEL), encoding="utf-8")
    model = load_model("stretched", extra=tmp_path)
    assert model.name == "stretched_torus"
    assert "stretched" in builtin_model_names(tmp_path)
    assert load_model(str(tmp_path / "stretched.yaml")).dimension == 3


def test_unreadable_model_files(tmp_path):
    with pytest.raises(ModelConfigError, match="not found"):
        load_model_file(tmp_path / "missing.yaml")
    broken = tmp_path / "broken.yaml"
    broken.write_text("name: [unclosed\n", encoding="utf-8")
    with pytest.raises(ModelConfigError, match="YAML"):
        load_model_file(broken)


def test_default_levels_sit_inside_the_s_domain(s3):
    c1, c2 = model_levels(s3)
    assert c1 == pytest.approx(math.cos(0.8 * math.pi))
    assert c2 == pytest.approx(math.cos(0.2 * math.pi))


def test_declared_levels_take_precedence(flat_t3):
    model = build_model(CHART_MODEL | {"levels": [0.5, -0.5]})
    assert model_levels(model) == (-0.5, 0.5)
    with pytest.raises(ModelConfigError):
        model_levels(flat_t3)


def test_catalog_construction():
    model = load_model("s1xs3")
    assert model.name == "s1xs3"
    assert model.dimension == 4
    assert model.metric.chart.is_periodic(0)


def test_dump_and_restore(s3):
    record = dump_model(s3, count=9)
    assert record["schema_version"] == SCHEMA_VERSION
    assert len(record["table"]["f"]) == 9
    restored = restore_model(record)
    assert restored.name == "s3"


def test_restore_detects_a_changed_potential(s3):
    record = dump_model(s3, count=5)
    record["table"]["f"][2] += 1e-6
    with pytest.raises(ModelConfigError, match="differs"):
        restore_model(record)
    with pytest.raises(ModelConfigError, match="schema_version"):
        restore_model(record | {"schema_version": "other"})
