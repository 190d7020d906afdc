"""Model definition files: YAML loading and schema validation.

Definitions are checked against ``model_config_schema.json`` with a compiled
fastjsonschema validator. The schema itself is meta-validated with jsonschema
once, when it is first loaded.
"""

from __future__ import annotations

import json
from collections.abc import Callable
from functools import cache
from pathlib import Path
from typing import Any

import fastjsonschema
import jsonschema
import yaml
from loguru import logger

from .errors import ModelConfigError

# Type aliases for model files
type ModelDefinition = dict[str, Any]
type Validator = Callable[[dict[str, Any]], dict[str, Any]]

__all__ = [
    "SCHEMA_VERSION",
    "ModelDefinition",
    "load_schema",
    "model_validator",
    "validate_definition",
    "load_model_file",
]

SCHEMA_VERSION = "staticlab.model/1"
SCHEMA_PATH = Path(__file__).parent / "model_config_schema.json"

# --- Definition keys ---
KEY_SCHEMA_VERSION = "schema_version"
KEY_NAME = "name"
KEY_DIMENSION = "dimension"
KEY_CONSTRUCTION = "construction"
KEY_TYPE = "type"


@cache
def load_schema() -> dict[str, Any]:
    """Read the shipped schema and check it against the draft-07 meta-schema."""
    try:
        with open(SCHEMA_PATH, encoding="utf-8") as f:
            schema = json.load(f)
    except (FileNotFoundError, json.JSONDecodeError) as e:
        raise RuntimeError(f"Failed to load model schema: {e}") from e
    jsonschema.Draft7Validator.check_schema(schema)
    return schema


@cache
def model_validator() -> Validator:
    return fastjsonschema.compile(load_schema())


def _clean_message(message: str) -> str:
    return message.replace("data.", "").replace("data ", "")


def validate_definition(definition: Any, source: str = "<definition>") -> ModelDefinition:
    """Validate a parsed definition; raises ModelConfigError with a readable message."""
    if not isinstance(definition, dict):
        raise ModelConfigError(f"{source}: a model definition must be a mapping")
    version = definition.get(KEY_SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ModelConfigError(
            f"{source}: unsupported schema_version {version!r}, expected {SCHEMA_VERSION!r}"
        )
    try:
        validated = model_validator()(definition)
    except fastjsonschema.JsonSchemaException as e:
        raise ModelConfigError(f"{source}: {_clean_message(e.message)}") from e
    construction = validated[KEY_CONSTRUCTION]
    if construction[KEY_TYPE] == "chart":
        n = len(construction["coordinates"])
        if n != validated[KEY_DIMENSION]:
            raise ModelConfigError(
                f"{source}: {n} coordinates for a model of dimension {validated[KEY_DIMENSION]}"
            )
        metric = construction["metric"]
        if len(metric) != n or any(len(row) != n for row in metric):
            raise ModelConfigError(f"{source}: the metric must be a {n}x{n} array")
    return validated


def load_model_file(path: str | Path) -> ModelDefinition:
    """Load and validate a YAML model definition."""
    filepath = Path(path)
    logger.info(f"Loading model definition from: {filepath}")
    if not filepath.exists():
        raise ModelConfigError(f"Model file not found: {filepath}")
    with open(filepath, encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ModelConfigError(f"Failed to parse YAML in {filepath}: {e}") from e
    return validate_definition(data, str(filepath))
