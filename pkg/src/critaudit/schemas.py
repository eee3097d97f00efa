"""Published JSON schema loading and validation."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Any

from .errors import ValidationError

SCHEMA_NAMES = (
    "demographic-scheme",
    "criteria-manifest",
    "claimed-results",
)


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    if name not in SCHEMA_NAMES:
        raise KeyError(f"unknown schema {name!r}")
    ref = resources.files("critaudit").joinpath("schemas", f"{name}.schema.json")
    return json.loads(ref.read_text(encoding="utf-8"))


def validate_against(name: str, instance: Any) -> None:
    """Validate ``instance`` against the named schema.

    Raises :class:`ValidationError` with the JSON path of the first failure.
    """
    import jsonschema  # deferred; keeps schema-free CLI paths fast

    validator = jsonschema.Draft202012Validator(load_schema(name))
    error = jsonschema.exceptions.best_match(validator.iter_errors(instance))
    if error is not None:
        path = "$" + "".join(
            f"[{p}]" if isinstance(p, int) else f".{p}" for p in error.absolute_path
        )
        raise ValidationError(f"{name} schema violation at {path}: {error.message}")
