"""Writing reports: schema validation, strict JSON and CSV curves."""
from __future__ import annotations

import csv
import json
import math
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

SCHEMAS = ("train_report", "suite_report")


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    if name not in SCHEMAS:
        raise ValueError(f"unknown schema {name!r}")
    text = resources.files("gmcloss").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def validate(report: dict, name: str) -> None:
    """Raise ``jsonschema.ValidationError`` if ``report`` does not match schema ``name``."""
    jsonschema.validate(report, load_schema(name))


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n",
                          encoding="utf-8")


def _cell(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return repr(float(value)) if isinstance(value, float) else value


def write_csv(path, rows: list[dict], fieldnames: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row[k]) for k in fieldnames})
