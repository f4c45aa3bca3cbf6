"""Deterministic JSON/CSV report emission and the report schema."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

__all__ = ["REPORT_SCHEMA", "to_jsonable", "dumps", "write_json", "write_trace_csv", "write_result_csv", "validate_report"]

SCHEMA_VERSION = 1

_number = {"oneOf": [{"type": "number"}, {"enum": ["inf", "-inf", "nan"]}]}

REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "analysis", "grid", "status", "result"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "analysis": {
            "enum": [
                "decompose", "norms", "formbound", "accretivity", "commutator", "subordination",
                "magnetic", "riccati1d", "riccatind", "check-certificate",
            ]
        },
        "grid": {
            "type": "object",
            "required": ["dim", "points_per_axis", "side_length", "inner_support_fraction"],
            "properties": {
                "dim": {"enum": [1, 2, 3]},
                "points_per_axis": {"type": "integer", "minimum": 8},
                "side_length": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "inner_support_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
        },
        "status": {"enum": ["ok", "solver_cap", "refused"]},
        "inputs": {"type": "object"},
        "result": {"type": "object"},
        "witnesses": {"type": "object", "additionalProperties": {"type": "string"}},
        "refinement_trace": {
            "type": "array",
            "items": {"type": "array", "prefixItems": [{"type": "integer"}, _number], "minItems": 2, "maxItems": 2},
        },
    },
}


def to_jsonable(obj: Any) -> Any:
    """Plain JSON types; complex numbers become ``{"re", "im"}``, non-finite floats strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(float(obj.real)), "im": to_jsonable(float(obj.imag))}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _encode(o):
    # floats at 17 significant digits, keys sorted, two-space indent
    def enc(x, ind):
        pad = "  " * (ind + 1)
        end = "  " * ind
        if isinstance(x, dict):
            if not x:
                yield "{}"
                return
            yield "{\n"
            items = sorted(x.items())
            for i, (k, v) in enumerate(items):
                yield pad + json.dumps(k) + ": "
                yield from enc(v, ind + 1)
                yield ",\n" if i < len(items) - 1 else "\n"
            yield end + "}"
        elif isinstance(x, list):
            if not x:
                yield "[]"
                return
            yield "["
            for i, v in enumerate(x):
                yield from enc(v, ind + 1)
                if i < len(x) - 1:
                    yield ", "
            yield "]"
        elif isinstance(x, float):
            yield format(x, ".17g")
        else:
            yield json.dumps(x)

    yield from enc(o, 0)


def dumps(report: dict) -> str:
    return "".join(_encode(to_jsonable(report))) + "\n"


def validate_report(report: dict) -> None:
    jsonschema.validate(to_jsonable(report), REPORT_SCHEMA)


def write_json(path: str | Path, report: dict) -> Path:
    validate_report(report)
    path = Path(path)
    path.write_text(dumps(report), encoding="utf-8")
    return path


def write_trace_csv(path: str | Path, trace: list[tuple[int, float]], column: str = "value") -> Path:
    """One row per refinement level."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["points_per_axis", column])
    for n, v in trace:
        w.writerow([int(n), format(float(v), ".17g")])
    path = Path(path)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def _flatten(prefix: str, obj: Any, rows: list[tuple[str, str]]) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], rows)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, "".join(_encode(obj))))


def write_result_csv(path: str | Path, report: dict) -> Path:
    """The report flattened to ``key,value`` rows in sorted key order."""
    validate_report(report)
    rows: list[tuple[str, str]] = []
    _flatten("", to_jsonable(report), rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    w.writerows(rows)
    path = Path(path)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path
