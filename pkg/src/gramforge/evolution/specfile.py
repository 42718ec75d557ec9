"""Constraint files: TOML or JSON lists of registered constraint kinds.

Example (TOML)::

    max_depth = 20
    flatten = ["digit"]

    [[constraint]]
    kind = "cardinality_eq_k"
    scope = "csv_record"
    selector = "raw_field"
    k = 3
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .constraints import Constraint, make_constraint

__all__ = ["ConstraintSpec", "load_constraint_file", "parse_constraint_spec"]


@dataclass
class ConstraintSpec:
    constraints: list[Constraint]
    max_depth: int | None = None
    flatten: list[str] = field(default_factory=list)


def parse_constraint_spec(data: dict) -> ConstraintSpec:
    unknown = set(data) - {"constraint", "constraints", "max_depth", "flatten"}
    if unknown:
        raise ValueError(f"unknown keys in constraint file: {sorted(unknown)}")
    items = data.get("constraint", data.get("constraints", []))
    out = []
    for item in items:
        params = dict(item)
        try:
            kind = params.pop("kind")
        except KeyError:
            raise ValueError(f"constraint entry without a kind: {item!r}") from None
        out.append(make_constraint(kind, **params))
    return ConstraintSpec(out, data.get("max_depth"), list(data.get("flatten", [])))


def load_constraint_file(path: str | Path) -> ConstraintSpec:
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix == ".json":
        data = json.loads(raw)
    else:
        data = tomllib.loads(raw.decode())
    return parse_constraint_spec(data)
