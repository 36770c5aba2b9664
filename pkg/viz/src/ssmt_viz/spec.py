"""Figure specifications and input-schema validation.

A FigureSpec names a figure kind, the exported files it reads, and
styling options.  Inputs are validated against the documented export
schemas before any drawing happens; violations raise SchemaError naming
the offending path.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

KINDS = ("tree3d", "level_overlay", "spine", "convergence", "report_table")


class SchemaError(Exception):
    """An input file is missing or does not match its documented schema."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: dict
    style: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj: dict) -> "FigureSpec":
        kind = obj.get("kind")
        if kind not in KINDS:
            raise SchemaError(f"unknown figure kind {kind!r}; expected one of {KINDS}")
        return cls(kind=kind, inputs=dict(obj.get("inputs", {})),
                   style=dict(obj.get("style", {})))

    @classmethod
    def load(cls, path: str) -> "FigureSpec":
        with open(path) as fp:
            return cls.from_json(json.load(fp))


def _require(inputs: dict, key: str) -> str:
    path = inputs.get(key)
    if not path:
        raise SchemaError(f"missing input {key!r}")
    if not os.path.exists(path):
        raise SchemaError(f"{path}: file does not exist")
    return path


def load_tree(inputs: dict) -> dict:
    path = _require(inputs, "tree")
    with open(path) as fp:
        obj = json.load(fp)
    if "nodes" not in obj or not isinstance(obj["nodes"], list):
        raise SchemaError(f"{path}: tree export needs a 'nodes' list")
    for node in obj["nodes"]:
        for key in ("label", "parent", "attach_age", "birth_size", "polyline"):
            if key not in node:
                raise SchemaError(f"{path}: node is missing {key!r}")
    return obj


def load_overlay(inputs: dict) -> dict:
    path = _require(inputs, "overlay")
    with open(path) as fp:
        obj = json.load(fp)
    if "points" not in obj:
        raise SchemaError(f"{path}: overlay needs a 'points' list")
    for pt in obj["points"]:
        if pt.get("kind") != "first_hit" or "label" not in pt or "age" not in pt:
            raise SchemaError(f"{path}: overlay point malformed")
    return obj


def load_spine_csv(inputs: dict):
    import numpy as np
    path = _require(inputs, "spine")
    with open(path, newline="") as fp:
        rows = list(csv.reader(fp))
    if not rows or rows[0] != ["arclength", "value"]:
        raise SchemaError(f"{path}: expected header arclength,value")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric row ({exc})")
    return data


def load_report(inputs: dict) -> dict:
    path = _require(inputs, "report")
    with open(path) as fp:
        obj = json.load(fp)
    if "checks" not in obj:
        raise SchemaError(f"{path}: run report needs a 'checks' list")
    for c in obj["checks"]:
        if "name" not in c or "pass" not in c:
            raise SchemaError(f"{path}: check entry malformed")
    return obj


def load_convergence(inputs: dict) -> dict:
    path = _require(inputs, "report")
    with open(path) as fp:
        obj = json.load(fp)
    diag = obj.get("extras", {}).get("convergence") if "extras" in obj else obj
    if diag is None or "x" not in diag or "n_dev" not in diag or "l_dev" not in diag:
        raise SchemaError(f"{path}: no convergence diagnostics "
                          "(need x, n_dev, l_dev)")
    if not (len(diag["x"]) == len(diag["n_dev"]) == len(diag["l_dev"])):
        raise SchemaError(f"{path}: diagnostics arrays have unequal lengths")
    return diag
