"""Packing JSON serialization with schema validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .sphgeo import unit_vectors

PACKING_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "packing",
    "type": "object",
    "required": ["dimension", "points"],
    "properties": {
        "dimension": {"type": "integer", "minimum": 2},
        "points": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "minItems": 2, "items": {"type": "number"}},
        },
        "phi": {"type": "number", "exclusiveMinimum": 0},
        "eps": {"type": "number", "minimum": 0},
        "meta": {"type": "object"},
    },
    "additionalProperties": False,
}


class InputError(ValueError):
    """Malformed or inconsistent input document."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(message)
        self.path = path

    def as_dict(self) -> dict:
        return {"error": "input", "message": str(self), "path": self.path}


@dataclass
class Packing:
    points: np.ndarray
    phi: float | None = None
    eps: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def to_dict(self) -> dict:
        out = {"dimension": self.dimension, "points": self.points.tolist()}
        if self.phi is not None:
            out["phi"] = float(self.phi)
        if self.eps is not None:
            out["eps"] = float(self.eps)
        out["meta"] = self.meta
        return out


def packing_from_dict(doc) -> Packing:
    try:
        jsonschema.validate(doc, PACKING_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path)
        raise InputError(exc.message, where) from None
    d = doc["dimension"]
    bad = [i for i, p in enumerate(doc["points"]) if len(p) != d]
    if bad:
        raise InputError(f"point {bad[0]} does not have {d} coordinates", f"points/{bad[0]}")
    try:
        X = unit_vectors(doc["points"])
    except ValueError as exc:
        raise InputError(str(exc), "points") from None
    return Packing(X, doc.get("phi"), doc.get("eps"), dict(doc.get("meta", {})))


def dumps_packing(packing: Packing) -> str:
    # json writes floats with repr, so coordinates round-trip exactly.
    return json.dumps(packing.to_dict(), indent=1)


def load_packing(path) -> Packing:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from None
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return packing_from_dict(doc)


def save_packing(path, packing: Packing) -> None:
    Path(path).write_text(dumps_packing(packing) + "\n")
