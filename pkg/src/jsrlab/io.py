"""JSON input documents and report serialisation.

Documents have the form ``{"kind": ..., "payload": {...}}`` with complex
numbers written as ``[re, im]``::

    {"kind": "matrix_set", "payload": {"matrices": [M1, M2, ...], "label": "F"}}
    {"kind": "algebra", "payload": {"dim": d, "c": C, "labels": [...], "elements": [x1, ...]}}
    {"kind": "op_model", "payload": {"family": [{"lambda": z, "K": K}, ...]}}

A matrix is a list of rows of ``[re, im]`` pairs; ``C`` is a ``d x d x d``
nest of pairs and elements are coordinate vectors of pairs.  Python's float
formatting is shortest-repr, so numbers round-trip bit for bit.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .algebra import StructureAlgebra
from .errors import SchemaError, UsageError
from .jsr import MatrixSet
from .opmodel import ScalarPlusCorner

KINDS = ("matrix_set", "algebra", "op_model")


@dataclass(frozen=True)
class Document:
    kind: str
    value: Any  # MatrixSet, StructureAlgebra or list[ScalarPlusCorner]
    elements: tuple[np.ndarray, ...] = ()  # algebra documents only


def _clean(x: float) -> float:
    return float(x) + 0.0  # turns -0.0 into 0.0


def encode_complex(z) -> list[float]:
    z = complex(z)
    return [_clean(z.real), _clean(z.imag)]


def encode_array(a) -> list:
    """Nested lists with complex entries replaced by ``[re, im]``."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 0:
        return encode_complex(a)
    return [encode_array(x) for x in a]


def decode_array(obj, field: str, ndim: int) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{field}: not a rectangular array of numbers ({exc})") from None
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise SchemaError(f"{field}: expected a {ndim}-dimensional array of [re, im] pairs, "
                          f"got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"{field}: non-finite number")
    return arr[..., 0] + 1j * arr[..., 1]


def _require(obj: dict, key: str, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{where}: missing field '{key}'")
    return obj[key]


def parse_document(text: str) -> Document:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON: {exc}") from None
    kind = _require(doc, "kind", "document")
    if kind not in KINDS:
        raise SchemaError(f"kind: expected one of {KINDS}, got {kind!r}")
    payload = _require(doc, "payload", "document")
    try:
        if kind == "matrix_set":
            return _parse_matrix_set(payload)
        if kind == "algebra":
            return _parse_algebra(payload)
        return _parse_op_model(payload)
    except UsageError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"payload: {exc}") from None


def _parse_matrix_set(payload) -> Document:
    mats = _require(payload, "matrices", "payload")
    if not isinstance(mats, list) or not mats:
        raise SchemaError("payload.matrices: expected a nonempty list")
    arrays = tuple(decode_array(m, f"payload.matrices[{i}]", 2) for i, m in enumerate(mats))
    dims = {a.shape for a in arrays}
    if len(dims) != 1 or arrays[0].shape[0] != arrays[0].shape[1]:
        raise SchemaError(f"payload.matrices: all matrices must be square of one size, got {sorted(dims)}")
    label = payload.get("label")
    return Document("matrix_set", MatrixSet(arrays, label))


def _parse_algebra(payload) -> Document:
    dim = _require(payload, "dim", "payload")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise SchemaError("payload.dim: expected a positive integer")
    c = decode_array(_require(payload, "c", "payload"), "payload.c", 3)
    if c.shape != (dim, dim, dim):
        raise SchemaError(f"payload.c: expected shape {(dim, dim, dim)}, got {c.shape}")
    labels = payload.get("labels")
    if labels is not None and (not isinstance(labels, list) or len(labels) != dim):
        raise SchemaError("payload.labels: expected a list with one label per basis element")
    elements = ()
    if "elements" in payload:
        raw = payload["elements"]
        if not isinstance(raw, list):
            raise SchemaError("payload.elements: expected a list")
        elements = tuple(decode_array(x, f"payload.elements[{i}]", 1) for i, x in enumerate(raw))
        for i, x in enumerate(elements):
            if x.shape != (dim,):
                raise SchemaError(f"payload.elements[{i}]: expected {dim} coordinates")
    return Document("algebra", StructureAlgebra(c, labels), elements)


def _parse_op_model(payload) -> Document:
    fam = _require(payload, "family", "payload")
    if not isinstance(fam, list) or not fam:
        raise SchemaError("payload.family: expected a nonempty list")
    out = []
    for i, t in enumerate(fam):
        where = f"payload.family[{i}]"
        lam = decode_array(_require(t, "lambda", where), f"{where}.lambda", 0)
        k = decode_array(_require(t, "K", where), f"{where}.K", 2)
        if k.shape[0] != k.shape[1] or k.shape[0] == 0:
            raise SchemaError(f"{where}.K: expected a nonempty square matrix")
        out.append(ScalarPlusCorner(complex(lam), k))
    return Document("op_model", out)


def document_to_json(doc: Document) -> dict:
    if doc.kind == "matrix_set":
        payload: dict = {"matrices": [encode_array(m) for m in doc.value.members]}
        if doc.value.label is not None:
            payload["label"] = doc.value.label
    elif doc.kind == "algebra":
        a = doc.value
        payload = {"dim": a.dim, "c": encode_array(a.c)}
        if a.labels is not None:
            payload["labels"] = list(a.labels)
        if doc.elements:
            payload["elements"] = [encode_array(x) for x in doc.elements]
    else:
        payload = {"family": [t.to_json() for t in doc.value]}
    return {"kind": doc.kind, "payload": payload}


def _finite(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise SchemaError(f"cannot serialise non-finite value {obj!r}")
        return _clean(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.generic):
        return _finite(obj.item())
    return obj


def dumps(obj) -> str:
    """Pretty, key-order-preserving JSON with a trailing newline."""
    return json.dumps(_finite(obj), indent=2) + "\n"
