"""JSON encodings shared by the library and the CLI."""

from __future__ import annotations

import base64
import json

import numpy as np

from .errors import SchemaError
from .torus import AnalyticPoly, MultiplierSeq

__all__ = [
    "seq_to_json",
    "seq_from_json",
    "poly_from_json",
    "multiplier_from_json",
    "matrix_to_json",
    "matrix_from_json",
    "vector_to_json",
    "vector_from_json",
    "pack_array",
    "unpack_array",
    "load_json",
    "dump_json",
]


def seq_to_json(seq) -> dict:
    """``{"support": [[n, re, im], ...]}`` for polynomials and multipliers."""
    return {"support": [[int(n), float(v.real), float(v.imag)] for n, v in seq.items()]}


def seq_from_json(obj, cls=AnalyticPoly):
    try:
        rows = obj["support"]
        data = {int(n): complex(float(re), float(im)) for n, re, im in rows}
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed sequence JSON: {exc}") from None
    if any(n < 0 for n in data):
        raise SchemaError("sequence indices must be nonnegative")
    return cls(data)


def poly_from_json(obj) -> AnalyticPoly:
    return seq_from_json(obj, AnalyticPoly)


def multiplier_from_json(obj) -> MultiplierSeq:
    return seq_from_json(obj, MultiplierSeq)


def matrix_to_json(A) -> dict:
    """``{"n": rows, "rows": [[re, im, re, im, ...], ...]}``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.complex128))
    rows = [np.column_stack([r.real, r.imag]).ravel().tolist() for r in A]
    return {"n": int(A.shape[0]), "rows": rows}


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows = [np.asarray(r, dtype=float) for r in obj["rows"]]
        n = int(obj.get("n", len(rows)))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed matrix JSON: {exc}") from None
    if n != len(rows) or not rows:
        raise SchemaError(f"matrix declares n = {n} but has {len(rows)} rows")
    widths = {r.size for r in rows}
    if len(widths) != 1 or widths.pop() % 2:
        raise SchemaError("matrix rows must have equal, even lengths (re, im pairs)")
    arr = np.array([r[0::2] + 1j * r[1::2] for r in rows])
    if not np.any(arr.imag):
        return arr.real.copy()
    return arr


def vector_to_json(v) -> dict:
    return matrix_to_json(np.asarray(v).reshape(-1, 1))


def vector_from_json(obj) -> np.ndarray:
    return matrix_from_json(obj).ravel()


def pack_array(arr) -> dict:
    arr = np.ascontiguousarray(arr)
    return {"shape": list(arr.shape), "dtype": str(arr.dtype),
            "data": base64.b64encode(arr.tobytes()).decode("ascii")}


def unpack_array(obj) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype=np.dtype(obj["dtype"])).reshape(obj["shape"]).copy()


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
