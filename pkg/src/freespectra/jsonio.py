"""JSON encoding for matrices, tuples, series, pencils and reports.

Complex scalars are ``[re, im]``; matrices are row-major nested arrays. On
input a plain real number is also accepted wherever a scalar is expected.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, is_dataclass

import numpy as np

from .errors import InputError
from .nc_core import FreeSeries


def _num(x: float) -> float | str:
    x = float(x)
    if x == 0.0:
        return 0.0  # drop the sign of negative zero
    if math.isnan(x) or math.isinf(x):
        return str(x)
    return x


def encode_scalar(z) -> list:
    z = complex(z)
    return [_num(z.real), _num(z.imag)]


def encode_matrix(M) -> list:
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return [[encode_scalar(z) for z in row] for row in M]


def encode_tuple(X) -> list:
    return [encode_matrix(m) for m in np.asarray(X, dtype=complex)]


def _decode_scalar(x, where: str) -> complex:
    if isinstance(x, bool):
        raise InputError(f"{where}: boolean is not a number")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(t, (int, float)) for t in x):
        return complex(x[0], x[1])
    raise InputError(f"{where}: expected a number or [re, im], got {x!r}")


def decode_matrix(obj, where: str = "matrix") -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise InputError(f"{where}: expected a non-empty list of rows")
    width = len(obj[0])
    rows = []
    for i, r in enumerate(obj):
        if len(r) != width:
            raise InputError(f"{where}[{i}]: ragged row")
        rows.append([_decode_scalar(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)])
    return np.array(rows, dtype=complex)


def decode_tuple(obj, where: str = "tuple") -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise InputError(f"{where}: expected a non-empty list of matrices")
    mats = [decode_matrix(m, f"{where}[{k}]") for k, m in enumerate(obj)]
    if len({m.shape for m in mats}) != 1:
        raise InputError(f"{where}: matrices have different shapes")
    return np.array(mats)


def decode_vector(obj, where: str = "vector") -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise InputError(f"{where}: expected a non-empty list")
    return np.array([_decode_scalar(x, f"{where}[{i}]") for i, x in enumerate(obj)], dtype=complex)


def series_to_json(f: FreeSeries) -> dict:
    return {"g": f.g, "rows": f.rows, "cols": f.cols, "max_degree": f.max_degree,
            "terms": [{"word": list(w), "coeff": encode_matrix(m)} for w, m in f.items()]}


def series_from_json(obj, where: str = "series") -> FreeSeries:
    try:
        g, rows, cols, N = (int(obj[k]) for k in ("g", "rows", "cols", "max_degree"))
        terms = obj["terms"]
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"{where}: missing or bad field ({e})") from None
    coeffs = {}
    for i, t in enumerate(terms):
        w = tuple(int(a) for a in t["word"])
        coeffs[w] = decode_matrix(t["coeff"], f"{where}.terms[{i}].coeff")
    return FreeSeries(g, rows, cols, N, coeffs)


def pencil_to_json(A) -> dict:
    A = np.asarray(A, dtype=complex)
    return {"g": A.shape[0], "d": A.shape[1], "A": encode_tuple(A)}


def xi_to_json(Xi) -> dict:
    Xi = np.asarray(Xi, dtype=complex)
    return {"g": Xi.shape[0], "Xi": encode_tuple(Xi)}


def _pick(obj, keys, where):
    if isinstance(obj, dict):
        for k in keys:
            if k in obj:
                return obj[k]
        raise InputError(f"{where}: expected one of the keys {keys}")
    return obj


def pencil_from_json(obj, where: str = "pencil") -> np.ndarray:
    A = decode_tuple(_pick(obj, ("A",), where), where)
    if isinstance(obj, dict) and "g" in obj and int(obj["g"]) != A.shape[0]:
        raise InputError(f"{where}: g={obj['g']} but {A.shape[0]} matrices given")
    return A


def xi_from_json(obj, where: str = "Xi") -> np.ndarray:
    Xi = decode_tuple(_pick(obj, ("Xi", "xi"), where), where)
    if Xi.shape[0] != Xi.shape[1]:
        raise InputError(f"{where}: need g matrices of size g x g, got {Xi.shape}")
    return Xi


def to_jsonable(obj):
    """Recursively convert numpy arrays, complex numbers and dataclasses."""
    if is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_jsonable(obj.to_dict())
        return to_jsonable(asdict(obj))
    if isinstance(obj, FreeSeries):
        return series_to_json(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if obj.ndim == 0:
            return to_jsonable(obj.item())
        if np.iscomplexobj(obj):
            if obj.ndim == 2:
                return encode_matrix(obj)
            if obj.ndim == 3:
                return encode_tuple(obj)
            return [to_jsonable(v) for v in obj]
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return _num(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return encode_scalar(obj)
    return obj


def dumps(obj, indent: int | None = 2) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=indent)


def digest(obj) -> str:
    s = json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(s.encode()).hexdigest()


def hereditary_to_json(h) -> dict:
    return {"g": h.g, "size": h.size,
            "terms": [{"v": list(v), "w": list(w), "coeff": encode_matrix(m)} for (v, w), m in h.items()]}


def hereditary_from_json(obj, where: str = "hereditary"):
    from .nc_core import HereditaryPoly

    try:
        g, size = int(obj["g"]), int(obj["size"])
        terms = obj["terms"]
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"{where}: missing or bad field ({e})") from None
    coeffs = {}
    for i, t in enumerate(terms):
        try:
            key = (tuple(int(a) for a in t["v"]), tuple(int(a) for a in t["w"]))
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"{where}.terms[{i}]: bad words ({e})") from None
        m = decode_matrix(t["coeff"], f"{where}.terms[{i}].coeff")
        coeffs[key] = coeffs[key] + m if key in coeffs else m
    return HereditaryPoly(g, size, coeffs)
