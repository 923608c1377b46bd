"""JSON readers and writers for twists, tuples, series and matrix dumps.

Complex numbers are written as ``{"re": x, "im": y}``; matrices as row-major
arrays of arrays; index pairs as ``"i,j"`` strings (1-based).
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .ball import OperatorTuple
from .hardy import FormalSeries
from .twist import TwistSpec


class InputError(ValueError):
    pass


def complex_to_json(z: complex) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def complex_from_json(obj: Any) -> complex:
    if isinstance(obj, dict):
        try:
            return complex(float(obj["re"]), float(obj.get("im", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad complex number {obj!r}") from exc
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return complex(obj)
    raise InputError(f"bad complex number {obj!r}")


def dump_matrix(M) -> list:
    M = np.atleast_2d(np.asarray(M))
    return [[complex_to_json(z) for z in row] for row in M]


def load_matrix(obj: Any) -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise InputError("matrix must be a non-empty array of arrays")
    width = len(obj[0])
    if any(len(r) != width for r in obj):
        raise InputError("ragged matrix")
    return np.array([[complex_from_json(z) for z in row] for row in obj], dtype=complex)


def _pair(key: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in key.split(","))
    except ValueError as exc:
        raise InputError(f"bad index pair {key!r}") from exc
    return a, b


def _arities(obj: dict) -> tuple[int, ...]:
    try:
        n = tuple(int(x) for x in obj["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError("missing or bad 'n'") from exc
    if "k" in obj and int(obj["k"]) != len(n):
        raise InputError(f"k={obj['k']} does not match n={list(n)}")
    if not n or any(x < 1 for x in n):
        raise InputError("arities must be positive")
    return n


def load_twist(obj: dict) -> TwistSpec:
    n = _arities(obj)
    blocks = {_pair(key): load_matrix(val) for key, val in (obj.get("lambda") or {}).items()}
    return TwistSpec(n, blocks)


def dump_twist(spec: TwistSpec) -> dict:
    return {"k": spec.k, "n": list(spec.n),
            "lambda": {f"{i},{j}": dump_matrix(M) for (i, j), M in spec.upper_blocks().items()}}


def load_tuple(obj: dict) -> tuple[OperatorTuple, TwistSpec]:
    spec = load_twist(obj)
    raw = obj.get("T")
    if not isinstance(raw, dict):
        raise InputError("missing 'T' block")
    mats: list[list[np.ndarray | None]] = [[None] * ni for ni in spec.n]
    for key, val in raw.items():
        i, s = _pair(key)
        if not (1 <= i <= spec.k and 1 <= s <= spec.n[i - 1]):
            raise InputError(f"operator index {key} out of range")
        mats[i - 1][s - 1] = load_matrix(val)
    missing = [f"{i + 1},{s + 1}" for i, row in enumerate(mats) for s, M in enumerate(row) if M is None]
    if missing:
        raise InputError(f"missing operators {missing}")
    try:
        T = OperatorTuple(mats)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if "d" in obj and int(obj["d"]) != T.d:
        raise InputError(f"d={obj['d']} does not match matrix size {T.d}")
    return T, spec


def dump_tuple(T: OperatorTuple, spec: TwistSpec) -> dict:
    out = dump_twist(spec)
    out["d"] = T.d
    out["T"] = {f"{i},{s}": dump_matrix(T.op(i, s)) for i, s in T.slots()}
    return out


def load_series(obj: dict) -> FormalSeries:
    n = _arities(obj)
    items = []
    for entry in obj.get("coeffs", []):
        try:
            beta = tuple(tuple(int(a) for a in comp) for comp in entry["beta"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad coefficient entry {entry!r}") from exc
        items.append((beta, complex_from_json(entry["c"])))
    try:
        return FormalSeries(n, items)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def dump_series(series: FormalSeries) -> dict:
    return {"k": series.k, "n": list(series.n),
            "coeffs": [{"beta": [list(w) for w in beta], "c": complex_to_json(c)}
                       for beta, c in series.items()]}


def read_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def write_json(obj: dict, path: str | Path | None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False, default=_default)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def _default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return complex_to_json(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")
