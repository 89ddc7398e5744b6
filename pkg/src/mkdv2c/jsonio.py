"""Deterministic JSON serialization.

Identical inputs must produce byte-identical documents: keys are sorted,
floats are printed with 17 significant digits (lossless round-trip), and
no timestamps or environment data are embedded.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["dump_json"]


def _format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(float(x), ".17g")


def _encode(obj, pieces):
    if obj is None:
        pieces.append("null")
    elif obj is True:
        pieces.append("true")
    elif obj is False:
        pieces.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        pieces.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        pieces.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        import json as _json

        pieces.append(_json.dumps(obj))
    elif isinstance(obj, dict):
        pieces.append("{")
        keys = sorted(obj.keys())
        for k, key in enumerate(keys):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            if k:
                pieces.append(", ")
            _encode(key, pieces)
            pieces.append(": ")
            _encode(obj[key], pieces)
        pieces.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        pieces.append("[")
        for k, item in enumerate(seq):
            if k:
                pieces.append(", ")
            _encode(item, pieces)
        pieces.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}: {obj!r}")
    return pieces


def dump_json(obj) -> str:
    """Render ``obj`` as a deterministic JSON string (with newline)."""
    return "".join(_encode(obj, [])) + "\n"
