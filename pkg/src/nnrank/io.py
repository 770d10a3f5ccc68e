"""JSON interchange for tensors and tree-model parameters.

Tensor documents look like::

    {"shape": [2, 2, 2], "mode": "exact", "entries": ["9", "5", ..., "2"]}

Entries are listed in row-major order (last index fastest).  Exact
entries are ``"p/q"`` strings or integers; float entries are numbers.
"""
import json
from fractions import Fraction

import numpy as np

from .exceptions import ModeError
from .validation import EXACT, FLOAT, MODES, check_tensor, tensor_mode


def tensor_from_dict(doc, mode=None):
    """Build a tensor from its JSON document; ``mode`` overrides the document's mode."""
    if not isinstance(doc, dict) or "shape" not in doc or "entries" not in doc:
        raise ValueError("tensor document needs 'shape' and 'entries'")
    shape = tuple(int(d) for d in doc["shape"])
    entries = list(doc["entries"])
    if len(entries) != int(np.prod(shape)):
        raise ValueError(f"{len(entries)} entries do not fill shape {shape}")
    doc_mode = doc.get("mode", EXACT)
    if doc_mode not in MODES:
        raise ValueError(f"unknown mode {doc_mode!r}")
    target = mode or doc_mode
    if doc_mode == EXACT:
        try:
            vals = [Fraction(x) if not isinstance(x, float) else Fraction(str(x)) for x in entries]
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"bad exact entry: {exc}") from exc
        arr = np.empty(len(vals), dtype=object)
        arr[:] = vals
    else:
        if any(isinstance(x, str) for x in entries):
            raise ModeError("float documents need numeric entries")
        arr = np.array(entries, dtype=float)
    return check_tensor(arr.reshape(shape), mode=target)


def tensor_to_dict(P):
    P = check_tensor(P)
    mode = tensor_mode(P)
    conv = str if mode == EXACT else float
    return {"shape": list(P.shape), "mode": mode, "entries": [conv(x) for x in P.reshape(-1)]}


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from exc


def load_tensor(path, mode=None):
    return tensor_from_dict(load_json(path), mode)


def dumps(obj):
    return json.dumps(obj, default=_default)


def _default(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


__all__ = ["tensor_from_dict", "tensor_to_dict", "load_json", "load_tensor", "dumps", "EXACT", "FLOAT"]
