"""Input validation helpers.

Tensors are plain numpy arrays.  Two arithmetic modes are supported:

* ``"exact"``: ``dtype=object`` arrays whose entries are
  :class:`fractions.Fraction` (ints are promoted on the way in),
* ``"float"``: ``float64`` arrays.

Mixing the two inside one array is rejected.
"""
from fractions import Fraction
from numbers import Integral, Rational

import numpy as np

from .exceptions import ModeError, NegativeEntryError

EXACT = "exact"
FLOAT = "float"
MODES = (EXACT, FLOAT)

MAX_ORDER = 8


def _to_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise ModeError("boolean entries are not scalars")
    if isinstance(x, (Integral, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        return Fraction(x)
    raise ModeError(f"cannot use {type(x).__name__} entry {x!r} in exact mode")


def tensor_mode(P):
    """Return ``"exact"`` or ``"float"`` for a validated tensor."""
    return EXACT if np.asarray(P).dtype == object else FLOAT


def as_exact(P):
    """Convert to an exact tensor.  Floats are converted to their exact binary value."""
    arr = np.asarray(P)
    if arr.dtype == object:
        out = np.empty(arr.shape, dtype=object)
        flat = out.reshape(-1)
        for k, x in enumerate(arr.reshape(-1)):
            if isinstance(x, (float, np.floating)):
                flat[k] = Fraction(float(x))
            else:
                flat[k] = _to_fraction(x)
        return out
    if arr.dtype.kind == "f":
        return np.vectorize(lambda v: Fraction(float(v)), otypes=[object])(arr)
    if arr.dtype.kind in "iu":
        return np.vectorize(lambda v: Fraction(int(v)), otypes=[object])(arr)
    if arr.dtype.kind in "US":
        return as_exact(arr.astype(object))
    raise ModeError(f"unsupported dtype {arr.dtype}")


def as_float(P):
    """Convert to a float64 tensor."""
    arr = np.asarray(P)
    if arr.dtype == object:
        return np.vectorize(float, otypes=[float])(arr) if arr.size else arr.astype(float)
    return arr.astype(float)


def check_tensor(P, *, mode=None, nonnegative=False, min_order=1, shape=None):
    """Validate ``P`` and return it as an exact or float ndarray.

    Parameters
    ----------
    P : array-like
        Nested lists, ndarray of numbers, or object array of Fractions.
    mode : {"exact", "float"} or None
        Target mode.  ``None`` keeps float input as float and turns
        integer/rational input into exact.
    nonnegative : bool
        Raise :class:`NegativeEntryError` if any entry is negative.
    min_order : int
        Minimum number of axes.
    shape : tuple or None
        Required shape.
    """
    if mode is not None and mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    arr = np.asarray(P) if not isinstance(P, np.ndarray) else P
    if arr.dtype == object:
        kinds = {isinstance(x, (float, np.floating)) for x in arr.reshape(-1)}
        if kinds == {True, False}:
            raise ModeError("tensor mixes float and exact entries")
        if kinds == {True}:
            arr = as_float(arr)
    inferred = FLOAT if arr.dtype.kind == "f" else EXACT
    mode = mode or inferred
    arr = as_exact(arr) if mode == EXACT else as_float(arr)

    if arr.ndim < min_order:
        raise ValueError(f"expected a tensor with at least {min_order} axes, got {arr.ndim}")
    if arr.ndim > MAX_ORDER:
        raise ValueError(f"tensors of order > {MAX_ORDER} are not supported")
    if any(d < 1 for d in arr.shape):
        raise ValueError(f"every axis needs size >= 1, got shape {arr.shape}")
    if shape is not None and tuple(arr.shape) != tuple(shape):
        raise ValueError(f"expected shape {tuple(shape)}, got {arr.shape}")
    if mode == FLOAT and not np.all(np.isfinite(arr)):
        raise ValueError("tensor has non-finite entries")
    if nonnegative:
        check_nonnegative(arr)
    return arr


def check_nonnegative(P):
    neg = np.argwhere(P < 0)
    if len(neg):
        idx = tuple(int(i) + 1 for i in neg[0])
        raise NegativeEntryError(f"entry {idx} is negative ({P[tuple(neg[0])]})")
    return P


def check_axis(P, axis):
    """Turn a 1-based axis into a 0-based one, with range checking."""
    n = np.ndim(P)
    if not isinstance(axis, (Integral, np.integer)) or not 1 <= axis <= n:
        raise IndexError(f"axis must be in 1..{n}, got {axis}")
    return int(axis) - 1


def check_index(P, axis0, index):
    d = np.shape(P)[axis0]
    if not isinstance(index, (Integral, np.integer)) or not 1 <= index <= d:
        raise IndexError(f"index must be in 1..{d} on axis {axis0 + 1}, got {index}")
    return int(index) - 1


def zero_like(P):
    return Fraction(0) if tensor_mode(P) == EXACT else 0.0


def scale_of(P):
    """Largest absolute entry as a float (1.0 for the zero tensor)."""
    m = float(np.max(np.abs(as_float(P)))) if np.size(P) else 0.0
    return m if m > 0 else 1.0
