"""Dense tensor operations shared by every other module.

Axes, slice indices and multi-indices are 1-based at the public surface so
that tensor entries can be written exactly as ``p_{111}, p_{112}, ...``.
Storage is a row-major numpy array (last index fastest), 0-based inside.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import lcm

import numpy as np

from .validation import (
    EXACT,
    FLOAT,
    as_float,
    check_axis,
    check_index,
    check_tensor,
    tensor_mode,
)

DEFAULT_TOL = 1e-9
TINY = 1e-300


def take_slice(P, axis, index):
    """Subtensor with ``axis`` fixed to ``index``; that axis is dropped."""
    P = check_tensor(P)
    ax = check_axis(P, axis)
    i = check_index(P, ax, index)
    return np.take(P, i, axis=ax)


def double_slice(P, axis, i, j):
    """Restrict ``axis`` to the ordered index pair ``(i, j)``."""
    P = check_tensor(P)
    ax = check_axis(P, axis)
    i0, j0 = check_index(P, ax, i), check_index(P, ax, j)
    if i0 == j0:
        raise ValueError("double slice needs two distinct indices")
    return np.take(P, [i0, j0], axis=ax)


def _check_partition(n, partition):
    blocks = [tuple(sorted(int(a) for a in block)) for block in partition]
    seen = [a for block in blocks for a in block]
    if any(len(b) == 0 for b in blocks):
        raise ValueError("partition blocks must be nonempty")
    if sorted(seen) != list(range(1, n + 1)):
        raise ValueError(f"partition {partition} does not cover axes 1..{n} exactly once")
    return sorted(blocks, key=lambda b: b[0])


def flatten(P, partition):
    """Merge axis groups into single axes.

    Blocks are put in order of their smallest axis; inside a block the
    composite index runs lexicographically in the original axis order.
    A two-block partition yields a matrix.
    """
    P = check_tensor(P)
    blocks = _check_partition(P.ndim, partition)
    order = [a - 1 for block in blocks for a in block]
    shape = [int(np.prod([P.shape[a - 1] for a in block])) for block in blocks]
    return np.transpose(P, order).reshape(shape)


def bipartitions(n):
    """All two-block partitions ``A | A^c`` of ``[n]`` with ``1 in A``.

    Ordered by ``|A|`` and then lexicographically; there are ``2**(n-1) - 1``.
    """
    rest = range(2, n + 1)
    out = []
    for k in range(0, n - 1):
        for extra in combinations(rest, k):
            A = (1,) + extra
            out.append((A, tuple(a for a in range(1, n + 1) if a not in A)))
    return sorted(out, key=lambda p: (len(p[0]), p[0]))


def marginalize(P, axis):
    """Sum all slices along ``axis``."""
    P = check_tensor(P)
    return P.sum(axis=check_axis(P, axis))


def _bareiss_rank(rows):
    m = [list(r) for r in rows]
    if not m:
        return 0
    n_rows, n_cols = len(m), len(m[0])
    rank, prev = 0, 1
    for c in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if m[r][c] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        piv = m[rank][c]
        for r in range(rank + 1, n_rows):
            for k in range(c + 1, n_cols):
                m[r][k] = (piv * m[r][k] - m[r][c] * m[rank][k]) // prev
            m[r][c] = 0
        prev = piv
        rank += 1
        if rank == n_rows:
            break
    return rank


def matrix_rank(M, tol=DEFAULT_TOL):
    """Rank of a matrix.

    Exact matrices use fraction-free (Bareiss) elimination after clearing
    denominators row by row; ``tol`` is ignored.  Float matrices count the
    singular values above ``tol * sigma_max``.
    """
    M = check_tensor(M)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {M.shape}")
    if tensor_mode(M) == EXACT:
        rows = []
        for row in M:
            den = lcm(*(x.denominator for x in row))
            rows.append([int(x * den) for x in row])
        return _bareiss_rank(rows)
    if tol <= 0:
        raise ValueError("float rank needs tol > 0")
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] < TINY:
        return 0
    return int(np.sum(s > tol * s[0]))


def flattening_rank(P, tol=DEFAULT_TOL, return_witness=False):
    """Maximal matrix rank over all two-block flattenings of ``P``.

    With ``return_witness`` also return the first partition attaining it.
    """
    P = check_tensor(P, min_order=2)
    best, witness = -1, None
    for A, B in bipartitions(P.ndim):
        r = matrix_rank(flatten(P, [A, B]), tol)
        if r > best:
            best, witness = r, (A, B)
    return (best, witness) if return_witness else best


def axis_rank(P, axis, tol=DEFAULT_TOL):
    """Rank of the ``{axis} | rest`` flattening."""
    P = check_tensor(P)
    ax = check_axis(P, axis)
    return matrix_rank(np.moveaxis(P, ax, 0).reshape(P.shape[ax], -1), tol)


def axis_action(P, axis, C):
    """Contract ``axis`` of ``P`` with the rows of ``C``.

    ``C`` has ``d_axis`` rows; the result has ``C.shape[1]`` entries on that axis:
    ``out[..., c, ...] = sum_i P[..., i, ...] * C[i, c]``.
    """
    P = check_tensor(P)
    ax = check_axis(P, axis)
    C = check_tensor(C, mode=tensor_mode(P))
    if C.ndim != 2 or C.shape[0] != P.shape[ax]:
        raise ValueError(f"matrix with {P.shape[ax]} rows required, got shape {C.shape}")
    out = np.tensordot(P, C, axes=([ax], [0]))
    return np.moveaxis(out, -1, ax)


def outer(vectors):
    """Outer product of a list of vectors (works for exact and float)."""
    out = np.asarray(vectors[0])
    for v in vectors[1:]:
        out = np.multiply.outer(out, np.asarray(v))
    return out


@dataclass
class Rank2Decomposition:
    """``P = s * a_1 (x) ... (x) a_n + t * b_1 (x) ... (x) b_n``.

    Every ``a[r]`` and ``b[r]`` is nonnegative with coordinate sum 1 and
    ``s, t >= 0``.  Entries are Fractions (exact) or floats; by default
    the mode is exact unless some entry is a float.
    """

    shape: tuple
    a: list
    b: list
    s: object
    t: object
    mode: str = None
    meta: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.shape = tuple(int(d) for d in self.shape)
        if len(self.a) != len(self.shape) or len(self.b) != len(self.shape):
            raise ValueError("need one a- and one b-vector per axis")
        for r, d in enumerate(self.shape):
            if len(self.a[r]) != d or len(self.b[r]) != d:
                raise ValueError(f"vectors on axis {r + 1} must have length {d}")
        if self.mode is None:
            scalars = [self.s, self.t] + [x for v in self.a + self.b for x in np.asarray(v).reshape(-1)]
            self.mode = FLOAT if any(isinstance(x, (float, np.floating)) for x in scalars) else EXACT

    @property
    def n_axes(self):
        return len(self.shape)

    def reconstruct(self):
        return tensor_from_rank2(self)

    def to_dict(self):
        conv = str if self.mode == EXACT else float
        return {
            "shape": list(self.shape),
            "s": conv(self.s),
            "t": conv(self.t),
            "a": [[conv(x) for x in v] for v in self.a],
            "b": [[conv(x) for x in v] for v in self.b],
        }


def tensor_from_rank2(decomp):
    """Evaluate ``s * (x)a_r + t * (x)b_r`` entrywise."""
    dtype = object if decomp.mode == EXACT else float
    a = [np.asarray(v, dtype=dtype) for v in decomp.a]
    b = [np.asarray(v, dtype=dtype) for v in decomp.b]
    return decomp.s * outer(a) + decomp.t * outer(b)


def numeric_jacobian_rank(param_map, theta, h=1e-5, tol=1e-6):
    """Rank of the central finite-difference Jacobian of ``param_map`` at ``theta``.

    ``param_map`` takes a float vector and returns an array of any shape.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    theta = np.asarray(theta, dtype=float)
    cols = []
    for k in range(theta.size):
        step = np.zeros_like(theta)
        step[k] = h
        hi = as_float(param_map(theta + step)).ravel()
        lo = as_float(param_map(theta - step)).ravel()
        cols.append((hi - lo) / (2 * h))
    if not cols:
        return 0
    J = np.column_stack(cols)
    s = np.linalg.svd(J, compute_uv=False)
    if s.size == 0 or s[0] < TINY:
        return 0
    return int(np.sum(s > tol * s[0]))


def exact_zero(mode):
    return Fraction(0) if mode == EXACT else 0.0
