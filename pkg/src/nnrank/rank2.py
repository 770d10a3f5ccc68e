"""Deciding, constructing and classifying nonnegative rank <= 2 tensors.

A nonnegative tensor has nonnegative rank at most two iff it is
supermodular for some permutation tuple and every two-block flattening has
rank at most two.  :func:`decide` runs that test; :func:`decompose` builds
an explicit decomposition

    P = s * a_1 (x) ... (x) a_n + t * b_1 (x) ... (x) b_n

with unit-sum nonnegative vectors.  The construction

1. splits off every axis whose flattening has rank one (``P = v (x) P'``),
2. compresses the remaining axes to two indices each using the extreme rays
   of the nonnegative part of each axis' column space,
3. decomposes the ``2 x 2 x 2^(m-2)`` flattening of the compressed core by a
   two-slice matrix pencil, and
4. splits the two long factors into outer products and undoes step 2.

The ``2 x 2 x 2`` machinery (hyperdeterminant, ``mu``, the ``U``
quantities, Jukes-Cantor slice) lives here as well.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt

import numpy as np

from .exceptions import DecompositionError, NotInModelError
from .supermodular import SupermodularCertificate, find_pi, identity_pi, is_pi_supermodular, toric_cells
from .tensor import (
    DEFAULT_TOL,
    Rank2Decomposition,
    axis_rank,
    bipartitions,
    flatten,
    matrix_rank,
    tensor_from_rank2,
)
from .validation import EXACT, FLOAT, as_float, check_tensor, scale_of, tensor_mode

VERIFY_TOL = 1e-8
BOUNDARY_TOL = 1e-7


class _Irrational(Exception):
    """An exact computation needs a square root that is not rational."""


# ---------------------------------------------------------------- 2x2x2 algebra


def _check_222(P):
    return check_tensor(P, shape=(2, 2, 2))


def _entries(P):
    """``p[(i, j, k)]`` with 1-based keys."""
    return {(i + 1, j + 1, k + 1): P[i, j, k] for i in range(2) for j in range(2) for k in range(2)}


def _det2(M):
    return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]


@dataclass
class UQuantities:
    """Marginal and slice 2x2 determinants of a 2x2x2 tensor."""

    u12: object
    u13: object
    u23: object
    u12_1: object
    u12_2: object
    u13_1: object
    u13_2: object
    u23_1: object
    u23_2: object

    @property
    def product(self):
        return self.u12 * self.u13 * self.u23

    def pairs(self):
        return {
            "12": (self.u12, self.u12_1, self.u12_2),
            "13": (self.u13, self.u13_1, self.u13_2),
            "23": (self.u23, self.u23_1, self.u23_2),
        }


def u_quantities(P):
    P = _check_222(P)
    return UQuantities(
        u12=_det2(P.sum(axis=2)),
        u13=_det2(P.sum(axis=1)),
        u23=_det2(P.sum(axis=0)),
        u12_1=_det2(P[:, :, 0]),
        u12_2=_det2(P[:, :, 1]),
        u13_1=_det2(P[:, 0, :]),
        u13_2=_det2(P[:, 1, :]),
        u23_1=_det2(P[0, :, :]),
        u23_2=_det2(P[1, :, :]),
    )


def u12_remainder(P):
    """The bracket ``R`` with ``U12 = U12^1 + U12^2 + R``."""
    p = _entries(_check_222(P))
    return p[1, 1, 1] * p[2, 2, 2] + p[2, 2, 1] * p[1, 1, 2] - p[2, 1, 1] * p[1, 2, 2] - p[1, 2, 1] * p[2, 1, 2]


def hyperdeterminant(P):
    """Cayley's hyperdeterminant of a 2x2x2 tensor."""
    p = _entries(_check_222(P))
    return (
        4 * p[1, 1, 1] * p[1, 2, 2] * p[2, 1, 2] * p[2, 2, 1]
        + 4 * p[1, 1, 2] * p[1, 2, 1] * p[2, 1, 1] * p[2, 2, 2]
        + p[1, 1, 1] ** 2 * p[2, 2, 2] ** 2
        + p[1, 2, 2] ** 2 * p[2, 1, 1] ** 2
        + p[1, 1, 2] ** 2 * p[2, 2, 1] ** 2
        - 2 * p[1, 1, 1] * p[1, 1, 2] * p[2, 2, 1] * p[2, 2, 2]
        - 2 * p[1, 1, 1] * p[1, 2, 1] * p[2, 1, 2] * p[2, 2, 2]
        - 2 * p[1, 1, 1] * p[1, 2, 2] * p[2, 1, 1] * p[2, 2, 2]
        + p[1, 2, 1] ** 2 * p[2, 1, 2] ** 2
        - 2 * p[1, 1, 2] * p[1, 2, 1] * p[2, 1, 2] * p[2, 2, 1]
        - 2 * p[1, 1, 2] * p[1, 2, 2] * p[2, 1, 1] * p[2, 2, 1]
        - 2 * p[1, 2, 1] * p[1, 2, 2] * p[2, 1, 1] * p[2, 1, 2]
    )


def mu(P):
    """The cubic with ``p_+++^2 Det(P) = mu^2 + 4 U12 U13 U23``."""
    P = _check_222(P)
    total = P.sum()
    m1, m2, m3 = P.sum(axis=(1, 2)), P.sum(axis=(0, 2)), P.sum(axis=(0, 1))
    m23, m13, m12 = P.sum(axis=0), P.sum(axis=1), P.sum(axis=2)
    return (
        total**2 * P[1, 1, 1]
        - total * (m1[1] * m23[1, 1] + m2[1] * m13[1, 1] + m3[1] * m12[1, 1])
        + 2 * m1[1] * m2[1] * m3[1]
    )


# ---------------------------------------------------------------- results


@dataclass
class DecisionResult:
    """Outcome of :func:`decide`.

    ``reason`` is ``"pass"``, ``"flattening-rank-exceeds-2"`` or
    ``"not-supermodular"``.
    """

    in_model: bool
    reason: str
    pi: tuple = None
    partition: tuple = None
    flattening_rank: int = None
    certificate: SupermodularCertificate = field(default=None, repr=False)

    @property
    def verdict(self):
        return "in-model" if self.in_model else "not-in-model"

    def __bool__(self):
        return self.in_model

    def to_dict(self):
        out = {"verdict": self.verdict, "reason": self.reason, "flattening_rank": self.flattening_rank}
        if self.pi is not None:
            out["pi"] = [list(p) for p in self.pi]
        if self.partition is not None:
            out["partition"] = [list(b) for b in self.partition]
        if self.certificate is not None and self.certificate.witness is not None:
            out["witness"] = self.certificate.to_dict()
        return out


@dataclass(frozen=True)
class SliceRankOne:
    axis: int
    index: int

    def to_dict(self):
        return {"kind": "slice_rank_one", "axis": self.axis, "index": self.index}


@dataclass(frozen=True)
class DoubleSliceDependent:
    axis: int
    i: int
    j: int

    def to_dict(self):
        return {"kind": "double_slice_dependent", "axis": self.axis, "i": self.i, "j": self.j}


@dataclass
class BinaryCompression:
    """``P = core * (C_1, ..., C_n)`` with ``core`` of format 2 x ... x 2.

    ``factors[r]`` is the nonnegative ``2 x d_r`` matrix ``C_r`` and
    ``pivots[r]`` the two 1-based indices of axis ``r`` kept in ``core``.
    """

    core: np.ndarray
    factors: list
    pivots: list

    def expand(self):
        out = self.core
        for r, C in enumerate(self.factors):
            out = np.moveaxis(np.tensordot(out, C, axes=([r], [0])), -1, r)
        return out


# ---------------------------------------------------------------- helpers


def _sqrt(x, mode):
    if mode == FLOAT:
        return float(np.sqrt(x))
    x = Fraction(x)
    rn, rd = isqrt(x.numerator), isqrt(x.denominator)
    if rn * rn != x.numerator or rd * rd != x.denominator:
        raise _Irrational(x)
    return Fraction(rn, rd)


def _unit(v, mode):
    """Scale ``v`` to coordinate sum 1; returns (unit vector, sum)."""
    total = v.sum()
    if (mode == EXACT and total == 0) or (mode == FLOAT and abs(total) <= 1e-300):
        raise DecompositionError("factor vector has zero coordinate sum")
    return v / total, total


def _uniform(d, mode):
    if mode == EXACT:
        return np.array([Fraction(1, d)] * d, dtype=object)
    return np.full(d, 1.0 / d)


def _inv2(M):
    det = _det2(M)
    return np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]], dtype=M.dtype) / det


def _rank1_factor(R):
    """``R ~ u w^T`` from the largest entry of a (numerically) rank-one matrix."""
    absR = np.abs(as_float(R))
    i, j = np.unravel_index(int(np.argmax(absR)), R.shape)
    if absR[i, j] == 0:
        raise DecompositionError("pencil produced a zero matrix at a root")
    return R[:, j].copy(), R[i, :] / R[i, j]


def _pencil(X, mode, tol):
    """Decompose a ``2 x 2 x M`` tensor of rank two by the pencil ``T - lambda S``.

    ``S`` is the sum of the slices along the last axis and ``T`` the slice
    least proportional to ``S``.  Returns two terms ``(u, w, c)`` with unit
    sum ``u, w`` and ``X = sum u (x) w (x) c``.
    """
    S = X.sum(axis=2)
    Sf = as_float(S)
    Xf = as_float(X)
    nS = np.linalg.norm(Sf)
    scores = [np.linalg.norm(Sf * np.linalg.norm(Xf[:, :, k]) - Xf[:, :, k] * nS) for k in range(X.shape[2])]
    T = X[:, :, int(np.argmax(scores))]

    det_s, det_t = _det2(S), _det2(T)
    cross = T[0, 0] * S[1, 1] + T[1, 1] * S[0, 0] - T[0, 1] * S[1, 0] - T[1, 0] * S[0, 1]
    disc = cross * cross - 4 * det_s * det_t
    if mode == FLOAT:
        scale = max(float(cross * cross), abs(float(det_s * det_t)), 1e-300)
        if disc < -tol * scale:
            raise DecompositionError("pencil has complex roots; tensor is not of real rank 2")
        if disc <= tol * tol * scale or abs(det_s) <= 1e-300:
            raise DecompositionError("pencil roots coincide; no unique rank-2 decomposition")
        root = _sqrt(max(disc, 0.0), mode)
        q = (cross + np.copysign(root, cross)) / 2
        lams = (q / det_s, det_t / q)
    else:
        if disc <= 0 or det_s == 0:
            raise DecompositionError("pencil roots are not real and distinct")
        root = _sqrt(disc, mode)
        lams = ((cross + root) / (2 * det_s), (cross - root) / (2 * det_s))

    terms = []
    for lam in lams:
        u, w = _rank1_factor(T - lam * S)
        terms.append((_unit(u, mode)[0], _unit(w, mode)[0]))
    U = np.column_stack([terms[0][0], terms[1][0]])
    W = np.column_stack([terms[0][1], terms[1][1]])
    if mode == EXACT:
        U, W = U.astype(object), W.astype(object)
    Ui, Wi = _inv2(U), _inv2(W)
    D = np.einsum("ai,ijk,bj->abk", Ui, X, Wi)
    return [(terms[0][0], terms[0][1], D[0, 0]), (terms[1][0], terms[1][1], D[1, 1])]


def _column_cone_generators(M, mode, tol):
    """Extreme rays of the cone spanned by the columns of a rank-2 matrix.

    Returns the two generators and the 2 x ncols nonnegative coefficient
    matrix expressing every column in them.
    """
    if mode == FLOAT:
        U = np.linalg.svd(M)[0][:, :2]
        coords = U.T @ M
    else:
        rows = None
        for i in range(M.shape[0]):
            for k in range(i + 1, M.shape[0]):
                if matrix_rank(M[[i, k], :]) == 2:
                    rows = [i, k]
                    break
            if rows:
                break
        coords = M[rows, :]
    norms = np.abs(as_float(coords)).sum(axis=0)
    live = [j for j in range(M.shape[1]) if norms[j] > (tol * norms.max() if mode == FLOAT else 0)]
    cross = lambda u, v: u[0] * v[1] - u[1] * v[0]  # noqa: E731
    lo = hi = live[0]
    for j in live[1:]:
        if cross(coords[:, j], coords[:, lo]) > 0:
            lo = j
        if cross(coords[:, hi], coords[:, j]) > 0:
            hi = j
    G = coords[:, [lo, hi]]
    coef = _inv2(G.astype(object) if mode == EXACT else G) @ coords
    g1, g2 = M[:, lo], M[:, hi]
    if mode == FLOAT:
        coef = np.where(coef < 0, 0.0, coef)
    return g1, g2, coef


def _zero_decomposition(shape, mode):
    zero = Fraction(0) if mode == EXACT else 0.0
    a = [_uniform(d, mode) for d in shape]
    return Rank2Decomposition(shape, a, [v.copy() for v in a], zero, zero, mode)


def _ordered(shape, mode, s, t, a, b, meta=None):
    """Build a decomposition in canonical term order.

    A zero-weight term goes second; otherwise the term whose concatenated
    factor vectors are lexicographically larger comes first.
    """
    key = lambda vecs: [float(x) for v in vecs for x in v]  # noqa: E731
    if (s == 0 and t != 0) or (s != 0 and t != 0 and key(b) > key(a)):
        s, t, a, b = t, s, b, a
    return Rank2Decomposition(shape, list(a), list(b), s, t, mode, meta or {})


# ---------------------------------------------------------------- matrices


def nonneg_matrix_rank2(M, tol=DEFAULT_TOL):
    """Nonnegative factorization ``M = s a_1 a_2^T + t b_1 b_2^T`` of a rank <= 2 matrix.

    The columns of ``M`` span a planar pointed cone; its two extreme rays
    serve as ``a_1, b_1`` and every column is a nonnegative combination of
    them.  A rank-one ``M`` gives ``t = 0`` (and ``b = a``).
    """
    M = check_tensor(M, nonnegative=True)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {M.shape}")
    mode = tensor_mode(M)
    r = matrix_rank(M, tol)
    if r > 2:
        raise NotInModelError(f"matrix rank {r} exceeds 2")
    if r == 0:
        return _zero_decomposition(M.shape, mode)
    if r == 1:
        norms = np.abs(as_float(M)).sum(axis=0)
        u, _ = _unit(M[:, int(np.argmax(norms))], mode)
        v = M.sum(axis=0)
        v_unit, s = _unit(v, mode)
        return Rank2Decomposition(M.shape, [u, v_unit], [u.copy(), v_unit.copy()], s, s * 0, mode)
    g1, g2, coef = _column_cone_generators(M, mode, tol)
    a1, sa = _unit(g1, mode)
    b1, sb = _unit(g2, mode)
    a2, wa = _unit(coef[0] * sa, mode)
    b2, wb = _unit(coef[1] * sb, mode)
    return _ordered(M.shape, mode, wa, wb, [a1, a2], [b1, b2])


# ---------------------------------------------------------------- 2x2x2


def _factor_out_rank_one_axis(P, tol):
    """First axis (0-based) whose flattening has rank <= 1, or None."""
    for ax in range(P.ndim):
        if axis_rank(P, ax + 1, tol) <= 1:
            return ax
    return None


def decompose_222(P, tol=DEFAULT_TOL, verify_tol=VERIFY_TOL):
    """Nonnegative rank-2 decomposition of a supermodular 2x2x2 tensor.

    If ``U12 U13 U23 > 0`` the hyperdeterminant is positive and the slice
    pencil has two real roots.  Otherwise one flattening has rank one and
    the tensor is ``v (x) P'`` with ``P'`` a nonnegative 2x2 matrix.
    Exact input stays exact unless a pencil root is irrational.
    """
    P = check_tensor(P, shape=(2, 2, 2), nonnegative=True)
    mode = tensor_mode(P)
    if find_pi(P, tol) is None:
        raise NotInModelError("tensor is not supermodular")
    U = u_quantities(P)
    total = float(P.sum())
    thresh = 0 if mode == EXACT else tol * total**4
    for name, (uu, u1, u2) in U.pairs().items():
        if float(uu) * float(u1) < -thresh or float(uu) * float(u2) < -thresh:
            raise DecompositionError(f"U{name} and its slice quantities differ in sign")
    degenerate = abs(float(U.product)) <= (0 if mode == EXACT else tol * total**6)
    branch = "pencil"
    if degenerate and _factor_out_rank_one_axis(P, tol) is not None:
        branch = "rank-one-flattening"
    try:
        D = _decompose_any(P, tol, verify_tol)
    except _Irrational:
        D = _decompose_any(as_float(P), tol, verify_tol)
    D.meta["branch"] = branch
    return D


# ---------------------------------------------------------------- compression


def _independent_columns(F, mode):
    if mode == EXACT:
        for j in range(F.shape[1]):
            for k in range(j + 1, F.shape[1]):
                if matrix_rank(F[:, [j, k]]) == 2:
                    return j, k
        raise ValueError("flattening has rank < 2")
    U = np.linalg.svd(F)[0][:, :2]
    proj = U.T @ F
    dets = np.abs(np.outer(proj[0], proj[1]) - np.outer(proj[1], proj[0]))
    j, k = np.unravel_index(int(np.argmax(dets)), dets.shape)
    return (int(j), int(k)) if j < k else (int(k), int(j))


def _extreme_pair(a, b, mode, tol):
    """Extreme rays of ``span(a, b)`` intersected with the orthant.

    Returns ``(a2, b2, p, q)`` with ``a2[q] == 0 < b2[q]`` and ``b2[p] == 0 < a2[p]``.
    """
    zero = Fraction(0) if mode == EXACT else 0.0

    def strip(v, ref):
        if mode == FLOAT:
            v = np.where(v < tol * ref, 0.0, v)
        return v

    pos_b = [i for i in range(len(b)) if b[i] > 0]
    q = min(pos_b, key=lambda i: a[i] / b[i])
    a2 = a - (a[q] / b[q]) * b
    a2[q] = zero
    a2 = strip(a2, float(np.max(as_float(a))))
    pos_a = [i for i in range(len(a2)) if a2[i] > 0]
    if not pos_a:
        raise DecompositionError("compression basis collapsed")
    p = min(pos_a, key=lambda i: b[i] / a2[i])
    b2 = b - (b[p] / a2[p]) * a2
    b2[p] = zero
    b2 = strip(b2, float(np.max(as_float(b))))
    return a2, b2, p, q


def compress_to_binary(P, tol=DEFAULT_TOL):
    """Write ``P`` as a 2 x ... x 2 core acted on by nonnegative ``2 x d_r`` matrices.

    Each axis flattening must have rank exactly two.  For every axis the
    two extreme rays ``a', b'`` of the nonnegative part of its column
    space are scaled to ``1`` at their pivot positions; the core is the
    subtensor at the pivots.
    """
    P = check_tensor(P, nonnegative=True)
    mode = tensor_mode(P)
    factors, pivots = [], []
    for ax, d in enumerate(P.shape):
        if axis_rank(P, ax + 1, tol) != 2:
            raise ValueError(f"axis {ax + 1} flattening does not have rank 2")
        if d == 2:
            one, zero = (Fraction(1), Fraction(0)) if mode == EXACT else (1.0, 0.0)
            factors.append(np.array([[one, zero], [zero, one]], dtype=object if mode == EXACT else float))
            pivots.append((1, 2))
            continue
        F = np.moveaxis(P, ax, 0).reshape(d, -1)
        j, k = _independent_columns(F, mode)
        a2, b2, p, q = _extreme_pair(F[:, j].copy(), F[:, k].copy(), mode, tol)
        a1, b1 = a2 / a2[p], b2 / b2[q]
        rows, piv = ((a1, b1), (p, q)) if p < q else ((b1, a1), (q, p))
        factors.append(np.vstack(rows))
        pivots.append((piv[0] + 1, piv[1] + 1))
    core = P[np.ix_(*[[i - 1 for i in pv] for pv in pivots])]
    return BinaryCompression(core, factors, pivots)


# ---------------------------------------------------------------- general case


def _decompose_binary_core(core, mode, tol):
    """Terms ``(weight, [vectors])`` for a 2 x ... x 2 core with all axis ranks 2."""
    m = core.ndim
    X = core if m == 3 else flatten(core, [[1], [2], list(range(3, m + 1))])
    out = []
    for u, w, c in _pencil(X, mode, tol):
        N = c.reshape((2,) * (m - 2))
        weight = N.sum()
        if mode == EXACT and weight == 0 or mode == FLOAT and abs(weight) <= 1e-300:
            raise DecompositionError("pencil produced a zero component")
        vecs = [u, w]
        for r in range(m - 2):
            marg = N.sum(axis=tuple(k for k in range(m - 2) if k != r)) if m > 3 else N
            vecs.append(marg / weight)
        out.append((weight, vecs))
    return out


def _decompose_any(P, tol, verify_tol):
    mode = tensor_mode(P)
    shape = P.shape
    if np.all(as_float(P) == 0):
        return _zero_decomposition(shape, mode)

    shared = {}
    Q, axes = P, list(range(P.ndim))
    while Q.ndim > 0:
        ax = _factor_out_rank_one_axis(Q, tol)
        if ax is None:
            break
        others = tuple(k for k in range(Q.ndim) if k != ax)
        shared[axes[ax]] = _unit(Q.sum(axis=others), mode)[0]
        Q = np.asarray(Q.sum(axis=ax), dtype=Q.dtype)
        del axes[ax]

    if Q.ndim == 0:
        terms = [(Q[()], []), (Q[()] * 0, [])]
    elif Q.ndim == 2:
        D2 = nonneg_matrix_rank2(Q, tol)
        terms = [(D2.s, D2.a), (D2.t, D2.b)]
    else:
        comp = compress_to_binary(Q, tol)
        terms = []
        for weight, vecs in _decompose_binary_core(comp.core, mode, tol):
            full = []
            for C, v in zip(comp.factors, vecs):
                vv, scale = _unit(C.T @ v, mode)
                weight = weight * scale
                full.append(vv)
            terms.append((weight, full))

    def assemble(vecs):
        it = iter(vecs)
        return [shared[r] if r in shared else next(it) for r in range(len(shape))]

    (s, va), (t, vb) = terms
    a = assemble(va)
    b = assemble(vb) if len(vb) == len(va) else list(a)
    D = _ordered(shape, mode, s, t, a, b)
    return _verify(D, P, verify_tol)


def _verify(D, P, verify_tol):
    mode = D.mode
    if mode == FLOAT:
        scale = scale_of(P)
        for vecs in (D.a, D.b):
            for r, v in enumerate(vecs):
                if np.any(v < -verify_tol):
                    raise DecompositionError(f"factor on axis {r + 1} has a negative entry {v.min()}")
                if np.any(v < 0):
                    v = np.clip(v, 0.0, None)
                    vecs[r] = v / v.sum()
        if D.s < -verify_tol * scale or D.t < -verify_tol * scale:
            raise DecompositionError("negative mixture weight")
        D.s, D.t = max(float(D.s), 0.0), max(float(D.t), 0.0)
        err = float(np.max(np.abs(tensor_from_rank2(D) - P))) / scale
        D.meta["relative_error"] = err
        if err > verify_tol:
            raise DecompositionError(f"reconstruction error {err:.3e} exceeds {verify_tol:.1e}")
    else:
        if any(np.any(v < 0) for v in D.a + D.b) or D.s < 0 or D.t < 0:
            raise DecompositionError("exact decomposition has a negative entry")
        if not np.all(tensor_from_rank2(D) == P):
            raise DecompositionError("exact decomposition does not reproduce the tensor")
        D.meta["relative_error"] = 0.0
    return D


def decompose(P, tol=DEFAULT_TOL, verify_tol=VERIFY_TOL, check=True):
    """Nonnegative rank-2 decomposition of any tensor in the model.

    Exact input is decomposed exactly when every pencil root is rational
    and otherwise in floating point.  The result is always verified: the
    reconstruction error (relative to the largest entry) must not exceed
    ``verify_tol``.  With ``check`` the input is first run through
    :func:`decide` and :class:`NotInModelError` is raised if it fails.
    The zero tensor gives ``s = t = 0`` with uniform vectors.
    """
    P = check_tensor(P, nonnegative=True)
    if check:
        result = decide(P, tol)
        if not result:
            raise NotInModelError(f"tensor is not in the model ({result.reason})", result)
    if P.ndim == 1:
        mode = tensor_mode(P)
        if np.all(as_float(P) == 0):
            return _zero_decomposition(P.shape, mode)
        v, s = _unit(P, mode)
        return Rank2Decomposition(P.shape, [v], [v.copy()], s, s * 0, mode, {"relative_error": 0.0})
    try:
        return _decompose_any(P, tol, verify_tol)
    except _Irrational:
        D = _decompose_any(as_float(P), tol, verify_tol)
        D.meta["exact_fallback"] = True
        return D


def decide(P, tol=DEFAULT_TOL, n_jobs=None):
    """Is the nonnegative rank of ``P`` at most two?

    For ``n >= 3`` this is flattening rank <= 2 together with
    supermodularity; for matrices only the rank matters.
    """
    P = check_tensor(P, nonnegative=True)
    if P.ndim == 1:
        return DecisionResult(True, "pass", flattening_rank=1 if np.any(as_float(P) != 0) else 0)
    frank, witness = 0, None
    for A, B in bipartitions(P.ndim):
        r = matrix_rank(flatten(P, [A, B]), tol)
        frank = max(frank, r)
        if r > 2:
            return DecisionResult(False, "flattening-rank-exceeds-2", partition=(A, B), flattening_rank=r)
    if P.ndim == 2:
        return DecisionResult(True, "pass", flattening_rank=frank)
    pi = find_pi(P, tol, n_jobs=n_jobs)
    if pi is None:
        cert = is_pi_supermodular(P, identity_pi(P.shape), tol)
        return DecisionResult(False, "not-supermodular", flattening_rank=frank, certificate=cert)
    return DecisionResult(True, "pass", pi=pi, flattening_rank=frank)


# ---------------------------------------------------------------- boundary


def _slices_proportional(S1, S2, tol):
    return matrix_rank(np.vstack([S1.reshape(-1), S2.reshape(-1)]), tol) <= 1


def classify_boundary(P, tol=BOUNDARY_TOL, include_double_slices=False, check=True):
    """Boundary components of the rank-2 model that contain ``P``.

    Reports every slice whose flattening rank is <= 1 and, with
    ``include_double_slices``, every pair of proportional slices along one
    axis (never for format 2x2x2, where those loci are not hypersurfaces).
    """
    P = check_tensor(P, nonnegative=True, min_order=3)
    if check and not decide(P, min(tol, DEFAULT_TOL)):
        raise NotInModelError("boundary classification needs a tensor in the model")
    Pf = P if tensor_mode(P) == EXACT else as_float(P)
    found = []
    for ax, d in enumerate(P.shape):
        for k in range(d):
            S = np.take(Pf, k, axis=ax)
            if _slice_rank_at_most_one(S, tol):
                found.append(SliceRankOne(ax + 1, k + 1))
    if include_double_slices and P.shape != (2, 2, 2):
        for ax, d in enumerate(P.shape):
            for i in range(d):
                for j in range(i + 1, d):
                    if _slices_proportional(np.take(Pf, i, axis=ax), np.take(Pf, j, axis=ax), tol):
                        found.append(DoubleSliceDependent(ax + 1, i + 1, j + 1))
    return found


def _slice_rank_at_most_one(S, tol):
    if S.ndim == 1:
        return True
    return all(matrix_rank(flatten(S, [A, B]), tol) <= 1 for A, B in bipartitions(S.ndim))


# ---------------------------------------------------------------- Jukes-Cantor slice


def jukes_cantor_tensor(x, y, z, w):
    """2x2x2 tensor with slices ``[[x, y], [z, w]]`` and ``[[w, z], [y, x]]`` on axis 1."""
    vals = [x, y, z, w]
    exact = not any(isinstance(v, (float, np.floating)) for v in vals)
    if exact:
        x, y, z, w = (Fraction(v) for v in vals)
    P = np.array([[[x, y], [z, w]], [[w, z], [y, x]]], dtype=object if exact else float)
    return P


def jukes_cantor_factors(x, y, z, w):
    """The four linear forms whose product is the hyperdeterminant on the slice."""
    return (x + y + z + w, x + y - z - w, x - y + z - w, x - y - z + w)


def jukes_cantor_det(x, y, z, w):
    f0, f1, f2, f3 = jukes_cantor_factors(x, y, z, w)
    return f0 * f1 * f2 * f3


def jukes_cantor_cell(x, y, z, w, tol=DEFAULT_TOL):
    """Canonical toric cells containing the Jukes-Cantor point (possibly empty)."""
    return toric_cells(jukes_cantor_tensor(x, y, z, w), tol)


def in_bipyramid_region(x, y, z, w):
    """Signs of the last three linear forms have positive product (or one vanishes)."""
    _, f1, f2, f3 = jukes_cantor_factors(x, y, z, w)
    return f1 * f2 * f3 >= 0
