"""Multiplicative supermodularity with respect to a tuple of permutations.

A permutation tuple ``pi`` holds one permutation per axis in one-line,
1-based notation, e.g. ``((1, 2), (2, 1), (1, 2))``.  It orders each axis
by ``pi_r(i)``; ``P`` is ``pi``-supermodular when

    p_i * p_j <= p_{i meet j} * p_{i join j}

for all multi-indices ``i, j``, meet and join being the coordinatewise
minimum and maximum in that order.  A tuple and its total reversal define
the same condition, so a cell is named by the lexicographically smaller of
the two.
"""
from dataclasses import dataclass
from itertools import permutations, product
from math import factorial, prod

import numpy as np
from joblib import Parallel, delayed

from .exceptions import SearchTooLargeError
from .tensor import DEFAULT_TOL
from .validation import EXACT, FLOAT, as_float, check_tensor, tensor_mode

MAX_CELLS = 10**6


def identity_pi(shape):
    return tuple(tuple(range(1, d + 1)) for d in shape)


def check_pi(pi, shape):
    pi = tuple(tuple(int(x) for x in p) for p in pi)
    if len(pi) != len(shape):
        raise ValueError(f"need {len(shape)} permutations, got {len(pi)}")
    for r, (p, d) in enumerate(zip(pi, shape)):
        if sorted(p) != list(range(1, d + 1)):
            raise ValueError(f"{p} is not a permutation of 1..{d} (axis {r + 1})")
    return pi


def reverse_pi(pi):
    """Compose every permutation with the order-reversing map."""
    return tuple(tuple(len(p) + 1 - x for x in p) for p in pi)


def canonical_pi(pi):
    return min(tuple(map(tuple, pi)), reverse_pi(pi))


def inverse_pi(pi):
    out = []
    for p in pi:
        inv = [0] * len(p)
        for i, x in enumerate(p, start=1):
            inv[x - 1] = i
        out.append(tuple(inv))
    return tuple(out)


def pi_meet(i, j, pi):
    """Multi-index ``k`` with ``pi_r(k_r) = min(pi_r(i_r), pi_r(j_r))``."""
    if not len(i) == len(j) == len(pi):
        raise ValueError("multi-indices and permutation tuple disagree in length")
    return tuple(a if p[a - 1] <= p[b - 1] else b for a, b, p in zip(i, j, pi))


def pi_join(i, j, pi):
    if not len(i) == len(j) == len(pi):
        raise ValueError("multi-indices and permutation tuple disagree in length")
    return tuple(b if p[a - 1] <= p[b - 1] else a for a, b, p in zip(i, j, pi))


def apply_pi(P, pi):
    """Relabel entries so that ``out[pi(i)] = P[i]``.

    ``P`` is ``pi``-supermodular iff ``apply_pi(P, pi)`` is supermodular
    for the identity tuple.
    """
    P = check_tensor(P)
    pi = check_pi(pi, P.shape)
    inv = inverse_pi(pi)
    return P[np.ix_(*[np.asarray(q) - 1 for q in inv])]


def induced_pi(pi, partition):
    """Permutations on the composite axes of ``flatten(P, partition)``.

    Composite index ``alpha`` (lexicographic in the original axes) is sent
    to the lexicographic position of ``pi`` applied coordinatewise.
    """
    blocks = sorted((tuple(sorted(b)) for b in partition), key=lambda b: b[0])
    out = []
    for block in blocks:
        dims = [len(pi[a - 1]) for a in block]
        images = []
        for combo in product(*[range(1, d + 1) for d in dims]):
            mapped = [pi[a - 1][c - 1] - 1 for a, c in zip(block, combo)]
            images.append(int(np.ravel_multi_index(mapped, dims)) + 1)
        out.append(tuple(images))
    return tuple(out)


@dataclass
class SupermodularCertificate:
    """Verdict of a supermodularity check.

    On failure ``witness`` holds 1-based multi-indices ``(i, j, k, l)`` with
    ``k = i meet j``, ``l = i join j`` and ``p_i p_j > p_k p_l``.
    """

    passed: bool
    pi: tuple
    witness: tuple = None
    comparisons: int = 0

    def __bool__(self):
        return self.passed

    def to_dict(self):
        out = {"verdict": "pass" if self.passed else "fail", "pi": [list(p) for p in self.pi]}
        if self.witness is not None:
            out["witness"] = dict(zip("ijkl", ([int(x) for x in w] for w in self.witness)))
        return out


def _violation(lhs, rhs, mode, tol, scale):
    """Boolean array: ``lhs > rhs`` beyond tolerance."""
    if mode == FLOAT:
        return lhs - rhs > tol * scale
    return np.asarray(lhs > rhs, dtype=bool)


def _witness(Q, pi, i, j):
    """Map identity-lattice indices of ``Q = apply_pi(P, pi)`` back to ``P``."""
    inv = inverse_pi(pi)
    k = tuple(min(a, b) for a, b in zip(i, j))
    l = tuple(max(a, b) for a, b in zip(i, j))
    back = lambda m: tuple(inv[r][m[r]] for r in range(len(m)))  # noqa: E731
    return back(i), back(j), back(k), back(l)


def _prepare(P, pi, tol):
    P = check_tensor(P, nonnegative=True)
    pi = check_pi(pi, P.shape)
    Q = apply_pi(P, pi)
    mode = tensor_mode(P)
    scale = float(np.max(Q)) ** 2 if mode == FLOAT and Q.size else 1.0
    return P, pi, Q, mode, scale


def is_pi_supermodular_full(P, pi, tol=DEFAULT_TOL):
    """Check every pair of multi-indices (``O(N^2)``)."""
    P, pi, Q, mode, scale = _prepare(P, pi, tol)
    N = Q.size
    coords = np.array(np.unravel_index(np.arange(N), Q.shape)).T
    a, b = np.triu_indices(N, k=1)
    ca, cb = coords[a], coords[b]
    # comparable pairs give p_i p_j <= p_i p_j; skip them
    crossing = np.any(ca < cb, axis=1) & np.any(ca > cb, axis=1)
    a, b, ca, cb = a[crossing], b[crossing], ca[crossing], cb[crossing]
    meet = np.ravel_multi_index(np.minimum(ca, cb).T, Q.shape)
    join = np.ravel_multi_index(np.maximum(ca, cb).T, Q.shape)
    q = Q.reshape(-1)
    bad = _violation(q[a] * q[b], q[meet] * q[join], mode, tol, scale)
    hits = np.flatnonzero(bad)
    if hits.size:
        h = hits[0]
        i = tuple(int(x) for x in ca[h])
        j = tuple(int(x) for x in cb[h])
        return SupermodularCertificate(False, pi, _witness(Q, pi, i, j), int(a.size))
    return SupermodularCertificate(True, pi, None, int(a.size))


def _facet_checks(Q):
    """Yield (lhs, rhs, index-builder) blocks for pairs differing in two axes."""
    n = Q.ndim
    for r in range(n):
        for s in range(r + 1, n):
            dr, ds = Q.shape[r], Q.shape[s]
            X = np.moveaxis(Q, (r, s), (0, 1)).reshape(dr, ds, -1)
            xs = [(x, x2) for x in range(dr) for x2 in range(x + 1, dr)]
            ys = [(y, y2) for y in range(ds) for y2 in range(y + 1, ds)]
            if not xs or not ys:
                continue
            x, x2 = np.array(xs).T
            y, y2 = np.array(ys).T
            x, x2 = x[:, None], x2[:, None]
            y, y2 = y[None, :], y2[None, :]
            lhs = X[x, y2] * X[x2, y]
            rhs = X[x, y] * X[x2, y2]
            yield r, s, X.shape[2], (x, x2, y, y2), lhs, rhs


def is_pi_supermodular_facets(P, pi, tol=DEFAULT_TOL):
    """Check only the pairs of multi-indices that differ in exactly two positions.

    Sound and complete for strictly positive tensors; tensors with a zero
    entry are refused (use :func:`is_pi_supermodular_full`).
    """
    P, pi, Q, mode, scale = _prepare(P, pi, tol)
    if np.any(Q == 0):
        raise ValueError("facet check requires a strictly positive tensor")
    count = 0
    for r, s, m, (x, x2, y, y2), lhs, rhs in _facet_checks(Q):
        bad = _violation(lhs, rhs, mode, tol, scale)
        count += bad.size
        hits = np.argwhere(bad)
        if len(hits):
            u, v, w = hits[0]
            rest_shape = [d for k, d in enumerate(Q.shape) if k not in (r, s)]
            rest = list(np.unravel_index(w, rest_shape)) if rest_shape else []
            i, j = list(rest), list(rest)
            for pos, val_i, val_j in sorted([(r, x[u, 0], x2[u, 0]), (s, y2[0, v], y[0, v])]):
                i.insert(pos, int(val_i))
                j.insert(pos, int(val_j))
            return SupermodularCertificate(False, pi, _witness(Q, pi, tuple(i), tuple(j)), count)
    return SupermodularCertificate(True, pi, None, count)


def facet_comparison_count(shape):
    """Number of comparisons made by :func:`is_pi_supermodular_facets`."""
    total = 0
    n = len(shape)
    for r in range(n):
        for s in range(r + 1, n):
            rest = prod(d for k, d in enumerate(shape) if k not in (r, s))
            total += (shape[r] * (shape[r] - 1) // 2) * (shape[s] * (shape[s] - 1) // 2) * rest
    return total


def facet_count_binary(n):
    """``n(n-1)2^(n-3)``: the two-faces of the ``n``-cube."""
    if n < 3:
        raise ValueError("facet count is defined for n >= 3")
    return n * (n - 1) * 2 ** (n - 3)


def is_pi_supermodular(P, pi, tol=DEFAULT_TOL):
    """Facet check on strictly positive tensors, full check otherwise."""
    P = check_tensor(P, nonnegative=True)
    if np.all(P > 0):
        return is_pi_supermodular_facets(P, pi, tol)
    return is_pi_supermodular_full(P, pi, tol)


def n_cells(shape):
    """``d_1! ... d_n! / 2`` (1 if every axis has a single index)."""
    total = prod(factorial(d) for d in shape)
    return max(total // 2, 1)


def canonical_tuples(shape, limit=MAX_CELLS):
    """Canonical permutation tuples in lexicographic order."""
    if n_cells(shape) > limit:
        raise SearchTooLargeError(
            f"{n_cells(shape)} toric cells for shape {tuple(shape)} exceeds limit {limit}"
        )
    for pi in product(*[permutations(range(1, d + 1)) for d in shape]):
        if pi <= reverse_pi(pi):
            yield pi


# Float screening margin for exact tensors.  Rounding in the float products
# is ~1e-16 relative, so a violation this large is a violation exactly.
_SCREEN_TOL = 1e-9


def _passes(P, screen, pi, tol):
    if screen is not None and not is_pi_supermodular(screen, pi, _SCREEN_TOL):
        return False
    return bool(is_pi_supermodular(P, pi, tol))


def _screen(P):
    return as_float(P) if tensor_mode(P) == EXACT else None


def find_pi(P, tol=DEFAULT_TOL, n_jobs=None, limit=MAX_CELLS):
    """Lexicographically smallest canonical ``pi`` for which ``P`` passes, or None."""
    P = check_tensor(P, nonnegative=True)
    tuples = canonical_tuples(P.shape, limit)
    if n_jobs in (None, 1):
        screen = _screen(P)
        for pi in tuples:
            if _passes(P, screen, pi, tol):
                return pi
        return None
    cells = toric_cells(P, tol, n_jobs=n_jobs, limit=limit)
    return cells[0] if cells else None


def toric_cells(P, tol=DEFAULT_TOL, n_jobs=None, limit=MAX_CELLS):
    """All canonical ``pi`` for which ``P`` passes, in lexicographic order."""
    P = check_tensor(P, nonnegative=True)
    tuples = list(canonical_tuples(P.shape, limit))
    screen = _screen(P)
    if n_jobs in (None, 1):
        verdicts = [_passes(P, screen, pi, tol) for pi in tuples]
    else:
        verdicts = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(_passes)(P, screen, pi, tol) for pi in tuples
        )
    return [pi for pi, ok in zip(tuples, verdicts) if ok]


def four_function_check(P, pi, C, C2, tol=DEFAULT_TOL):
    """Ahlswede-Daykin inequality ``p_C p_C' <= p_{C join C'} p_{C meet C'}``.

    ``C`` and ``C2`` are collections of 1-based multi-indices; ``p_C`` sums
    the entries over a collection.  ``P`` must be ``pi``-supermodular.
    """
    P = check_tensor(P, nonnegative=True)
    pi = check_pi(pi, P.shape)
    if not is_pi_supermodular_full(P, pi, tol):
        raise ValueError("four-function check requires a pi-supermodular tensor")
    C, C2 = {tuple(i) for i in C}, {tuple(j) for j in C2}
    if not C or not C2:
        raise ValueError("collections must be nonempty")
    for idx in C | C2:
        if len(idx) != P.ndim or any(not 1 <= x <= d for x, d in zip(idx, P.shape)):
            raise IndexError(f"multi-index {idx} out of range for shape {P.shape}")
    meets = {pi_meet(i, j, pi) for i in C for j in C2}
    joins = {pi_join(i, j, pi) for i in C for j in C2}
    total = lambda coll: sum(P[tuple(x - 1 for x in idx)] for idx in coll)  # noqa: E731
    lhs = total(C) * total(C2)
    rhs = total(joins) * total(meets)
    if tensor_mode(P) == FLOAT:
        return bool(lhs <= rhs + tol * max(float(np.sum(P)) ** 2, 1.0))
    return bool(lhs <= rhs)


def _angular_ranks(points):
    """1-based ranks of 2-d points by angle around their mean direction."""
    if points.shape[1] < 2:
        return tuple(range(1, len(points) + 1))
    norms = np.linalg.norm(points, axis=1)
    live = norms > 0
    ref = np.mean(points[live] / norms[live, None], axis=0) if live.any() else np.array([1.0, 0.0])
    ang = np.arctan2(points[:, 1], points[:, 0]) - np.arctan2(ref[1], ref[0])
    ang = (ang + np.pi) % (2 * np.pi) - np.pi
    ang[~live] = 0.0
    ranks = np.argsort(np.argsort(ang, kind="stable"), kind="stable") + 1
    return tuple(int(x) for x in ranks)


def rank2_matrix_pi(Q, tol=DEFAULT_TOL):
    """Row/column orders making a nonnegative rank <= 2 matrix supermodular.

    Rows and columns are sorted by angle inside the two-dimensional
    row/column space; the column order is reversed if needed.  Returns a
    permutation pair, or None if neither orientation passes.
    """
    Q = check_tensor(Q, nonnegative=True)
    if Q.ndim != 2:
        raise ValueError("expected a matrix")
    U, s, Vt = np.linalg.svd(np.asarray(Q, dtype=float))
    k = min(2, len(s))
    rows = _angular_ranks(U[:, :k] * s[:k])
    cols = _angular_ranks(Vt.T[:, :k] * s[:k])
    for cand in ((rows, cols), (rows, tuple(len(cols) + 1 - c for c in cols))):
        if is_pi_supermodular_full(Q, cand, tol):
            return cand
    return None
