"""Two nonnegative rank-3 case studies.

``3 x 3 x 2``: the parametrization is generically finite-to-one, slices
``P_1, P_2`` are simultaneously diagonalized by the factor matrices, and a
tensor with invertible slices is in the model iff the eigensystems of
``P_1 P_2^-1`` and ``P_1^T P_2^-T`` are nonnegative.

``2 x 2 x 2 x 2``: the Zariski closure of the rank-3 model is cut out by
the determinants of two of the three 4x4 flattenings.
"""
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exceptions import RefusedInputError
from .tensor import DEFAULT_TOL, flatten, outer
from .validation import EXACT, FLOAT, as_float, check_tensor, scale_of, tensor_mode

VERIFY_TOL = 1e-8
BOUNDARY_TOL = 1e-7

SHAPE_332 = (3, 3, 2)


@dataclass
class Rank3Params332:
    """``pi_1 a_1(x)a_2(x)a_3 + pi_2 b_1(x)b_2(x)b_3 + pi_3 c_1(x)c_2(x)c_3``.

    ``a``, ``b``, ``c`` are lists ``[v_1, v_2, v_3]`` of unit-sum vectors
    of lengths 3, 3 and 2.
    """

    pi: np.ndarray
    a: list
    b: list
    c: list
    mode: str = None

    def __post_init__(self):
        pi = check_tensor(self.pi, shape=(3,), nonnegative=True)
        mode = self.mode or tensor_mode(pi)
        self.pi = check_tensor(pi, mode=mode)
        for name in "abc":
            vecs = getattr(self, name)
            if len(vecs) != 3:
                raise ValueError(f"{name} needs three factor vectors")
            setattr(self, name, [check_tensor(v, mode=mode, shape=(d,), nonnegative=True) for v, d in zip(vecs, SHAPE_332)])
        self.mode = mode
        for name, vecs in (("pi", [self.pi]), ("a", self.a), ("b", self.b), ("c", self.c)):
            for v in vecs:
                s = v.sum()
                if (mode == EXACT and s != 1) or (mode == FLOAT and abs(s - 1) > 1e-9):
                    raise ValueError(f"vectors in {name} must sum to 1, got {s}")

    def components(self):
        return [(self.pi[0], self.a), (self.pi[1], self.b), (self.pi[2], self.c)]

    def to_dict(self):
        conv = str if self.mode == EXACT else float
        vec = lambda v: [conv(x) for x in v]  # noqa: E731
        return {"pi": vec(self.pi), "a": [vec(v) for v in self.a], "b": [vec(v) for v in self.b], "c": [vec(v) for v in self.c]}


def param_332(params):
    """Evaluate the three-term parametrization."""
    return sum(w * outer(vecs) for w, vecs in params.components())


def _simplex_point(rng, d, mode, denominator):
    if mode == EXACT:
        cuts = sorted(int(x) for x in rng.integers(1, denominator, d - 1))
        parts = np.diff([0] + cuts + [denominator])
        return np.array([Fraction(int(p), denominator) for p in parts], dtype=object)
    return rng.dirichlet(np.ones(d))


def random_params_332(rng=None, mode=FLOAT, denominator=101):
    """Uniform (float) or grid (exact) random parameters."""
    rng = np.random.default_rng(rng)
    pick = lambda d: _simplex_point(rng, d, mode, denominator)  # noqa: E731
    return Rank3Params332(pick(3), [pick(d) for d in SHAPE_332], [pick(d) for d in SHAPE_332], [pick(d) for d in SHAPE_332], mode)


def theta_332(params):
    """The 17 free coordinates (last coordinate of every vector dropped)."""
    out = list(params.pi[:2])
    for _, vecs in params.components():
        for v in vecs:
            out.extend(v[:-1])
    return np.array([float(x) for x in out])


def from_theta_332(theta):
    theta = np.asarray(theta, dtype=float)
    it = iter(theta)

    def take(d):
        head = [next(it) for _ in range(d - 1)]
        return np.array(head + [1 - sum(head)])

    pi = take(3)
    a, b, c = ([take(d) for d in SHAPE_332] for _ in range(3))
    return pi, a, b, c


def param_332_theta(theta):
    """Parametrization on free coordinates (no validation, for Jacobians)."""
    pi, a, b, c = from_theta_332(theta)
    return pi[0] * outer(a) + pi[1] * outer(b) + pi[2] * outer(c)


# ---------------------------------------------------------------- eigen membership


@dataclass
class EigenMembershipReport:
    """Eigensystems of ``P_1 P_2^-1`` (``left``) and ``P_1^T P_2^-T`` (``right``)."""

    verdict: bool
    reason: str
    left_eigenvalues: np.ndarray
    left_eigenvectors: np.ndarray
    right_eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray
    decomposition: Rank3Params332 = None
    relative_error: float = None
    meta: dict = field(default_factory=dict, repr=False)

    def __bool__(self):
        return self.verdict

    def to_dict(self):
        def arr(x):
            x = np.asarray(x)
            if np.iscomplexobj(x):
                return {"real": np.real(x).tolist(), "imag": np.imag(x).tolist()}
            return x.tolist()

        return {
            "verdict": "pass" if self.verdict else "fail",
            "reason": self.reason,
            "left": {"eigenvalues": arr(self.left_eigenvalues), "eigenvectors": arr(self.left_eigenvectors)},
            "right": {"eigenvalues": arr(self.right_eigenvalues), "eigenvectors": arr(self.right_eigenvectors)},
            "decomposition": self.decomposition.to_dict() if self.decomposition is not None else None,
            "relative_error": self.relative_error,
        }


def _slices(P):
    return P[:, :, 0], P[:, :, 1]


def _check_slices(P, tol):
    """Refuse nearly singular slices (relative smallest singular value)."""
    for k, S in enumerate(_slices(P)):
        sv = np.linalg.svd(S, compute_uv=False)
        if sv[0] == 0 or sv[-1] / sv[0] <= tol:
            raise RefusedInputError(f"slice {k + 1} is singular; membership is not decided at such points")


def _eigensystem(M, tol):
    """Real eigensystem sorted by eigenvalue; columns normalized so the largest entry is +1."""
    vals, vecs = np.linalg.eig(M)
    scale = max(np.max(np.abs(vals)), 1e-300)
    if np.max(np.abs(np.imag(vals))) > tol * scale:
        return vals, vecs, False
    vals, vecs = np.real(vals), np.real(vecs)
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    for j in range(vecs.shape[1]):
        k = int(np.argmax(np.abs(vecs[:, j])))
        vecs[:, j] = vecs[:, j] / vecs[k, j]
    return vals, vecs, True


def _eigen_data(P, tol):
    Pf = as_float(P)
    _check_slices(Pf, tol)
    P1, P2 = _slices(Pf)
    left = _eigensystem(P1 @ np.linalg.inv(P2), tol)
    right = _eigensystem(P1.T @ np.linalg.inv(P2).T, tol)
    return Pf, left, right


def _polish(P, A, B, W, sweeps=5):
    """A few alternating least-squares sweeps on ``sum_r A_r (x) B_r (x) W_r``.

    The eigenvectors carry errors of order cond * eps; polishing removes
    most of it.  The polished factors are kept only if they stay nonnegative.
    """
    A1, B1, W1 = A.copy(), B.copy(), W.copy()
    for _ in range(sweeps):
        A1 = np.einsum("ijk,jr,rk->ir", P, B1, W1) @ np.linalg.pinv((B1.T @ B1) * (W1 @ W1.T))
        B1 = np.einsum("ijk,ir,rk->jr", P, A1, W1) @ np.linalg.pinv((A1.T @ A1) * (W1 @ W1.T))
        W1 = (np.linalg.pinv((A1.T @ A1) * (B1.T @ B1)) @ np.einsum("ijk,ir,jr->rk", P, A1, B1))
    if min(A1.min(), B1.min(), W1.min()) < 0:
        return A, B, W
    sa, sb = A1.sum(axis=0), B1.sum(axis=0)
    return A1 / sa, B1 / sb, W1 * (sa * sb)[:, None]


def eigen_membership_332(P, tol=DEFAULT_TOL, verify_tol=VERIFY_TOL):
    """Membership in the 3x3x2 nonnegative rank-3 model via simultaneous diagonalization.

    Raises :class:`RefusedInputError` for singular slices and for repeated
    eigenvalues, where the criterion does not decide membership.  Exact
    input is evaluated in floating point.
    """
    P = check_tensor(P, shape=SHAPE_332)
    Pf, (lv, lV, lreal), (rv, rV, rreal) = _eigen_data(P, tol)

    def report(ok, reason, **kw):
        return EigenMembershipReport(ok, reason, lv, lV, rv, rV, **kw)

    if not (lreal and rreal):
        return report(False, "complex-eigenvalues")
    scale = max(np.max(np.abs(lv)), 1e-300)
    pair_scale = np.maximum(np.abs(lv[1:]), np.abs(lv[:-1]))
    if np.any(np.diff(lv) <= np.sqrt(tol) * np.maximum(pair_scale, tol * scale)):
        raise RefusedInputError("repeated eigenvalue; the factor matrices are not determined")
    if np.min(lv) < -tol * scale or np.min(rv) < -tol * scale:
        return report(False, "negative-eigenvalue")
    if np.any(lV < -tol) or np.any(rV < -tol):
        return report(False, "mixed-sign-eigenvector")

    A = np.clip(lV, 0, None)
    B = np.clip(rV, 0, None)
    A, B = A / A.sum(axis=0), B / B.sum(axis=0)
    Ai, Bi = np.linalg.inv(A), np.linalg.inv(B)
    W = np.stack([np.diag(Ai @ S @ Bi.T) for S in _slices(Pf)], axis=1)  # 3 x 2
    if np.any(W < -tol * scale_of(Pf)):
        return report(False, "negative-weight")
    W = np.clip(W, 0, None)
    A, B, W = _polish(Pf, A, B, W)
    weights = W.sum(axis=1)
    total = weights.sum()
    if np.any(weights <= 0):
        return report(False, "zero-weight")
    third = W / weights[:, None]
    decomp = Rank3Params332(
        weights / total,
        [A[:, 0], B[:, 0], third[0]],
        [A[:, 1], B[:, 1], third[1]],
        [A[:, 2], B[:, 2], third[2]],
        FLOAT,
    )
    recon = total * param_332(decomp)
    err = float(np.max(np.abs(recon - Pf))) / scale_of(Pf)
    if err > verify_tol:
        return report(False, "reconstruction-failed", relative_error=err)
    out = report(True, "pass", decomposition=decomp, relative_error=err)
    out.meta["total"] = float(total)
    return out


# ---------------------------------------------------------------- K polynomial

# Degree-6 polynomial defining the (b) component with zero third
# coordinate.  Each row: coefficient, then the six entries p_ijk.
_K_TABLE = """
+1 111 212 321 321 332 332
-2 111 212 321 322 331 332
+1 111 212 322 322 331 331
-1 111 222 311 321 332 332
+1 111 222 311 322 331 332
-1 111 222 312 322 331 331
+1 111 222 312 321 331 332
+1 111 232 311 321 322 332
-1 112 211 321 321 332 332
-1 111 232 311 322 322 331
+1 111 232 312 321 322 331
-1 111 232 312 321 321 332
+2 112 211 321 322 331 332
-1 112 211 322 322 331 331
+1 112 221 311 321 332 332
-1 112 221 311 322 331 332
-1 112 221 312 321 331 332
+1 112 221 312 322 331 331
-1 112 231 311 321 322 332
+1 112 231 311 322 322 331
+1 112 231 312 321 321 332
-1 112 231 312 321 322 331
-1 121 212 311 321 332 332
+1 121 212 311 322 331 332
+1 121 212 312 321 331 332
-1 121 212 312 322 331 331
+1 121 222 311 311 332 332
-2 121 222 311 312 331 332
+1 121 222 312 312 331 331
-1 121 232 311 311 322 332
+1 121 232 311 312 321 332
+1 121 232 311 312 322 331
-1 121 232 312 312 321 331
+1 122 211 311 321 332 332
-1 122 211 311 322 331 332
-1 122 211 312 321 331 332
+1 122 211 312 322 331 331
-1 122 221 311 311 332 332
+2 122 221 311 312 331 332
-1 122 221 312 312 331 331
+1 122 231 311 311 322 332
-1 122 231 311 312 321 332
-1 122 231 311 312 322 331
+1 122 231 312 312 321 331
+1 131 212 311 321 322 332
-1 131 212 311 322 322 331
-1 131 212 312 321 321 332
+1 131 212 312 321 322 331
-1 131 222 311 311 322 332
+1 131 222 311 312 321 332
+1 131 222 311 312 322 331
-1 131 222 312 312 321 331
+1 131 232 311 311 322 322
-2 131 232 311 312 321 322
+1 131 232 312 312 321 321
-1 132 211 311 321 322 332
+1 132 211 311 322 322 331
+1 132 211 312 321 321 332
-1 132 211 312 321 322 331
+1 132 221 311 311 322 332
-1 132 221 311 312 321 332
-1 132 221 311 312 322 331
+1 132 221 312 312 321 331
-1 132 231 311 311 322 322
+2 132 231 311 312 321 322
-1 132 231 312 312 321 321
"""


def _parse_k_table(text):
    terms = []
    for line in text.strip().splitlines():
        coef, *idx = line.split()
        terms.append((int(coef), [tuple(int(ch) - 1 for ch in code) for code in idx]))
    return terms


K_TERMS = _parse_k_table(_K_TABLE)


def k_polynomial(P):
    """Evaluate ``K`` (exact for exact input)."""
    P = check_tensor(P, shape=SHAPE_332)
    total = 0
    for coef, idx in K_TERMS:
        term = coef
        for i in idx:
            term = term * P[i]
        total = total + term
    return total


def _det3(M):
    return (
        M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
        - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
        + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])
    )


def k_factorization(params):
    """``K`` on a parameter point, in product form.

    The product carries a leading minus sign: with the determinant
    orientations used here it equals ``k_polynomial(param_332(params))``
    exactly.
    """
    pi, a, b, c = params.pi, params.a, params.b, params.c
    cols = lambda i: [[a[i][r], b[i][r], c[i][r]] for r in range(3)]  # noqa: E731
    return -(
        pi[0] ** 2 * pi[1] ** 2 * pi[2] ** 2
        * a[0][2] * b[0][2] * c[0][2]
        * (a[2][0] * b[2][1] - a[2][1] * b[2][0])
        * (a[2][0] * c[2][1] - a[2][1] * c[2][0])
        * (b[2][0] * c[2][1] - b[2][1] * c[2][0])
        * _det3(cols(0))
        * _det3(cols(1)) ** 2
    )


# ---------------------------------------------------------------- boundary


@dataclass
class Boundary332Report:
    """Fired components ``("a", k)``, ``("b", i)``, ``("c", j)``."""

    components: list
    eigen_checked: bool
    slice_ratios: tuple

    def to_dict(self):
        return {
            "components": [{"kind": kind, "index": idx} for kind, idx in self.components],
            "eigen_checked": self.eigen_checked,
            "slice_ratios": list(self.slice_ratios),
        }


def boundary_332(P, tol=BOUNDARY_TOL):
    """Which of the eight boundary hypersurfaces contain ``P``.

    (a) slice ``k`` singular; (b) an eigenvector of ``P_1 P_2^-1`` with a
    vanishing ``i``-th coordinate; (c) the same for ``P_1^T P_2^-T``.
    With a singular slice the eigen checks are skipped.
    """
    P = check_tensor(P, shape=SHAPE_332)
    Pf = as_float(P)
    ratios = []
    found = []
    for k, S in enumerate(_slices(Pf)):
        sv = np.linalg.svd(S, compute_uv=False)
        ratio = sv[-1] / sv[0] if sv[0] > 0 else 0.0
        ratios.append(float(ratio))
        if ratio <= tol:
            found.append(("a", k + 1))
    if found:
        return Boundary332Report(found, False, tuple(ratios))
    P1, P2 = _slices(Pf)
    for kind, M in (("b", P1 @ np.linalg.inv(P2)), ("c", P1.T @ np.linalg.inv(P2).T)):
        _, vecs, real = _eigensystem(M, tol)
        if not real:
            continue
        for i in range(3):
            if np.any(np.abs(vecs[i, :]) <= tol):
                found.append((kind, i + 1))
    return Boundary332Report(found, True, tuple(ratios))


def singular_locus_332(params, tol=DEFAULT_TOL):
    """Types of singular parameter points: zero weight, equal third factors, dependent columns."""
    found = []
    if float(min(params.pi)) <= tol:
        found.append("zero-weight")
    thirds = [params.a[2], params.b[2], params.c[2]]
    for i in range(3):
        for j in range(i + 1, 3):
            if np.max(np.abs(as_float(thirds[i] - thirds[j]))) <= tol:
                found.append("equal-third-factors")
                break
        else:
            continue
        break
    for r in range(2):
        cols = np.column_stack([as_float(params.a[r]), as_float(params.b[r]), as_float(params.c[r])])
        if abs(np.linalg.det(cols)) <= tol:
            found.append(f"dependent-axis-{r + 1}")
    return found


# ---------------------------------------------------------------- 2x2x2x2


FLATTENINGS_2222 = (((1, 2), (3, 4)), ((1, 3), (2, 4)), ((1, 4), (2, 3)))


@dataclass
class Membership2222:
    member: bool
    relative_dets: list

    def __bool__(self):
        return self.member

    def to_dict(self):
        return {"member": self.member, "relative_dets": [float(x) for x in self.relative_dets]}


def _exact_det(M):
    M = [list(r) for r in M]
    n, det = len(M), Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            M[c], M[p] = M[p], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return det


def membership_2222_variety(P, tol=DEFAULT_TOL):
    """At least two of the three 4x4 flattening determinants vanish.

    Float input measures ``|det M| / sigma_max(M)^4``; exact input tests
    the determinants for zero.
    """
    P = check_tensor(P, shape=(2, 2, 2, 2))
    rel = []
    for A, B in FLATTENINGS_2222:
        M = flatten(P, [A, B])
        if tensor_mode(P) == EXACT:
            rel.append(0.0 if _exact_det(M) == 0 else 1.0)
            continue
        sv = np.linalg.svd(M, compute_uv=False)
        rel.append(float(np.prod(sv) / sv[0] ** 4) if sv[0] > 0 else 0.0)
    vanishing = sum(r <= tol if tensor_mode(P) == FLOAT else r == 0 for r in rel)
    return Membership2222(vanishing >= 2, rel)
