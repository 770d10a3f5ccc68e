"""scikit-learn style wrappers.

The functional API works on one tensor at a time.  These classes expose
the same operations through ``fit`` / ``predict`` / ``transform`` so they
compose with sklearn utilities (``get_params``, ``clone``, pipelines over
stacks of tensors).  A "sample" is one tensor; ``X`` is a stack with the
sample axis first.
"""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import NotInModelError
from .rank2 import VERIFY_TOL, decide, decompose
from .tensor import DEFAULT_TOL, tensor_from_rank2
from .treemodel import Tree, variety_membership
from .validation import as_float, check_tensor, scale_of


def _check_stack(X, sample_shape=None):
    """Validate a stack of tensors; returns a list of checked tensors."""
    items = list(X)
    if not items:
        raise ValueError("empty stack of tensors")
    out = [check_tensor(P, nonnegative=True) for P in items]
    shapes = {P.shape for P in out}
    if len(shapes) != 1:
        raise ValueError(f"tensors in a stack must share one shape, got {sorted(shapes)}")
    if sample_shape is not None and out[0].shape != tuple(sample_shape):
        raise ValueError(f"expected tensors of shape {tuple(sample_shape)}, got {out[0].shape}")
    return out


class NonnegativeRank2(BaseEstimator, TransformerMixin):
    """Nonnegative rank-2 decomposition of a single tensor.

    Parameters
    ----------
    tol : float
        Rank and supermodularity tolerance for float input.
    verify_tol : float
        Largest accepted reconstruction error relative to the largest entry.

    Attributes
    ----------
    decomposition_ : Rank2Decomposition
    weights_ : tuple
        ``(s, t)``.
    a_, b_ : list of ndarray
        Unit-sum factor vectors per axis.
    pi_ : tuple
        Canonical permutation tuple certifying supermodularity.
    """

    def __init__(self, tol=DEFAULT_TOL, verify_tol=VERIFY_TOL):
        self.tol = tol
        self.verify_tol = verify_tol

    def fit(self, P, y=None):
        P = check_tensor(P, nonnegative=True)
        result = decide(P, self.tol)
        if not result:
            raise NotInModelError(f"tensor is not in the model ({result.reason})", result)
        D = decompose(P, self.tol, self.verify_tol, check=False)
        self.decomposition_ = D
        self.weights_ = (D.s, D.t)
        self.a_, self.b_ = D.a, D.b
        self.pi_ = result.pi
        self.shape_ = P.shape
        return self

    def transform(self, P):
        """Mixture weights ``[s, t]`` of a new tensor."""
        check_is_fitted(self, "decomposition_")
        D = decompose(check_tensor(P, nonnegative=True), self.tol, self.verify_tol)
        return np.array([D.s, D.t])

    def reconstruct(self):
        check_is_fitted(self, "decomposition_")
        return tensor_from_rank2(self.decomposition_)

    def score(self, P, y=None):
        """Negative relative reconstruction error of the fitted decomposition on ``P``."""
        check_is_fitted(self, "decomposition_")
        P = check_tensor(P)
        return -float(np.max(np.abs(as_float(self.reconstruct()) - as_float(P)))) / scale_of(P)


class Rank2Membership(BaseEstimator, ClassifierMixin):
    """Predict whether each tensor in a stack has nonnegative rank <= 2.

    ``fit`` only records the sample shape; the test itself has no
    trainable state.
    """

    def __init__(self, tol=DEFAULT_TOL, n_jobs=None):
        self.tol = tol
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        stack = _check_stack(X)
        self.sample_shape_ = stack[0].shape
        self.classes_ = np.array([False, True])
        return self

    def explain(self, X):
        """Full :class:`DecisionResult` per tensor."""
        check_is_fitted(self, "sample_shape_")
        return [decide(P, self.tol, n_jobs=self.n_jobs) for P in _check_stack(X, self.sample_shape_)]

    def predict(self, X):
        return np.array([bool(r) for r in self.explain(X)])


class TreeVarietyMembership(BaseEstimator, ClassifierMixin):
    """Predict membership in the phylogenetic variety of a fixed tree.

    Parameters
    ----------
    newick : str
        Tree topology; leaves named ``1..n``.
    tol : float
        Relative singular-value threshold for the flattening ranks.
    """

    def __init__(self, newick="(1,2,(3,4));", tol=DEFAULT_TOL):
        self.newick = newick
        self.tol = tol

    def fit(self, X=None, y=None):
        self.tree_ = Tree.from_newick(self.newick)
        self.classes_ = np.array([False, True])
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        stack = _check_stack(X, (2,) * self.tree_.n)
        return np.array([bool(variety_membership(P, self.tree_, self.tol)) for P in stack])
