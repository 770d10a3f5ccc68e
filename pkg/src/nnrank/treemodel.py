"""General Markov model with binary states on a tree.

A tree is an undirected :class:`networkx.Graph` plus a root node.  Leaves
are the nodes named ``"1" .. "n"``; leaf ``k`` is axis ``k`` of the joint
distribution.  Edge parameters are keyed by the *child* node of the edge
once edges are directed away from the root, and ``M_e[i, j]`` is the
probability that the child is in state ``j`` given the parent is in state
``i``.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count

import networkx as nx
import newick
import numpy as np
from joblib import Parallel, delayed

from .tensor import DEFAULT_TOL, bipartitions, flatten, matrix_rank, tensor_from_rank2, Rank2Decomposition
from .validation import EXACT, FLOAT, as_float, check_tensor, tensor_mode

BOUNDARY_TOL = 1e-7


class Tree:
    """Unrooted tree with a designated root.

    Parameters
    ----------
    graph : networkx.Graph
        Node names are strings.  Leaves (degree-1 nodes) must be named
        ``"1" .. "n"`` with ``n >= 3``.
    root : str
        An internal node.  Only the root may have degree 2.
    """

    def __init__(self, graph, root):
        g = nx.Graph()
        g.add_nodes_from(str(v) for v in graph.nodes)
        g.add_edges_from((str(u), str(v)) for u, v in graph.edges)
        root = str(root)
        if g.number_of_nodes() == 0 or not nx.is_tree(g):
            raise ValueError("graph must be a nonempty tree")
        if root not in g:
            raise ValueError(f"root {root!r} is not a node")
        leaves = sorted((v for v in g if g.degree(v) == 1), key=lambda v: (len(v), v))
        n = len(leaves)
        if n < 3:
            raise ValueError("a tree needs at least 3 leaves")
        if leaves != [str(k) for k in range(1, n + 1)]:
            raise ValueError(f"leaves must be named 1..{n}, got {leaves}")
        if g.degree(root) < 2:
            raise ValueError("the root must be an internal node")
        for v in g:
            if v != root and g.degree(v) == 2:
                raise ValueError(f"non-root node {v!r} has degree 2")
        self.graph = g
        self.root = root
        self.n = n
        self._orient()

    def _orient(self):
        self.parent = {self.root: None}
        self.children = {}
        order = [self.root]
        for v in order:
            kids = sorted((u for u in self.graph[v] if u != self.parent[v]), key=_node_key)
            self.children[v] = kids
            for u in kids:
                self.parent[u] = v
            order.extend(kids)
        self.preorder = order
        # leaves below every node, as sorted 1-based labels
        self.below = {}
        for v in reversed(order):
            if self.is_leaf(v):
                self.below[v] = (int(v),)
            else:
                self.below[v] = tuple(sorted(x for c in self.children[v] for x in self.below[c]))

    # -- construction -------------------------------------------------

    @classmethod
    def from_newick(cls, text, root=None):
        """Parse a Newick string.  Unnamed internal nodes become ``i0, i1, ...`` in breadth-first order.

        The Newick root is the default root.
        """
        try:
            trees = newick.loads(text)
        except Exception as exc:
            raise ValueError(f"cannot parse Newick string: {exc}") from exc
        if len(trees) != 1:
            raise ValueError("expected exactly one Newick tree")
        g = nx.Graph()
        fresh = (f"i{k}" for k in count())
        taken = {node.name for node in trees[0].walk() if node.name}

        def name_of(node):
            if node.name:
                return node.name.strip()
            name = next(fresh)
            while name in taken:
                name = next(fresh)
            return name

        top = name_of(trees[0])
        g.add_node(top)
        stack = [(trees[0], top)]
        while stack:
            node, label = stack.pop(0)
            for child in node.descendants:
                child_label = name_of(child)
                if child_label in g:
                    raise ValueError(f"duplicate node name {child_label!r}")
                g.add_edge(label, child_label)
                stack.append((child, child_label))
        return cls(g, top if root is None else root)

    def to_newick(self):
        def rec(v):
            if self.is_leaf(v):
                return v
            return "(" + ",".join(rec(c) for c in self.children[v]) + ")" + v

        return rec(self.root) + ";"

    def rerooted(self, root):
        return Tree(self.graph, root)

    # -- structure ----------------------------------------------------

    def is_leaf(self, v):
        return self.graph.degree(v) == 1

    def leaf(self, k):
        return str(k)

    @property
    def edges(self):
        """Edges ``(parent, child)`` in preorder of the child."""
        return [(self.parent[v], v) for v in self.preorder if v != self.root]

    @property
    def pendant_edges(self):
        return [e for e in self.edges if self.is_leaf(e[1]) or self.is_leaf(e[0])]

    @property
    def internal_edges(self):
        return [e for e in self.edges if not (self.is_leaf(e[1]) or self.is_leaf(e[0]))]

    @property
    def internal_nodes(self):
        return [v for v in self.preorder if not self.is_leaf(v)]

    def edge(self, key):
        """Normalize an edge given as child name or ``(u, v)`` pair to ``(parent, child)``."""
        if isinstance(key, (tuple, list)):
            u, v = (str(x) for x in key)
            if self.parent.get(v) == u:
                return (u, v)
            if self.parent.get(u) == v:
                return (v, u)
            raise KeyError(f"no edge {key}")
        key = str(key)
        if key not in self.parent or key == self.root:
            raise KeyError(f"no edge above node {key!r}")
        return (self.parent[key], key)

    def spanned_nodes(self, leaves):
        """Nodes of the smallest subtree containing the given 1-based leaves."""
        names = [str(k) for k in leaves]
        nodes = {names[0]}
        for other in names[1:]:
            nodes.update(nx.shortest_path(self.graph, names[0], other))
        return nodes

    def __repr__(self):
        return f"Tree({self.to_newick()!r}, root={self.root!r})"


def _node_key(v):
    return (0, int(v)) if v.isdigit() else (1, v)


def star_tree(n):
    return Tree.from_newick("(" + ",".join(str(k) for k in range(1, n + 1)) + ");")


def quartet():
    """The quartet with split 12|34, rooted at the node joining 1 and 2."""
    return Tree.from_newick("(1,2,(3,4));")


def caterpillar(n):
    """Caterpillar with cherries {1,2} and {n-1,n}, rooted at the first spine node."""
    if n < 4:
        return star_tree(n)
    text = f"({n - 1},{n})"
    for k in range(n - 2, 2, -1):
        text = f"({k},{text})"
    return Tree.from_newick(f"(1,2,{text});")


# ---------------------------------------------------------------- splits


def _check_split(T, A):
    A = frozenset(int(a) for a in A)
    if not A or len(A) >= T.n or not A <= set(range(1, T.n + 1)):
        raise ValueError(f"invalid split {sorted(A)} of 1..{T.n}")
    return A


def is_compatible_split(T, A):
    """Do the subtrees spanned by ``A`` and its complement share at most one node?"""
    A = _check_split(T, A)
    B = set(range(1, T.n + 1)) - A
    return len(T.spanned_nodes(sorted(A)) & T.spanned_nodes(sorted(B))) <= 1


def compatible_splits(T):
    """Compatible splits ``A`` (containing leaf 1) in bipartition order."""
    return [A for A, _ in bipartitions(T.n) if is_compatible_split(T, A)]


def contract_edge(T, e):
    """Tree with the internal edge ``e`` contracted onto its parent end."""
    u, v = T.edge(e)
    if T.is_leaf(u) or T.is_leaf(v):
        raise ValueError(f"edge {(u, v)} is pendant")
    g = nx.contracted_nodes(T.graph, u, v, self_loops=False)
    return Tree(nx.Graph(g), u)


# ---------------------------------------------------------------- parameters


@dataclass
class TreeModelParams:
    """Root distribution and one Markov matrix per edge (keyed by child node)."""

    tree: Tree
    root_dist: np.ndarray
    markov: dict
    mode: str = field(default=None)

    def __post_init__(self):
        root = check_tensor(self.root_dist, shape=(2,), nonnegative=True)
        mode = self.mode or tensor_mode(root)
        self.root_dist = check_tensor(root, mode=mode)
        markov = {}
        for key, M in self.markov.items():
            _, child = self.tree.edge(key)
            markov[child] = check_tensor(M, mode=mode, shape=(2, 2), nonnegative=True)
        missing = [c for _, c in self.tree.edges if c not in markov]
        if missing:
            raise ValueError(f"missing Markov matrices for edges above {missing}")
        self.markov = markov
        self.mode = mode
        _check_stochastic(self.root_dist, "root distribution", mode)
        for child, M in markov.items():
            for i in range(2):
                _check_stochastic(M[i], f"row {i + 1} of the matrix above {child!r}", mode)

    @property
    def n_free(self):
        return 2 * len(self.tree.edges) + 1

    def to_dict(self):
        conv = str if self.mode == EXACT else float
        return {
            "newick": self.tree.to_newick(),
            "root": self.tree.root,
            "root_dist": [conv(x) for x in self.root_dist],
            "markov": {c: [[conv(x) for x in row] for row in M] for c, M in self.markov.items()},
        }

    @classmethod
    def from_dict(cls, data, mode=None):
        tree = Tree.from_newick(data["newick"], data.get("root"))
        return cls(tree, data["root_dist"], data["markov"], mode)

    def theta(self):
        """Free coordinates ``(pi_1, M_e[0, 0], M_e[1, 0], ...)`` as floats."""
        out = [float(self.root_dist[0])]
        for _, c in self.tree.edges:
            out += [float(self.markov[c][0, 0]), float(self.markov[c][1, 0])]
        return np.array(out)

    @classmethod
    def from_theta(cls, tree, theta):
        theta = np.asarray(theta, dtype=float)
        markov = {}
        for k, (_, c) in enumerate(tree.edges):
            x, y = theta[1 + 2 * k], theta[2 + 2 * k]
            markov[c] = np.array([[x, 1 - x], [y, 1 - y]])
        return cls(tree, np.array([theta[0], 1 - theta[0]]), markov, FLOAT)


def _check_stochastic(v, what, mode, tol=DEFAULT_TOL):
    total = v.sum()
    if (mode == EXACT and total != 1) or (mode == FLOAT and abs(total - 1) > tol):
        raise ValueError(f"{what} sums to {total}, not 1")


def _stochastic_row(rng, mode, denominator):
    if mode == EXACT:
        k = int(rng.integers(1, denominator))
        return [Fraction(k, denominator), Fraction(denominator - k, denominator)]
    x = float(rng.uniform(0.05, 0.95))
    return [x, 1 - x]


def random_params(tree, rng=None, mode=FLOAT, denominator=97):
    """Random interior parameters; exact draws use the given denominator."""
    rng = np.random.default_rng(rng)
    dtype = object if mode == EXACT else float
    root = np.array(_stochastic_row(rng, mode, denominator), dtype=dtype)
    markov = {}
    for _, c in tree.edges:
        M = np.array([_stochastic_row(rng, mode, denominator) for _ in range(2)], dtype=dtype)
        markov[c] = M
    return TreeModelParams(tree, root, markov, mode)


# ---------------------------------------------------------------- parametrization


def joint_distribution(params):
    """Leaf distribution by leafward message passing.

    ``msg[v]`` has a leading axis for the state of ``v`` followed by one
    axis per leaf below ``v`` (in sorted label order).
    """
    T = params.tree
    one, zero = (Fraction(1), Fraction(0)) if params.mode == EXACT else (1.0, 0.0)
    eye = np.array([[one, zero], [zero, one]], dtype=object if params.mode == EXACT else float)
    msg = {}
    for v in reversed(T.preorder):
        if T.is_leaf(v):
            msg[v] = eye
            continue
        parts, order = [], []
        for c in T.children[v]:
            parts.append(np.tensordot(params.markov[c], msg[c], axes=([1], [0])))
            order.extend(T.below[c])
        per_state = []
        for s in range(2):
            acc = parts[0][s]
            for part in parts[1:]:
                acc = np.multiply.outer(acc, part[s])
            per_state.append(acc)
        stacked = np.stack(per_state)
        perm = np.argsort(order)
        msg[v] = np.transpose(stacked, [0] + [int(p) + 1 for p in perm])
    root = msg[T.root]
    return np.tensordot(params.root_dist, root, axes=([0], [0]))


def star_as_rank2(params):
    """The rank-2 description of a star-tree model (root = centre)."""
    T = params.tree
    if len(T.internal_nodes) != 1:
        raise ValueError("not a star tree")
    M = [params.markov[str(k)] for k in range(1, T.n + 1)]
    return Rank2Decomposition(
        (2,) * T.n,
        [m[0] for m in M],
        [m[1] for m in M],
        params.root_dist[0],
        params.root_dist[1],
        params.mode,
    )


def reroot(params, new_root):
    """Equivalent parameters with the root moved to another internal node.

    Each edge on the path is reversed using Bayes' rule:
    ``pi' = pi M`` and ``M' = diag(pi')^-1 M^T diag(pi)``.
    """
    T = params.tree
    new_root = str(new_root)
    path = nx.shortest_path(T.graph, T.root, new_root)
    pi = params.root_dist
    markov = dict(params.markov)
    for old, new in zip(path, path[1:]):
        M = markov.pop(new)
        pi_new = pi @ M
        if any(x == 0 for x in pi_new):
            raise ValueError("cannot reroot through a state of probability zero")
        markov[old] = (M.T * pi[None, :]) / pi_new[:, None]
        pi = pi_new
    return TreeModelParams(T.rerooted(new_root), pi, markov, params.mode)


def swap_labels(params, node):
    """Swap the two hidden states at an internal node (same joint distribution)."""
    T = params.tree
    node = str(node)
    if T.is_leaf(node):
        raise ValueError("labels can only be swapped at internal nodes")
    J = [1, 0]
    markov = dict(params.markov)
    root = params.root_dist
    if node == T.root:
        root = root[J]
    else:
        markov[node] = markov[node][:, J]
    for c in T.children[node]:
        markov[c] = markov[c][J, :]
    return TreeModelParams(T, root, markov, params.mode)


# ---------------------------------------------------------------- membership


@dataclass
class MembershipResult:
    member: bool
    witness: tuple = None
    rank: int = None

    def __bool__(self):
        return self.member

    def to_dict(self):
        return {"member": self.member, "witness": list(self.witness) if self.witness else None, "rank": self.rank}


def _check_binary(P, T):
    P = check_tensor(P, shape=(2,) * T.n)
    return P


def _split_matrix(P, A):
    B = [k for k in range(1, P.ndim + 1) if k not in set(A)]
    return flatten(P, [list(A), B])


def variety_membership(P, T, tol=DEFAULT_TOL):
    """Every flattening compatible with ``T`` has rank <= 2."""
    P = _check_binary(P, T)
    for A in compatible_splits(T):
        r = matrix_rank(_split_matrix(P, A), tol)
        if r > 2:
            return MembershipResult(False, tuple(A), r)
    return MembershipResult(True)


# ---------------------------------------------------------------- boundary


def _pendant_parts(T, e):
    u, v = T.edge(e)
    leaf, inner = (v, u) if T.is_leaf(v) else (u, v)
    if not T.is_leaf(leaf):
        raise ValueError(f"edge {(u, v)} is not pendant")
    parts = []
    for w in sorted(T.graph[inner], key=_node_key):
        if w == leaf:
            continue
        # leaves on the far side of the edge inner-w
        g = T.graph.copy()
        g.remove_edge(inner, w)
        side = nx.node_connected_component(g, w)
        parts.append(sorted(int(x) for x in side if T.is_leaf(x)))
    return int(leaf), sorted(parts)


def _slice_rank(S, tol):
    if S.ndim == 1:
        return 1 if np.any(as_float(S) != 0) else 0
    return max(matrix_rank(flatten(S, [A, B]), tol) for A, B in bipartitions(S.ndim))


def boundary_pendant_check(P, T, pendant_edge, row_index, tol=BOUNDARY_TOL, return_rank=False):
    """Does slice ``row_index`` (a state of the leaf) of the pendant flattening have rank <= 1?

    The leaf ``l`` on the edge and the other branches ``L_2, ..., L_r`` at its
    internal end give a ``2 x 2^|L_2| x ... x 2^|L_r|`` flattening of ``P``.
    A zero in column ``row_index`` of the pendant Markov matrix puts ``P`` on
    this component.
    """
    P = _check_binary(P, T)
    if row_index not in (1, 2):
        raise ValueError("row_index must be 1 or 2")
    leaf, parts = _pendant_parts(T, pendant_edge)
    F = flatten(P, [[leaf]] + parts)
    # flatten orders blocks by smallest axis; bring the leaf block to the front
    blocks = sorted([[leaf]] + parts, key=lambda b: b[0])
    F = np.moveaxis(F, blocks.index([leaf]), 0)
    r = _slice_rank(F[row_index - 1], tol)
    return (r <= 1, r) if return_rank else r <= 1


def new_splits_after_contraction(T, e):
    """Splits compatible with ``T[e]`` but not with ``T``."""
    Te = contract_edge(T, e)
    return [A for A in compatible_splits(Te) if not is_compatible_split(T, A)]


def boundary_internal_check(P, T, internal_edge, tol=BOUNDARY_TOL, return_rank=False):
    """Do the flattenings compatible with ``T[e]`` but not ``T`` have rank <= 3?"""
    P = _check_binary(P, T)
    u, v = T.edge(internal_edge)
    if T.is_leaf(u) or T.is_leaf(v):
        raise ValueError(f"edge {(u, v)} is pendant")
    ranks = [matrix_rank(_split_matrix(P, A), tol) for A in new_splits_after_contraction(T, (u, v))]
    r = max(ranks)
    return (r <= 3, r) if return_rank else r <= 3


def incompatible_determinants(P, T, internal_edge):
    """Determinants of the square flattenings compatible with ``T[e]`` but not ``T``."""
    P = _check_binary(P, T)
    out = []
    for A in new_splits_after_contraction(T, internal_edge):
        M = _split_matrix(P, A)
        if M.shape[0] == M.shape[1]:
            out.append(_det(M))
    return out


def _det(M):
    if tensor_mode(M) == FLOAT:
        return float(np.linalg.det(M))
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


@dataclass
class TreeBoundaryEntry:
    edge: str
    kind: str
    triggered: bool
    rank_observed: int

    def to_dict(self):
        return {"edge": self.edge, "kind": self.kind, "triggered": self.triggered, "rank_observed": self.rank_observed}


def boundary_report(P, T, tol=BOUNDARY_TOL, n_jobs=None, check=True):
    """Evaluate every candidate boundary component: two per pendant edge, one per internal edge."""
    P = _check_binary(P, T)
    if check and not variety_membership(P, T, min(tol, DEFAULT_TOL) if tensor_mode(P) == FLOAT else tol):
        raise ValueError("tensor is not on the phylogenetic variety of the tree")
    jobs = []
    for u, v in T.edges:
        if T.is_leaf(v) or T.is_leaf(u):
            for row in (1, 2):
                jobs.append((v, f"pendant_row_{row}", boundary_pendant_check, ((u, v), row)))
        else:
            jobs.append((v, "internal", boundary_internal_check, ((u, v),)))

    def run(job):
        edge, kind, fn, args = job
        hit, r = fn(P, T, *args, tol=tol, return_rank=True)
        return TreeBoundaryEntry(edge, kind, bool(hit), int(r))

    if n_jobs in (None, 1):
        return [run(j) for j in jobs]
    return Parallel(n_jobs=n_jobs, prefer="threads")(delayed(run)(j) for j in jobs)


def singular_locus_check(params, tol=DEFAULT_TOL):
    """Is the parameter point in the singular locus of the parametrization?

    Returns ``(flag, reason)``; reason is ``"root"``, ``"edge <child>"`` or ``None``.
    """
    if float(min(params.root_dist)) <= tol:
        return True, "root"
    for _, c in params.tree.edges:
        M = params.markov[c]
        if abs(float(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])) <= tol:
            return True, f"edge {c}"
    return False, None


def star_equals_rank2(params):
    """Cross-check: the star-tree joint distribution equals its rank-2 form."""
    P = joint_distribution(params)
    Q = tensor_from_rank2(star_as_rank2(params))
    return bool(np.all(P == Q)) if params.mode == EXACT else bool(np.allclose(P, Q, atol=1e-12))
