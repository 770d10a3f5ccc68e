"""Command-line interface: ``nnrank <command> ...``.

Every command reads the JSON formats of :mod:`nnrank.io` and writes JSON
to stdout (``slice-sample`` writes CSV).  Exit codes: 0 success, 2 parse
or usage error, 3 negative entries, 4 not in the model, 5 refused input.
"""
import argparse
import csv
import sys

import numpy as np

from . import io, rank2, rank3, supermodular, treemodel
from .exceptions import ModeError, NegativeEntryError, NotInModelError, RefusedInputError, SearchTooLargeError
from .tensor import DEFAULT_TOL

EXIT_PARSE = 2
EXIT_NEGATIVE = 3
EXIT_NOT_IN_MODEL = 4
EXIT_REFUSED = 5


class _Exit(Exception):
    def __init__(self, code, payload=None, message=None):
        super().__init__(message)
        self.code = code
        self.payload = payload
        self.message = message


def _emit(obj, out):
    out.write(io.dumps(obj) + "\n")


def _tol(args, default=DEFAULT_TOL):
    return default if args.tol is None else args.tol


def _n_jobs(args):
    return -1 if args.parallel else None


def _tensor(args, path=None):
    return io.load_tensor(path or args.tensor, args.mode)


def _pi_json(pi):
    return None if pi is None else [list(p) for p in pi]


# ---------------------------------------------------------------- commands


def cmd_decide(args, out):
    result = rank2.decide(_tensor(args), _tol(args), n_jobs=_n_jobs(args))
    _emit(result.to_dict(), out)


def cmd_decompose(args, out):
    P = _tensor(args)
    result = rank2.decide(P, _tol(args), n_jobs=_n_jobs(args))
    if not result:
        raise _Exit(EXIT_NOT_IN_MODEL, result.to_dict())
    D = rank2.decompose(P, _tol(args), check=False)
    doc = D.to_dict()
    doc["mode"] = D.mode
    doc["relative_error"] = D.meta.get("relative_error")
    doc["pi"] = _pi_json(result.pi)
    _emit(doc, out)


def cmd_certify(args, out):
    P = _tensor(args)
    if args.all:
        cells = supermodular.toric_cells(P, _tol(args), n_jobs=_n_jobs(args))
        _emit({"cells": [_pi_json(c) for c in cells], "count": len(cells)}, out)
        return
    pi = supermodular.find_pi(P, _tol(args), n_jobs=_n_jobs(args))
    doc = {"supermodular": pi is not None, "pi": _pi_json(pi)}
    if pi is None:
        doc["witness"] = supermodular.is_pi_supermodular(P, supermodular.identity_pi(P.shape), _tol(args)).to_dict()
    _emit(doc, out)


def cmd_boundary(args, out):
    P = _tensor(args)
    comps = rank2.classify_boundary(P, _tol(args, rank2.BOUNDARY_TOL), include_double_slices=args.double_slices)
    _emit([c.to_dict() for c in comps], out)


def _tree_params(args):
    return treemodel.TreeModelParams.from_dict(io.load_json(args.tree), args.mode)


def _tree_only(args):
    doc = io.load_json(args.tree)
    return treemodel.Tree.from_newick(doc["newick"], doc.get("root"))


def cmd_tree(args, out):
    if args.action == "prob":
        _emit(io.tensor_to_dict(treemodel.joint_distribution(_tree_params(args))), out)
        return
    if args.tensor is None:
        raise _Exit(EXIT_PARSE, message=f"tree {args.action} needs a tensor file")
    T = _tree_only(args)
    P = _tensor(args)
    if args.action == "membership":
        _emit(treemodel.variety_membership(P, T, _tol(args)).to_dict(), out)
    else:
        report = treemodel.boundary_report(P, T, _tol(args, treemodel.BOUNDARY_TOL), n_jobs=_n_jobs(args))
        _emit([entry.to_dict() for entry in report], out)


def _cell_label(cells):
    return ";".join("-".join("".join(str(x) for x in p) for p in pi) for pi in cells)


def cmd_slice_sample(args, out):
    if args.samples < 1:
        raise _Exit(EXIT_PARSE, message="--samples must be >= 1")
    rng = np.random.default_rng(args.seed)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["x", "y", "z", "w", "det", "f1", "f2", "f3", "cells"])
    for x, y, z, w in rng.dirichlet(np.ones(4), size=args.samples) / 2:
        _, f1, f2, f3 = rank2.jukes_cantor_factors(x, y, z, w)
        det = rank2.jukes_cantor_det(x, y, z, w)
        cells = rank2.jukes_cantor_cell(x, y, z, w, _tol(args))
        signs = [int(np.sign(f)) for f in (f1, f2, f3)]
        writer.writerow([repr(float(v)) for v in (x, y, z, w, det)] + signs + [_cell_label(cells)])


def cmd_case332(args, out):
    P = _tensor(args)
    if args.action == "membership":
        _emit(rank3.eigen_membership_332(P, _tol(args)).to_dict(), out)
    elif args.action == "k":
        _emit({"k": rank3.k_polynomial(P)}, out)
    else:
        _emit(rank3.boundary_332(P, _tol(args, rank3.BOUNDARY_TOL)).to_dict(), out)


def cmd_case2222(args, out):
    _emit(rank3.membership_2222_variety(_tensor(args), _tol(args)).to_dict(), out)


# ---------------------------------------------------------------- parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=["exact", "float"], default=None, help="arithmetic mode (default: from the input)")
    common.add_argument("--tol", type=float, default=None, help="numerical tolerance for float mode")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized commands")
    common.add_argument("--parallel", action="store_true", help="evaluate candidates on all cores")

    parser = argparse.ArgumentParser(prog="nnrank", description="Nonnegative rank tools for small tensors.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decide", parents=[common], help="is the nonnegative rank <= 2?")
    p.add_argument("tensor")
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("decompose", parents=[common], help="nonnegative rank-2 decomposition")
    p.add_argument("tensor")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("certify", parents=[common], help="find a supermodularity certificate")
    p.add_argument("tensor")
    p.add_argument("--all", action="store_true", help="list every toric cell")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("boundary", parents=[common], help="boundary components of the rank-2 model")
    p.add_argument("tensor")
    p.add_argument("--double-slices", action="store_true")
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("tree", parents=[common], help="general Markov model on a tree")
    p.add_argument("action", choices=["prob", "membership", "boundary"])
    p.add_argument("tree", help="tree JSON with newick, root, root_dist, markov")
    p.add_argument("tensor", nargs="?")
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("slice-sample", parents=[common], help="sample the Jukes-Cantor slice (CSV)")
    p.add_argument("--samples", type=int, required=True)
    p.set_defaults(func=cmd_slice_sample)

    p = sub.add_parser("case332", parents=[common], help="3x3x2 rank-3 case study")
    p.add_argument("action", choices=["membership", "k", "boundary"])
    p.add_argument("tensor")
    p.set_defaults(func=cmd_case332)

    p = sub.add_parser("case2222", parents=[common], help="2x2x2x2 rank-3 variety")
    p.add_argument("action", choices=["membership"])
    p.add_argument("tensor")
    p.set_defaults(func=cmd_case2222)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tol is not None and args.tol <= 0:
        parser.error("--tol must be positive")
    if args.command == "slice-sample" and args.seed is None:
        parser.error("slice-sample needs an explicit --seed")
    try:
        args.func(args, out)
    except _Exit as exc:
        if exc.payload is not None:
            _emit(exc.payload, out)
        if exc.message:
            print(f"nnrank: {exc.message}", file=sys.stderr)
        return exc.code
    except NegativeEntryError as exc:
        print(f"nnrank: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except NotInModelError as exc:
        if exc.result is not None:
            _emit(exc.result.to_dict(), out)
        print(f"nnrank: {exc}", file=sys.stderr)
        return EXIT_NOT_IN_MODEL
    except RefusedInputError as exc:
        print(f"nnrank: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except SearchTooLargeError as exc:
        print(f"nnrank: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, ModeError, OSError) as exc:
        print(f"nnrank: {exc}", file=sys.stderr)
        return EXIT_PARSE
    return 0


if __name__ == "__main__":
    sys.exit(main())
