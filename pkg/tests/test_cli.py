import io as stdio
import json
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from nnrank import io
from nnrank.cli import main
from nnrank.rank3 import Rank3Params332, param_332, random_params_332
from nnrank.tensor import outer
from nnrank.treemodel import quartet, random_params

from .conftest import PARITY


def run(*argv):
    out = stdio.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


def as_json(text):
    return json.loads(text)


@pytest.fixture
def write(tmp_path):
    def _write(name, doc):
        path = tmp_path / name
        path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
        return path

    return _write


def tensor_file(write, name, P):
    return write(name, io.tensor_to_dict(np.asarray(P)))


EX = np.array([9, 5, 5, 3, 5, 3, 3, 2]).reshape(2, 2, 2)


def test_decide(write):
    code, out = run("decide", tensor_file(write, "p.json", PARITY))
    doc = as_json(out)
    assert code == 0 and doc["verdict"] == "not-in-model" and doc["reason"] == "not-supermodular"
    code, out = run("decide", tensor_file(write, "ex.json", EX))
    assert as_json(out)["verdict"] == "in-model" and as_json(out)["pi"] == [[1, 2]] * 3
    code, out = run("decide", tensor_file(write, "r1.json", outer([np.array([1, 2])] * 3)))
    assert as_json(out)["verdict"] == "in-model"


def test_decompose(write):
    diag = np.zeros((2, 2, 2), dtype=int)
    diag[0, 0, 0] = diag[1, 1, 1] = 1
    code, out = run("decompose", tensor_file(write, "d.json", diag))
    doc = as_json(out)
    assert code == 0 and doc["s"] == doc["t"] == "1" and doc["a"] == [["1", "0"]] * 3
    a = [np.array([0.2, 0.8]), np.array([0.6, 0.1, 0.3]), np.array([0.5, 0.5])]
    b = [np.array([0.7, 0.3]), np.array([0.2, 0.5, 0.3]), np.array([0.9, 0.1])]
    code, out = run("decompose", tensor_file(write, "m.json", outer(a) + 2 * outer(b)))
    assert code == 0 and as_json(out)["relative_error"] <= 1e-8
    code, out = run("decompose", tensor_file(write, "p.json", PARITY))
    assert code == 4 and "witness" in as_json(out)


def test_certify(write):
    code, out = run("certify", tensor_file(write, "ex.json", EX))
    assert as_json(out) == {"supermodular": True, "pi": [[1, 2]] * 3}
    code, out = run("certify", "--all", tensor_file(write, "ones.json", np.ones((3, 3, 3), dtype=int)))
    assert as_json(out)["count"] == 108
    code, out = run("certify", tensor_file(write, "p.json", PARITY))
    assert as_json(out)["supermodular"] is False and as_json(out)["witness"]["verdict"] == "fail"


def test_boundary(write):
    assert run("boundary", tensor_file(write, "ex.json", EX)) == (0, "[]\n")
    a = [np.array([0.3, 0.7]), np.array([0.6, 0.4]), np.array([1.0, 0.0])]
    b = [np.array([0.8, 0.2]), np.array([0.1, 0.9]), np.array([0.0, 1.0])]
    _, out = run("boundary", tensor_file(write, "s.json", outer(a) + outer(b)))
    assert as_json(out) == [{"kind": "slice_rank_one", "axis": 3, "index": 1}, {"kind": "slice_rank_one", "axis": 3, "index": 2}]
    a = [np.array([1, 2, 2]), np.array([1, 3]), np.array([2, 1])]
    b = [np.array([1, 2, 3]), np.array([2, 1]), np.array([1, 1])]
    path = tensor_file(write, "d.json", outer(a) + outer(b))
    _, out = run("boundary", "--double-slices", path)
    assert as_json(out) == [{"kind": "double_slice_dependent", "axis": 1, "i": 1, "j": 2}]


def test_tree(write):
    T = quartet()
    eye = [["1", "0"], ["0", "1"]]
    doc = {"newick": T.to_newick(), "root": T.root, "root_dist": ["1/2", "1/2"], "markov": {c: eye for _, c in T.edges}}
    tree = write("tree.json", doc)
    code, out = run("tree", "prob", tree)
    P = io.tensor_from_dict(as_json(out))
    assert P[0, 0, 0, 0] == P[1, 1, 1, 1] == Fraction(1, 2)

    p = random_params(T, np.random.default_rng(0))
    tree = write("tree2.json", p.to_dict())
    _, out = run("tree", "prob", tree)
    sample = write("sample.json", out)
    _, out = run("tree", "boundary", tree, sample)
    report = as_json(out)
    assert len(report) == 9 and not any(e["triggered"] for e in report)
    _, out = run("tree", "membership", tree, sample)
    assert as_json(out)["member"] is True

    p.markov["i1"] = np.array([[0.3, 0.7], [0.0, 1.0]])
    tree = write("tree3.json", p.to_dict())
    _, out = run("tree", "prob", tree)
    _, out = run("tree", "boundary", tree, write("s3.json", out))
    assert [e["kind"] for e in as_json(out) if e["triggered"]] == ["internal"]
    assert run("tree", "boundary", tree)[0] == 2


def test_slice_sample_is_reproducible():
    code, first = run("slice-sample", "--samples", 50, "--seed", 7)
    _, second = run("slice-sample", "--samples", 50, "--seed", 7)
    _, other = run("slice-sample", "--samples", 50, "--seed", 8)
    assert code == 0 and first == second != other
    lines = first.strip().split("\n")
    assert lines[0] == "x,y,z,w,det,f1,f2,f3,cells" and len(lines) == 51
    with pytest.raises(SystemExit):
        run("slice-sample", "--samples", 5)


def test_case332(write):
    p = random_params_332(np.random.default_rng(1))
    path = tensor_file(write, "p.json", param_332(p))
    code, out = run("case332", "membership", path)
    assert code == 0 and as_json(out)["verdict"] == "pass"
    a1 = np.array([p.a[0][0] + p.a[0][2], p.a[0][1], 0.0])
    on_b = Rank3Params332(p.pi, [a1, p.a[1], p.a[2]], p.b, p.c)
    _, out = run("case332", "k", tensor_file(write, "b.json", param_332(on_b)))
    assert abs(as_json(out)["k"]) < 1e-20
    _, out = run("case332", "boundary", tensor_file(write, "b2.json", param_332(on_b)))
    assert {"kind": "b", "index": 3} in as_json(out)["components"]
    P = param_332(p)
    P[:, :, 0] = np.outer([1.0, 2, 3], [1.0, 1, 1]) * 0.01
    code, _ = run("case332", "membership", tensor_file(write, "sing.json", P))
    assert code == 5


def test_case2222(write):
    rng = np.random.default_rng(2)
    P = sum(outer([rng.uniform(size=2) for _ in range(4)]) for _ in range(3))
    _, out = run("case2222", "membership", tensor_file(write, "p.json", P))
    assert as_json(out)["member"] is True


def test_exit_codes(write):
    assert run("decide", write("bad.json", "{not json"))[0] == 2
    assert run("decide", write("short.json", {"shape": [2, 2], "entries": [1]}))[0] == 2
    assert run("decide", tensor_file(write, "neg.json", np.array([[1, -1], [0, 1]])))[0] == 3
    assert run("decide", "/nonexistent/file.json")[0] == 2
    with pytest.raises(SystemExit) as exc:
        run("decide", "--tol", "-1", "x.json")
    assert exc.value.code == 2


def test_decide_and_decompose_agree(write):
    rng = np.random.default_rng(3)
    for k in range(10):
        P = rng.integers(0, 3, (2, 2, 2)) if k % 2 else outer([rng.integers(1, 4, 2)] * 3) + outer([rng.integers(1, 4, 2)] * 3)
        path = tensor_file(write, f"t{k}.json", P)
        in_model = as_json(run("decide", path)[1])["verdict"] == "in-model"
        assert (run("decompose", path)[0] == 0) == in_model


def test_console_script(write):
    path = tensor_file(write, "ex.json", EX)
    proc = subprocess.run([sys.executable, "-m", "nnrank.cli", "decide", str(path)], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["verdict"] == "in-model"
