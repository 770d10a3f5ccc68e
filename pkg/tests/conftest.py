from fractions import Fraction

import numpy as np
import pytest

from nnrank.tensor import outer


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: (int(s.split()[1].rstrip(":").rstrip("ab")), s)):
        terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion, then assert it."""

    def record(label, passed, detail):
        line = f"criterion {label}: {'PASS' if passed else 'FAIL'} ({detail})"
        request.config._acceptance_lines.append(line)
        print(line)
        assert passed, line

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def frac_vector(rng, d, lo=0, hi=9, den=None):
    """Random exact vector with entries lo..hi (divided by den if given)."""
    den = den or 1
    return np.array([Fraction(int(x), den) for x in rng.integers(lo, hi + 1, d)], dtype=object)


def rank2_tensor(rng, shape, exact=False, positive=True):
    """``outer(a) + outer(b)`` with random nonnegative factors."""
    if exact:
        lo = 1 if positive else 0
        a = [frac_vector(rng, d, lo, 9) for d in shape]
        b = [frac_vector(rng, d, lo, 9) for d in shape]
    else:
        a = [rng.uniform(0.05, 1.0, d) for d in shape]
        b = [rng.uniform(0.05, 1.0, d) for d in shape]
    return outer(a) + outer(b), a, b


PARITY = np.array([[[1, 0], [0, 1]], [[0, 1], [1, 0]]])
