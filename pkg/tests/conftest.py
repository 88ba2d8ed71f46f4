import numpy as np
import pytest
from hypothesis import strategies as st

from qconsensus.perm import Permutation, PermSet


@st.composite
def permutations(draw, n=None, min_n=1, max_n=6):
    if n is None:
        n = draw(st.integers(min_n, max_n))
    image = draw(st.permutations(range(1, n + 1)))
    return Permutation(tuple(image))


@st.composite
def perm_sets(draw, n=None, min_n=2, max_n=4, max_size=3):
    if n is None:
        n = draw(st.integers(min_n, max_n))
    members = draw(st.lists(permutations(n=n), min_size=1, max_size=max_size))
    return PermSet(members, n=n)


def random_perm_set(rng, n, max_size=3):
    k = int(rng.integers(1, max_size + 1))
    return PermSet([Permutation(tuple(rng.permutation(n) + 1)) for _ in range(k)], n=n)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines):
            terminalreporter.write_line(lines[key])
