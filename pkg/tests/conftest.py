from fractions import Fraction

import pytest
from hypothesis import strategies as st

from givkdv.diffring import DiffPoly, u
from givkdv.pdo import PDO, clear_caches
from givkdv.scalars import Scalar

fractions = st.builds(Fraction, st.integers(-6, 6), st.integers(1, 5))


@st.composite
def scalars(draw, eps=True):
    out = Scalar()
    for _ in range(draw(st.integers(0, 3))):
        e = draw(st.integers(0, 1)) if eps else 0
        out = out + Scalar({(draw(st.integers(-3, 3)), e): draw(fractions)})
    return out


@st.composite
def jet_polys(draw, alpha=1, max_order=3, max_terms=3, max_deg=2):
    out = DiffPoly()
    for _ in range(draw(st.integers(0, max_terms))):
        mono = DiffPoly.const(Scalar.h(draw(st.integers(-2, 2)), draw(fractions)))
        for _ in range(draw(st.integers(0, max_deg))):
            mono = mono * u(alpha, draw(st.integers(0, max_order)))
        out = out + mono
    return out


@st.composite
def pdos(draw, lo=-3, hi=3, alpha=1):
    orders = draw(st.lists(st.integers(lo, hi), min_size=1, max_size=3, unique=True))
    return PDO({k: draw(jet_polys(alpha=alpha, max_order=2, max_terms=2)) for k in orders})


@pytest.fixture(autouse=True, scope="module")
def _fresh_caches():
    yield
    clear_caches()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
