from fractions import Fraction

from hypothesis import settings, strategies as st

from polymaplab.hamiltonian import PlanarPolyField
from polymaplab.poly import Polynomial

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

coeffs = st.fractions(min_value=-20, max_value=20, max_denominator=6)


@st.composite
def polys(draw, max_degree=5, max_terms=8):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        d = draw(st.integers(0, max_degree))
        i = draw(st.integers(0, d))
        terms[(i, d - i)] = draw(coeffs)
    return Polynomial(terms)


def nonconstant_polys(max_degree=5):
    return polys(max_degree).filter(lambda p: not p.is_constant())


@st.composite
def fields(draw, max_degree=3):
    return PlanarPolyField(draw(polys(max_degree)), draw(polys(max_degree)))


small_fracs = st.fractions(min_value=-5, max_value=5, max_denominator=4)
points = st.tuples(small_fracs, small_fracs)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
