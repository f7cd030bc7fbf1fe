from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings

from conftest import nonconstant_polys
from polymaplab.catalog import CONSTANT_JACOBIAN_MAPS, E1, E2, E3, TAN_FLOW, pair
from polymaplab.compactify import (
    ROOT_WIDTH,
    ConstantInputError,
    chart_system,
    infinity_filled_check,
    infinity_singularities,
    irreducible_degree,
    real_roots,
    square_free_decomposition,
)
from polymaplab.hamiltonian import PlanarPolyField, hamiltonian_field
from polymaplab.parser import parse
from polymaplab.poly import Polynomial, evaluate_exact, leading_form, univariate_restrict

x, y = Polynomial.x(), Polynomial.y()
X, Y, U, Z = sp.symbols("x y u z")


def _sym(p: Polynomial, a, b):
    return sum(sp.Rational(c.numerator, c.denominator) * a ** i * b ** j for (i, j), c in p.items())


def _chart_oracle(f: Polynomial, chart: str):
    """Substitute the chart coordinates into H_f and rescale, symbolically."""
    m = f.total_degree
    F = _sym(f, X, Y)
    fx, fy = sp.diff(F, X), sp.diff(F, Y)
    if chart == "U1":
        sub = {X: 1 / Z, Y: U / Z}
        first = Z ** m * fy.subs(sub)
        second = Z ** (m - 1) * (fx + U * fy).subs(sub)
    else:
        sub = {X: U / Z, Y: 1 / Z}
        first = -Z ** m * fx.subs(sub)
        second = -Z ** (m - 1) * (fy + U * fx).subs(sub)
    return sp.expand(sp.simplify(first)), sp.expand(sp.simplify(second))


@pytest.mark.parametrize("text", ["y - x^2", "x", "y - (2*x - y)^4", "1 + x - x^2*y",
                                  "x^2 + 3*x*y - y^3 + 2", "-(1 + x^2)*y"])
@pytest.mark.parametrize("chart", ["U1", "U2"])
def test_chart_matches_symbolic_substitution(text, chart):
    f = parse(text)
    cs = chart_system(f, chart)
    first, second = _chart_oracle(f, chart)
    assert sp.expand(_sym(cs.rhs_first, U, Z) - first) == 0
    assert sp.expand(_sym(cs.rhs_second, U, Z) - second) == 0
    assert cs.rescale_power == f.total_degree - 2
    # first component carries a factor z
    assert all(j >= 1 for (i, j), _ in cs.rhs_first.items())


def test_chart_examples():
    cs = chart_system(parse("y - x^2"), "U1")
    assert cs.equator_coefficients() == [-2]
    assert chart_system(x, "U1").equator_coefficients() == [1]
    e1 = chart_system(parse(E1[0]), "U1").equator_coefficients()
    assert e1 == univariate_restrict(parse("-4*(2 - y)^4"), "set_x_to_1")
    with pytest.raises(ConstantInputError):
        chart_system(Polynomial.constant(3))


def test_real_roots_examples():
    (r,) = real_roots([-16, 32, -24, 8, -1])  # -(2 - w)^4
    assert (r.exact, r.multiplicity) == (2, 4)
    assert real_roots([1, 0, 1]) == []
    a, b = real_roots([-2, 0, 1])
    assert a.exact is None and b.exact is None
    assert a.hi - a.lo <= ROOT_WIDTH and b.hi - b.lo <= ROOT_WIDTH
    assert a.lo ** 2 <= 2 <= a.hi ** 2 or a.hi ** 2 <= 2 <= a.lo ** 2
    assert b.lo < Fraction(1414213562373095, 10 ** 15) < b.hi + Fraction(1, 10 ** 12)
    assert (a.multiplicity, b.multiplicity) == (1, 1)
    with pytest.raises(ValueError):
        real_roots([0, 0])


def test_zero_root_and_mixed_multiplicity():
    # w^2 (w - 1/3)^3 (w^2 - 3)
    p = Polynomial.x() ** 2 * (Polynomial.x() - Fraction(1, 3)) ** 3 * (Polynomial.x() ** 2 - 3)
    coeffs = univariate_restrict(p, "set_y_to_1")
    roots = real_roots(coeffs)
    assert [r.multiplicity for r in roots] == [1, 2, 3, 1]
    assert roots[1].exact == 0 and roots[2].exact == Fraction(1, 3)


def test_square_free_decomposition():
    parts = square_free_decomposition([0, 0, 1, -2, 1])  # w^2 (w - 1)^2
    assert [(m, len(c) - 1) for c, m in parts] == [(2, 2)]


def _summary(text):
    return [("vertical" if d.vertical else d.slope, d.multiplicity)
            for d in infinity_singularities(parse(text))]


def test_infinity_examples():
    assert _summary(E1[0]) == [(2, 4)]
    assert _summary(E2[0]) == [("vertical", 3)]
    assert _summary(E3[0]) == [("vertical", 2)]
    assert _summary("x^2 + y^2") == []
    assert _summary("x*y*(y - x)") == [(0, 1), (1, 1), ("vertical", 1)]
    with pytest.raises(ConstantInputError):
        infinity_singularities(Polynomial.constant(1))


def test_filled_examples():
    assert infinity_filled_check(PlanarPolyField(x, y))
    assert infinity_filled_check(PlanarPolyField(x * (x + y), y * (x + y)))
    for m in list(CONSTANT_JACOBIAN_MAPS.values()) + [TAN_FLOW]:
        for p in pair(m):
            assert not infinity_filled_check(hamiltonian_field(p))


@settings(max_examples=200)
@given(nonconstant_polys())
def test_hamiltonian_fields_never_filled(f):
    assert not infinity_filled_check(hamiltonian_field(f))


@given(nonconstant_polys(6))
def test_directions_are_roots_of_leading_form(f):
    fm = leading_form(f)
    coeffs = univariate_restrict(fm, "set_x_to_1")
    total = 0
    for d in infinity_singularities(f):
        total += d.multiplicity
        if d.vertical:
            assert all(i >= d.multiplicity for (i, _), _ in fm.items())
            assert any(i == d.multiplicity for (i, _), _ in fm.items())
            continue
        r = d.root
        if r.exact is not None:
            assert evaluate_exact(fm, (1, r.exact)) == 0
        else:
            lo = sum(c * r.lo ** k for k, c in enumerate(coeffs))
            hi = sum(c * r.hi ** k for k, c in enumerate(coeffs))
            assert lo * hi <= 0 or r.multiplicity % 2 == 0
    assert total + irreducible_degree(f) == f.total_degree
    assert irreducible_degree(f) % 2 == 0


@given(nonconstant_polys(5))
def test_chart_consistency(f):
    m = f.total_degree
    for d in infinity_singularities(f):
        if d.vertical:
            eq = chart_system(f, "U2").equator_coefficients()
            assert not eq or eq[0] == 0
        elif d.root.exact is not None:
            eq = chart_system(f, "U1").equator_coefficients()
            assert sum(c * d.root.exact ** k for k, c in enumerate(eq)) == 0
