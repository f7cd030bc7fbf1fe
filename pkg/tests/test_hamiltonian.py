from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import fields, polys, small_fracs
from polymaplab.catalog import CONSTANT_JACOBIAN_MAPS, E1, E2, E3, PINCHUK_F, TAN_FLOW, pair
from polymaplab.hamiltonian import (
    PlanarPolyField,
    Window,
    constant_jacobian,
    field_det,
    finite_singularity_scan,
    hamiltonian_field,
    jacobian_det,
    lie_bracket,
    verify_claim1,
)
from polymaplab.parser import parse
from polymaplab.poly import Polynomial

x, y = Polynomial.x(), Polynomial.y()
ZERO = Polynomial.zero()
ONE = Polynomial.constant(1)


def test_hamiltonian_field_examples():
    assert hamiltonian_field(parse("-(1 + x^2)*y")) == PlanarPolyField(parse("1 + x^2"),
                                                                       parse("-2*x*y"))
    assert hamiltonian_field(Polynomial.constant(7)).is_zero()
    assert hamiltonian_field(parse("y - x^2")) == PlanarPolyField(-ONE, parse("-2*x"))


@pytest.mark.parametrize("maps, want", [(E1, "-2"), (E2, "1"), (E3, "1"), (("x", "y"), "1"),
                                        (TAN_FLOW, "1 + x^2")])
def test_jacobian_examples(maps, want):
    assert jacobian_det(*pair(maps)) == parse(want)


def test_lie_bracket_examples():
    X = PlanarPolyField(ONE, ZERO)
    assert lie_bracket(X, PlanarPolyField(x, ZERO)) == PlanarPolyField(ONE, ZERO)
    assert lie_bracket(X, X).is_zero()
    f, g = pair(E2)
    assert lie_bracket(hamiltonian_field(f), hamiltonian_field(g)).is_zero()


def test_bracket_identity_examples():
    assert verify_claim1(x, y)
    res = verify_claim1(parse(PINCHUK_F), y)
    assert res.holds
    assert not res.bracket.is_zero()


def test_constant_jacobian_examples():
    assert constant_jacobian(*pair(E3)) == 1
    assert constant_jacobian(x, x) == 0
    assert constant_jacobian(*pair(TAN_FLOW)) is None


def test_singularity_scan_examples():
    assert finite_singularity_scan(hamiltonian_field(parse("y - x^2"))) == []
    assert finite_singularity_scan(PlanarPolyField(x, y)) == [(0.0, 0.0)]
    assert finite_singularity_scan(hamiltonian_field(parse("x^2 + y^2"))) == [(0.0, 0.0)]
    with pytest.raises(ValueError):
        finite_singularity_scan(PlanarPolyField(ZERO, ZERO))


@pytest.mark.parametrize("name", sorted(CONSTANT_JACOBIAN_MAPS))
def test_no_singularities_for_constant_jacobian(name):
    f, g = pair(CONSTANT_JACOBIAN_MAPS[name])
    assert finite_singularity_scan(hamiltonian_field(f)) == []
    assert finite_singularity_scan(hamiltonian_field(g)) == []


def test_window():
    w = Window()
    assert w.as_tuple() == (-10, 10, -10, 10)
    assert w.scaled(2).as_tuple() == (-20, 20, -20, 20)
    with pytest.raises(ValueError):
        Window(1, 0, 0, 1)


@settings(max_examples=200)
@given(polys(), polys())
def test_bracket_identity_random(f, g):
    assert verify_claim1(f, g).holds


@given(polys(), polys())
def test_jacobian_antisymmetric_and_field_det(f, g):
    assert jacobian_det(f, g) == -jacobian_det(g, f)
    assert field_det(hamiltonian_field(f), hamiltonian_field(g)) == jacobian_det(f, g)


@given(fields(), fields(), fields(), small_fracs)
def test_bracket_bilinear_antisymmetric(X, Y, Z, k):
    assert lie_bracket(X, Y) == lie_bracket(Y, X).scale(-1)
    assert lie_bracket(X + Z, Y) == lie_bracket(X, Y) + lie_bracket(Z, Y)
    assert lie_bracket(X, Y + Z) == lie_bracket(X, Y) + lie_bracket(X, Z)
    assert lie_bracket(X.scale(k), Y) == lie_bracket(X, Y).scale(k)
