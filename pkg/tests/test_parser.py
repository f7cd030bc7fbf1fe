from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import polys
from polymaplab.parser import ParseError, format_poly, parse
from polymaplab.poly import Polynomial

x, y = Polynomial.x(), Polynomial.y()


def test_e1_component():
    assert parse("y - (2*x - y)^4") == y - (x.scale(2) - y) ** 4


@pytest.mark.parametrize("text, want", [
    ("0", Polynomial.zero()),
    ("3/4*x", x.scale(Fraction(3, 4))),
    ("-x^2", -(x ** 2)),
    ("--x", x),
    ("(x+y)^0", Polynomial.constant(1)),
    ("  1 + x -  x^2 * y ", 1 + x - x ** 2 * y),
    ("2^3", Polynomial.constant(8)),
])
def test_parse_values(text, want):
    assert parse(text) == want


def test_negative_exponent_position():
    with pytest.raises(ParseError) as e:
        parse("x^-1")
    assert e.value.position == 2
    assert e.value.caret().splitlines()[1] == "  ^"


@pytest.mark.parametrize("text, pos", [
    ("", 0),
    ("2x", 1),
    ("x/y", 1),
    ("2/y", 2),
    ("(x + y", 6),
    ("x + y)", 5),
    ("x^1/2", 3),
    ("x ^ 65", 4),
    ("x $ y", 2),
    ("3/0", 2),
])
def test_rejections(text, pos):
    with pytest.raises(ParseError) as e:
        parse(text)
    assert 0 <= e.value.position <= len(text.encode())
    assert e.value.position == pos


def test_format_examples():
    assert format_poly(parse("y + x - x^3")) == "-1*x^3 + x + y"
    assert format_poly(Polynomial.zero()) == "0"
    assert format_poly(parse("x - 1/2*y")) == "x - 1/2*y"
    assert format_poly(parse("4/2*x")) == "2*x"


@given(polys(6))
def test_round_trip(p):
    assert parse(format_poly(p)) == p


VALID = ["y - (2*x - y)^4", "1 + x - x^2*y", "-(1 + x^2)*y", "y - x - x^3", "3/2*x*y^2 - 7"]
# an extra "(" is only detectable at the end of input, so it is not injected
BAD_TOKENS = ["*", ")", "^", "/", "$", "2x"]


def _token_spans(text):
    """Offsets of the whitespace-separated pieces after spacing out operators."""
    spans, i = [], 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        j = i + 1
        if text[i].isdigit():
            while j < len(text) and text[j].isdigit():
                j += 1
        spans.append((i, j))
        i = j
    return spans


@given(st.sampled_from(VALID), st.data())
def test_error_at_or_before_corruption(text, data):
    # replace one token; an LL(1) parser must fail no later than the token
    # that follows the corrupted one
    spans = _token_spans(text)
    k = data.draw(st.integers(0, len(spans) - 1))
    bad = data.draw(st.sampled_from(BAD_TOKENS))
    a, b = spans[k]
    corrupted = text[:a] + bad + " " + text[b:]
    rest = corrupted[a + len(bad):]
    limit = a + len(bad) + (len(rest) - len(rest.lstrip()))
    try:
        parse(corrupted)
    except ParseError as e:
        assert e.position <= limit
