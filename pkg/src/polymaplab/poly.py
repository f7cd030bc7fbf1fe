"""Exact sparse bivariate polynomials over the rationals.

A :class:`Polynomial` is an immutable mapping ``(exp_x, exp_y) -> Fraction``
with zero coefficients purged.  Terms are kept in graded-lex order
(higher total degree first, then higher power of ``x``), which fixes the
iteration order, the canonical text form and the JSON serialization.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Iterator, Mapping, Tuple

import numpy as np

MAX_DEGREE = 64

Monomial = Tuple[int, int]


class DegreeBoundExceeded(ArithmeticError):
    pass


class ZeroPolynomialError(ValueError):
    pass


class _NegInf:
    """Degree of the zero polynomial; compares below every integer."""

    __slots__ = ()

    def __lt__(self, other):
        return not isinstance(other, _NegInf)

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return isinstance(other, _NegInf)

    def __eq__(self, other):
        return isinstance(other, _NegInf)

    def __hash__(self):
        return hash("-inf-degree")

    def __repr__(self):
        return "NEG_INF"


NEG_INF = _NegInf()


def _grlex_key(mono: Monomial):
    i, j = mono
    return (i + j, i)


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, float):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"cannot use {type(c).__name__} as a polynomial coefficient")


class Polynomial:
    __slots__ = ("_terms", "_items", "_hash", "_compiled")

    def __init__(self, terms: Mapping[Monomial, object] | Iterable = (), *,
                 max_degree: int = MAX_DEGREE):
        if isinstance(terms, Mapping):
            pairs = terms.items()
        else:
            pairs = terms
        acc: dict[Monomial, Fraction] = {}
        for mono, c in pairs:
            i, j = int(mono[0]), int(mono[1])
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent in monomial {mono}")
            if i + j > max_degree:
                raise DegreeBoundExceeded(
                    f"monomial x^{i}*y^{j} exceeds max total degree {max_degree}")
            acc[(i, j)] = acc.get((i, j), Fraction(0)) + _as_fraction(c)
        self._set({m: c for m, c in acc.items() if c != 0})

    def _set(self, terms: dict):
        self._terms = terms
        self._items = tuple(sorted(terms.items(), key=lambda t: _grlex_key(t[0]),
                                   reverse=True))
        self._hash = None
        self._compiled = None

    @classmethod
    def _from_clean(cls, terms: dict) -> "Polynomial":
        obj = cls.__new__(cls)
        obj._set(terms)
        return obj

    # constructors
    @classmethod
    def zero(cls) -> "Polynomial":
        return cls._from_clean({})

    @classmethod
    def constant(cls, c) -> "Polynomial":
        c = _as_fraction(c)
        return cls._from_clean({(0, 0): c} if c else {})

    @classmethod
    def x(cls) -> "Polynomial":
        return cls._from_clean({(1, 0): Fraction(1)})

    @classmethod
    def y(cls) -> "Polynomial":
        return cls._from_clean({(0, 1): Fraction(1)})

    @classmethod
    def monomial(cls, i: int, j: int, c=1) -> "Polynomial":
        return cls({(i, j): c})

    # inspection
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self) -> Tuple[Tuple[Monomial, Fraction], ...]:
        """Terms in descending graded-lex order."""
        return self._items

    def __iter__(self) -> Iterator[Tuple[Monomial, Fraction]]:
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def coefficient(self, i: int, j: int) -> Fraction:
        return self._terms.get((i, j), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(m == (0, 0) for m in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0, 0), Fraction(0))

    @property
    def total_degree(self):
        if not self._terms:
            return NEG_INF
        return max(i + j for i, j in self._terms)

    def degree_in(self, var: str) -> int:
        k = 0 if var == "x" else 1
        return max((m[k] for m in self._terms), default=0)

    def is_homogeneous(self) -> bool:
        return len({i + j for i, j in self._terms}) <= 1

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Polynomial.constant(other)._terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._items)
        return self._hash

    def __repr__(self):
        from .parser import format_poly
        return f"Polynomial({format_poly(self)!r})"

    def __str__(self):
        from .parser import format_poly
        return format_poly(self)

    # arithmetic
    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Polynomial._from_clean(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._from_clean({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers need a nonnegative integer exponent")
        result = Polynomial.constant(1)
        base = self
        while n:
            if n & 1:
                result = mul(result, base)
            n >>= 1
            if n:
                base = mul(base, base)
        return result

    def scale(self, c) -> "Polynomial":
        c = _as_fraction(c)
        if c == 0:
            return Polynomial.zero()
        return Polynomial._from_clean({m: c * v for m, v in self._terms.items()})

    # calculus and structure
    def partial_x(self) -> "Polynomial":
        return partial_x(self)

    def partial_y(self) -> "Polynomial":
        return partial_y(self)

    def __call__(self, x, y):
        if isinstance(x, (int, Fraction)) and isinstance(y, (int, Fraction)):
            return evaluate_exact(self, (x, y))
        return evaluate_float(self, (x, y))

    def compiled(self) -> Callable[[float, float], float]:
        """Fast scalar float evaluator (generated Python code, cached)."""
        if self._compiled is None:
            self._compiled = compile_many([self])
        fn = self._compiled
        return lambda x, y: fn(x, y)[0]


def _coerce(other):
    if isinstance(other, Polynomial):
        return other
    if isinstance(other, (int, Fraction)):
        return Polynomial.constant(other)
    return NotImplemented


def add(a: Polynomial, b: Polynomial) -> Polynomial:
    return a + b


def mul(a: Polynomial, b: Polynomial, *, max_degree: int = MAX_DEGREE) -> Polynomial:
    if a.is_zero() or b.is_zero():
        return Polynomial.zero()
    if a.total_degree + b.total_degree > max_degree:
        raise DegreeBoundExceeded(
            f"product degree {a.total_degree + b.total_degree} exceeds {max_degree}")
    out: dict[Monomial, Fraction] = {}
    for (i1, j1), c1 in a._terms.items():
        for (i2, j2), c2 in b._terms.items():
            m = (i1 + i2, j1 + j2)
            out[m] = out.get(m, 0) + c1 * c2
    return Polynomial._from_clean({m: c for m, c in out.items() if c != 0})


def partial_x(p: Polynomial) -> Polynomial:
    return Polynomial._from_clean(
        {(i - 1, j): c * i for (i, j), c in p._terms.items() if i > 0})


def partial_y(p: Polynomial) -> Polynomial:
    return Polynomial._from_clean(
        {(i, j - 1): c * j for (i, j), c in p._terms.items() if j > 0})


def _by_y_power(p: Polynomial) -> dict[int, list]:
    """Dense x-coefficient lists keyed by power of y."""
    rows: dict[int, list] = {}
    for (i, j), c in p._terms.items():
        row = rows.setdefault(j, [])
        if len(row) <= i:
            row.extend([0] * (i + 1 - len(row)))
        row[i] = c
    return rows


def _horner(coeffs, t):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def evaluate_exact(p: Polynomial, pt) -> Fraction:
    x, y = (_as_fraction(v) for v in pt)
    rows = _by_y_power(p)
    if not rows:
        return Fraction(0)
    top = max(rows)
    ycoeffs = [_horner(rows[j], x) if j in rows else 0 for j in range(top + 1)]
    return Fraction(_horner(ycoeffs, y))


def evaluate_float(p: Polynomial, pt):
    """Evaluate in double precision; ``pt`` coordinates may be numpy arrays."""
    x, y = pt
    if not isinstance(x, np.ndarray):
        x = float(x)
    if not isinstance(y, np.ndarray):
        y = float(y)
    rows = _by_y_power(p)
    if not rows:
        return np.zeros(np.broadcast(x, y).shape) if np.ndim(x) or np.ndim(y) else 0.0
    top = max(rows)
    ycoeffs = [_horner([float(c) for c in rows[j]], x) if j in rows else 0.0
               for j in range(top + 1)]
    out = _horner(ycoeffs, y)
    if np.ndim(x) or np.ndim(y):
        return np.broadcast_to(out, np.broadcast(x, y).shape).astype(float)
    return float(out)


def homogeneous_component(p: Polynomial, k: int) -> Polynomial:
    if k < 0:
        raise ValueError("degree must be nonnegative")
    return Polynomial._from_clean({m: c for m, c in p._terms.items() if sum(m) == k})


def homogeneous_components(p: Polynomial) -> list[Polynomial]:
    if p.is_zero():
        return []
    return [homogeneous_component(p, k) for k in range(p.total_degree + 1)]


def leading_form(p: Polynomial) -> Polynomial:
    if p.is_zero():
        raise ZeroPolynomialError("the zero polynomial has no leading form")
    return homogeneous_component(p, p.total_degree)


def univariate_restrict(p: Polynomial, axis: str) -> list[Fraction]:
    """Ascending coefficients of ``p(1, w)`` (``set_x_to_1``) or ``p(w, 1)``."""
    if axis == "set_x_to_1":
        k = 1
    elif axis == "set_y_to_1":
        k = 0
    else:
        raise ValueError(f"unknown axis {axis!r}")
    if p.is_zero():
        return []
    n = max(m[k] for m in p._terms)
    coeffs = [Fraction(0)] * (n + 1)
    for m, c in p._terms.items():
        coeffs[m[k]] += c
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    if coeffs == [0]:
        return []
    return coeffs


def divide_by_monomial(p: Polynomial, i: int, j: int) -> Polynomial | None:
    """Exact quotient ``p / (x^i y^j)`` or ``None`` when not divisible."""
    out = {}
    for (a, b), c in p._terms.items():
        if a < i or b < j:
            return None
        out[(a - i, b - j)] = c
    return Polynomial._from_clean(out)


def substitute(p: Polynomial, x: Polynomial, y: Polynomial) -> Polynomial:
    """Compose ``p(x(...), y(...))`` exactly."""
    rows = _by_y_power(p)
    result = Polynomial.zero()
    ypow = Polynomial.constant(1)
    for j in range(max(rows, default=-1) + 1):
        if j in rows:
            acc = Polynomial.zero()
            for c in reversed(rows[j]):
                acc = acc * x + Polynomial.constant(c)
            result = result + acc * ypow
        if j < max(rows):
            ypow = ypow * y
    return result


def _term_src(i, j, c):
    factors = [repr(float(c))]
    if i:
        factors.append("x" if i == 1 else f"x**{i}")
    if j:
        factors.append("y" if j == 1 else f"y**{j}")
    return "*".join(factors)


def _compile(polys) -> Callable:
    parts = []
    for p in polys:
        terms = [_term_src(i, j, c) for (i, j), c in p.items()]
        parts.append(" + ".join(terms) if terms else "0.0")
    src = f"lambda x, y: ({', '.join(parts)},)"
    return eval(src, {"__builtins__": {}})


class _ExactEvaluator:
    """Correctly rounded float value of a polynomial at float arguments.

    Floats are dyadic rationals, so the value is a ratio of integers that
    Python divides with a single rounding.
    """

    def __init__(self, p: Polynomial):
        den = 1
        for _, c in p.items():
            den = den * c.denominator // _gcd(den, c.denominator)
        self.den = den
        self.terms = [(i, j, int(c * den)) for (i, j), c in p.items()]

    def __call__(self, x: float, y: float) -> float:
        if not self.terms:
            return 0.0
        a, kx = x.as_integer_ratio()
        b, ky = y.as_integer_ratio()
        kx = kx.bit_length() - 1
        ky = ky.bit_length() - 1
        shifts = [kx * i + ky * j for i, j, _ in self.terms]
        K = max(shifts)
        num = 0
        for (i, j, c), s in zip(self.terms, shifts):
            num += (c * a ** i * b ** j) << (K - s)
        return num / (self.den << K)


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


# float results whose terms cancel by more than this factor are recomputed exactly
_CANCELLATION_LIMIT = 1e3


def compile_many(polys, *, guarded: bool = True) -> Callable[[float, float], tuple]:
    """One scalar function returning a tuple of float values.

    With ``guarded`` the generated code also sums term magnitudes; components
    whose float value lost more than three digits to cancellation are
    re-evaluated exactly.
    """
    polys = list(polys)
    if not guarded:
        return _compile(polys)
    parts = []
    for p in polys:
        terms = [_term_src(i, j, c) for (i, j), c in p.items()]
        if len(terms) <= 1:
            parts.append(f"{terms[0] if terms else '0.0'}, 0.0")
        else:
            parts.append(f"{' + '.join(terms)}, "
                         f"{' + '.join('abs(%s)' % t for t in terms)}")
    raw = eval(f"lambda x, y: ({', '.join(parts)},)", {"__builtins__": {}, "abs": abs})
    exact = [_ExactEvaluator(p) for p in polys]
    n = len(polys)
    limit = _CANCELLATION_LIMIT

    def fn(x, y):
        vals = raw(x, y)
        out = []
        for k in range(n):
            v, mag = vals[2 * k], vals[2 * k + 1]
            if mag > limit * abs(v) and mag != float("inf") and mag == mag:
                v = exact[k](float(x), float(y))
            out.append(v)
        return tuple(out)

    return fn
