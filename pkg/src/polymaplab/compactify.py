"""Poincaré compactification charts and the singularities of H_f at infinity.

Chart polynomials reuse :class:`Polynomial` with the first slot holding the
finite chart coordinate ``u`` (``y/x`` in ``U1``, ``x/y`` in ``U2``) and the
second slot holding ``z`` (``1/x`` in ``U1``, ``1/y`` in ``U2``).  Only the
upper hemisphere ``z >= 0`` is represented, so diametrically opposite points
of the equator are one direction.

The rescaled system is ``dz/dtau = rhs_first``, ``du/dtau = rhs_second``:
the second equation governs ``u``, not ``z``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .hamiltonian import PlanarPolyField
from .poly import (
    Polynomial,
    divide_by_monomial,
    homogeneous_component,
    leading_form,
    partial_x,
    partial_y,
    univariate_restrict,
)

ROOT_WIDTH = Fraction(1, 2**40)


class ConstantInputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# univariate exact arithmetic (ascending coefficient lists of Fractions)

def _trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _deriv(a):
    return _trim([i * a[i] for i in range(1, len(a))])


def _divmod(a, b):
    a = _trim(a)
    b = _trim(b)
    if not b:
        raise ZeroDivisionError("division by the zero polynomial")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    r = [Fraction(c) for c in a]
    lead = b[-1]
    while len(r) >= len(b) and r:
        k = len(r) - len(b)
        c = r[-1] / lead
        q[k] = c
        for i, bc in enumerate(b):
            r[i + k] -= c * bc
        r = _trim(r)
    return _trim(q), r


def _monic(a):
    a = _trim(a)
    return [c / a[-1] for c in a]


def _gcd(a, b):
    a, b = _trim(a), _trim(b)
    while b:
        a, b = b, _divmod(a, b)[1]
    return _monic(a) if a else []


def _eval(a, t):
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * t + c
    return acc


def _sign(v):
    return (v > 0) - (v < 0)


def square_free_decomposition(a) -> list[tuple[list, int]]:
    """Yun's algorithm: ``a = lc * prod a_i^i`` with ``a_i`` square-free, coprime."""
    a = _monic(a)
    if len(a) <= 1:
        return []
    out = []
    b = _gcd(a, _deriv(a))
    c = _divmod(a, b)[0]
    d = _trim([x - y for x, y in _zip_pad(_divmod(_deriv(a), b)[0], _deriv(c))])
    i = 1
    while len(c) > 1:
        w = _gcd(c, d)
        if len(w) > 1:
            out.append((w, i))
        c = _divmod(c, w)[0]
        d = _trim([x - y for x, y in _zip_pad(_divmod(d, w)[0], _deriv(c))])
        i += 1
    return out


def _zip_pad(a, b):
    n = max(len(a), len(b))
    return zip(list(a) + [0] * (n - len(a)), list(b) + [0] * (n - len(b)))


def _divisors(n: int, limit: int = 10**12) -> Optional[list[int]]:
    n = abs(n)
    if n > limit:
        return None
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def _rational_roots(a) -> list[Fraction]:
    """Rational roots of a square-free polynomial with a nonzero constant term."""
    den = 1
    for c in a:
        den = den * c.denominator // _int_gcd(den, c.denominator)
    ints = [int(c * den) for c in a]
    ps = _divisors(ints[0])
    qs = _divisors(ints[-1])
    if ps is None or qs is None:
        return []
    found = set()
    for p in ps:
        for q in qs:
            for cand in (Fraction(p, q), Fraction(-p, q)):
                if cand not in found and _eval(a, cand) == 0:
                    found.add(cand)
    return sorted(found)


def _int_gcd(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


def sturm_sequence(a) -> list[list]:
    seq = [_trim(a), _deriv(a)]
    while len(seq[-1]) > 1:
        r = _divmod(seq[-2], seq[-1])[1]
        if not r:
            break
        seq.append([-c for c in r])
    return seq


def _variations(seq, t) -> int:
    signs = [s for s in (_sign(_eval(p, t)) for p in seq) if s]
    return sum(1 for u, v in zip(signs, signs[1:]) if u != v)


def _cauchy_bound(a) -> Fraction:
    lead = abs(a[-1])
    return 1 + max((abs(c) / lead for c in a[:-1]), default=Fraction(0))


def isolate_real_roots(a, width: Fraction = ROOT_WIDTH) -> list[tuple[Fraction, Fraction]]:
    """Disjoint intervals ``(lo, hi]`` each holding one root of square-free ``a``.

    Intervals are bisected by Sturm counts until they isolate, then refined by
    sign bisection to ``hi - lo <= width``.
    """
    a = _trim(a)
    if len(a) <= 1:
        return []
    seq = sturm_sequence(a)
    B = _cauchy_bound(a)
    stack = [(-B, B, _variations(seq, -B) - _variations(seq, B))]
    isolated = []
    while stack:
        lo, hi, n = stack.pop()
        if n == 0:
            continue
        if n == 1:
            isolated.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        vm = _variations(seq, mid)
        stack.append((lo, mid, _variations(seq, lo) - vm))
        stack.append((mid, hi, vm - _variations(seq, hi)))
    out = []
    for lo, hi in sorted(isolated):
        s_hi = _sign(_eval(a, hi))
        if s_hi == 0:
            out.append((hi, hi))
            continue
        while hi - lo > width:
            mid = (lo + hi) / 2
            s_mid = _sign(_eval(a, mid))
            if s_mid == 0:
                lo = hi = mid
                break
            if s_mid == s_hi:
                hi = mid
            else:
                lo = mid
        out.append((lo, hi))
    return out


@dataclass(frozen=True)
class RealRoot:
    """A real root, exact when rational, otherwise an isolating interval."""

    lo: Fraction
    hi: Fraction
    multiplicity: int

    @property
    def exact(self) -> Optional[Fraction]:
        return self.lo if self.lo == self.hi else None

    @property
    def approx(self) -> float:
        return float((self.lo + self.hi) / 2)

    def to_json(self):
        if self.exact is not None:
            return _frac_text(self.exact)
        return {"lo": _frac_text(self.lo), "hi": _frac_text(self.hi)}


def _frac_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def real_roots(coeffs: Sequence, width: Fraction = ROOT_WIDTH) -> list[RealRoot]:
    """All real roots with multiplicities of an ascending coefficient list."""
    a = _trim([Fraction(c) for c in coeffs])
    if not a:
        raise ValueError("the zero polynomial has no isolated roots")
    roots: list[RealRoot] = []
    k = 0
    while a[k] == 0:
        k += 1
    if k:
        roots.append(RealRoot(Fraction(0), Fraction(0), k))
    a = a[k:]
    for factor, mult in square_free_decomposition(a):
        rest = factor
        for r in _rational_roots(factor):
            roots.append(RealRoot(r, r, mult))
            rest = _divmod(rest, [-r, Fraction(1)])[0]
        for lo, hi in isolate_real_roots(rest, width):
            roots.append(RealRoot(lo, hi, mult))
    roots.sort(key=lambda r: (r.lo, r.hi))
    return roots


# ---------------------------------------------------------------------------
# charts

@dataclass(frozen=True)
class ChartSystem:
    chart: str  # "U1" ([1:u:z]) or "U2" ([u:1:z])
    rhs_first: Polynomial  # dz/dtau
    rhs_second: Polynomial  # du/dtau
    rescale_power: int
    degree: int

    def equator_coefficients(self) -> list[Fraction]:
        """Ascending coefficients of ``rhs_second(u, 0)``."""
        n = self.rhs_second.degree_in("x")
        coeffs = [self.rhs_second.coefficient(i, 0) for i in range(n + 1)]
        return _trim(coeffs)

    def __call__(self, u: float, z: float):
        return (self.rhs_first(u, z), self.rhs_second(u, z))


def _chart_terms(p: Polynomial, m: int, shift: int, swap: bool, extra_u: int = 0):
    """Map each ``c x^i y^j`` of ``p`` to ``c u^a z^(m - shift - i - j)``.

    ``u`` carries the exponent of the non-inverted coordinate: ``j`` in U1
    (``swap=False``) and ``i`` in U2.
    """
    out = {}
    for (i, j), c in p.items():
        a = (i if swap else j) + extra_u
        e = m - shift - i - j
        if e < 0:
            raise AssertionError("chart exponent went negative")
        out[(a, e)] = out.get((a, e), 0) + c
    return Polynomial(out)


def chart_system(f: Polynomial, chart: str = "U1") -> ChartSystem:
    if f.is_constant():
        raise ConstantInputError("chart systems need a nonconstant polynomial")
    m = f.total_degree
    fx, fy = partial_x(f), partial_y(f)
    if chart == "U1":
        first = _chart_terms(fy, m, 0, swap=False)
        second = _chart_terms(fx, m, 1, swap=False) + _chart_terms(fy, m, 1, swap=False,
                                                                   extra_u=1)
    elif chart == "U2":
        first = -_chart_terms(fx, m, 0, swap=True)
        second = -(_chart_terms(fy, m, 1, swap=True)
                   + _chart_terms(fx, m, 1, swap=True, extra_u=1))
    else:
        raise ValueError(f"unknown chart {chart!r}")
    return ChartSystem(chart, first, second, m - 2, m)


# ---------------------------------------------------------------------------
# directions at infinity

@dataclass(frozen=True)
class InfinityDirection:
    root: Optional[RealRoot]  # slope y/x; None for the vertical direction
    multiplicity: int
    vertical: bool = False

    @property
    def slope(self):
        """Exact slope, ``(lo, hi)`` for irrational slopes, ``None`` if vertical."""
        if self.vertical:
            return None
        return self.root.exact if self.root.exact is not None else (self.root.lo,
                                                                     self.root.hi)

    @property
    def approx_slope(self) -> float:
        return float("inf") if self.vertical else self.root.approx

    def angle(self) -> float:
        """Direction angle in ``(-pi/2, pi/2]``."""
        import math
        return math.pi / 2 if self.vertical else math.atan(self.root.approx)

    def matches_slope(self, s: float, tol: float) -> bool:
        if self.vertical:
            return False
        lo, hi = float(self.root.lo), float(self.root.hi)
        return lo - tol * (1 + abs(lo)) <= s <= hi + tol * (1 + abs(hi))

    def to_json(self):
        return {"slope": None if self.vertical else self.root.to_json(),
                "multiplicity": self.multiplicity,
                "vertical": self.vertical}


def infinity_singularities(f: Polynomial) -> list[InfinityDirection]:
    if f.is_constant():
        raise ConstantInputError("directions at infinity need a nonconstant polynomial")
    fm = leading_form(f)
    dirs = [InfinityDirection(r, r.multiplicity)
            for r in real_roots(univariate_restrict(fm, "set_x_to_1"))]
    k_vert = min(i for (i, _), _ in fm.items())
    if k_vert:
        dirs.append(InfinityDirection(None, k_vert, vertical=True))
    return dirs


def irreducible_degree(f: Polynomial) -> int:
    """Degree of the part of the leading form with no real linear factor."""
    return f.total_degree - sum(d.multiplicity for d in infinity_singularities(f))


def infinity_filled_check(X: PlanarPolyField) -> bool:
    """True iff the top parts are ``(x h, y h)`` for one homogeneous ``h``.

    Such fields have the whole equator filled with singularities.
    """
    if X.is_zero():
        raise ValueError("the zero field has no leading part")
    m = max(X.P.total_degree, X.Q.total_degree)
    pm = homogeneous_component(X.P, m)
    qm = homogeneous_component(X.Q, m)
    h = divide_by_monomial(pm, 1, 0)
    if h is None or h.is_zero():
        return False
    return qm == h * Polynomial.y()
