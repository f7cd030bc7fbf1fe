"""Acceptance suite: nine end-to-end checks with explicit tolerances.

Each ``criterion_*`` function returns a :class:`CriterionResult`; the
suite is shared by the test-suite and ``polymaplab verify``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .analyzer import classify_endpoints
from .catalog import CASE_A1, CASE_A2, CASE_A3, CASE_A5, E1, E2, E3, PINCHUK_F, TAN_FLOW, pair
from .compactify import infinity_filled_check, infinity_singularities
from .flow import (
    CHECK_CONFIG,
    IntegratorConfig,
    blow_up_time,
    commutation_defect,
    integrate,
    tan_flow_closed_form,
    tan_flow_interval,
    transport_residual_f,
    transport_residual_g,
)
from .hamiltonian import (
    PlanarPolyField,
    Window,
    hamiltonian_field,
    jacobian_det,
    lie_bracket,
    verify_claim1,
)
from .levels import count_components, trace_level
from .parser import format_poly, parse
from .poly import Polynomial, homogeneous_components, partial_x, partial_y


@dataclass(frozen=True)
class Tolerances:
    flow_oracle: float = 1e-6
    interval_fraction: float = 0.9
    blow_up: float = 1e-3
    commutation: float = 1e-6
    transport: float = 1e-6
    pinchuk_defect: float = 1e-3
    time_limits: tuple = (1, 10, 10, 5, 30, 60, 30, 30, 30)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float
    limit: float
    measured: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.passed and self.seconds < self.limit

    def line(self) -> str:
        tag = "PASS" if self.ok else "FAIL"
        vals = ", ".join(f"{k}={_show(v)}" for k, v in self.measured.items())
        return (f"[{tag}] {self.number}. {self.name} "
                f"({self.seconds:.2f}s, limit {self.limit:g}s): {vals}")


def _show(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


# ---------------------------------------------------------------------------
# random inputs

def random_poly(rng: np.random.Generator, max_degree: int = 5, max_terms: int = 8,
                nonconstant: bool = False) -> Polynomial:
    while True:
        p = Polynomial.zero()
        for _ in range(int(rng.integers(1, max_terms + 1))):
            d = int(rng.integers(0, max_degree + 1))
            i = int(rng.integers(0, d + 1))
            c = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5)))
            p = p + Polynomial.monomial(i, d - i, c)
        if not nonconstant or not p.is_constant():
            return p


def random_field(rng, max_degree: int = 4) -> PlanarPolyField:
    return PlanarPolyField(random_poly(rng, max_degree), random_poly(rng, max_degree))


def _uniform_points(rng, n, lo=-1.0, hi=1.0):
    return [(float(rng.uniform(lo, hi)), float(rng.uniform(lo, hi))) for _ in range(n)]


# ---------------------------------------------------------------------------
# criteria

def criterion_determinants(tol: Tolerances = Tolerances()) -> tuple[bool, dict]:
    want = {"E1": (E1, parse("-2")), "E2": (E2, parse("1")), "E3": (E3, parse("1")),
            "tan_flow": (TAN_FLOW, parse("1 + x^2"))}
    got = {k: jacobian_det(*pair(m)) for k, (m, _) in want.items()}
    ok = all(got[k] == w for k, (_, w) in want.items())
    return ok, {k: format_poly(v) for k, v in got.items()}


def criterion_bracket_identity(tol: Tolerances = Tolerances(), n_random: int = 200,
                     seed: int = 1) -> tuple[bool, dict]:
    named = [pair(m) for m in (E1, E2, E3, TAN_FLOW)]
    rng = np.random.default_rng(seed)
    rand = [(random_poly(rng), random_poly(rng)) for _ in range(n_random)]
    fails = sum(not verify_claim1(f, g) for f, g in named + rand)
    return fails == 0, {"pairs": len(named) + len(rand), "failures": fails}


def _dir_summary(f_text: str):
    return [("vertical" if d.vertical else str(d.slope), d.multiplicity)
            for d in infinity_singularities(parse(f_text))]


def criterion_infinity(tol: Tolerances = Tolerances(), n_random: int = 200,
                       seed: int = 2) -> tuple[bool, dict]:
    want = {"E1": [("2", 4)], "E2": [("vertical", 3)], "E3": [("vertical", 2)]}
    got = {k: _dir_summary(m[0]) for k, m in (("E1", E1), ("E2", E2), ("E3", E3))}
    rng = np.random.default_rng(seed)
    filled = sum(infinity_filled_check(hamiltonian_field(random_poly(rng, nonconstant=True)))
                 for _ in range(n_random))
    ok = got == want and filled == 0
    return ok, {**{k: got[k] for k in got}, "filled_random": filled}


def criterion_flow_oracle(tol: Tolerances = Tolerances()) -> tuple[bool, dict]:
    H = hamiltonian_field(pair(TAN_FLOW)[0])
    worst = 0.0
    worst_blow = 0.0
    for c1 in (-2.0, 0.0, 1.0):
        a, b = tan_flow_interval(c1)
        for c2 in (1.0, -3.0):
            for t_end in (tol.interval_fraction * b, tol.interval_fraction * a):
                traj = integrate(H, (c1, c2), t_end, CHECK_CONFIG)
                if not traj.completed:
                    return False, {"error": f"flow from {(c1, c2)} ended early"}
                ex, ey = tan_flow_closed_form(c1, c2, traj.t)
                err = float(np.max(np.hypot(traj.x - ex, traj.y - ey)))
                worst = max(worst, err)
            est = blow_up_time(H, (c1, c2), IntegratorConfig(abs_tol=1e-12, rel_tol=1e-12))
            gap = math.inf if est is None else abs(est - b)
            worst_blow = max(worst_blow, gap)
    ok = worst <= tol.flow_oracle and worst_blow <= tol.blow_up
    return ok, {"max_flow_error": worst, "max_blow_up_error": worst_blow}


def criterion_commutation(tol: Tolerances = Tolerances(), seed: int = 3) -> tuple[bool, dict]:
    rng = np.random.default_rng(seed)
    grid = np.linspace(-1.0, 1.0, 5)
    worst_c = 0.0
    worst_t = 0.0
    incomparable = 0
    for m in (E1, E2, E3):
        f, g = pair(m)
        p = _uniform_points(rng, 1)[0]
        for t in grid:
            for s in grid:
                d = commutation_defect(f, g, p, float(t), float(s))
                if d is None:
                    incomparable += 1
                else:
                    worst_c = max(worst_c, d)
        for q in _uniform_points(rng, 10, -2.0, 2.0):
            s, t = float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2))
            worst_t = max(worst_t, transport_residual_f(f, g, q, s),
                          transport_residual_g(f, g, q, t))
    f, g = parse(PINCHUK_F), parse("y")
    pin = max((d for t in grid for s in grid
               if (d := commutation_defect(f, g, (1.0, 1.0), float(t), float(s))) is not None),
              default=0.0)
    ok = (incomparable == 0 and worst_c <= tol.commutation and worst_t <= tol.transport
          and pin > tol.pinchuk_defect)
    return ok, {"max_commutation_defect": worst_c, "incomparable": incomparable,
                "max_transport_residual": worst_t, "pinchuk_max_defect": pin}


def criterion_branches(tol: Tolerances = Tolerances(), n_levels: int = 10, seed: int = 4,
                       grid_n: int = 512) -> tuple[bool, dict]:
    window = Window()
    rng = np.random.default_rng(seed)
    pin = parse(PINCHUK_F)
    pin_counts = (count_components(pin, 1.0, window, grid_n), len(trace_level(pin, 1.0, window)))
    bad = []
    for name, m in (("E1", E1), ("E2", E2), ("E3", E3)):
        for text in m:
            p = parse(text)
            for u in rng.uniform(-5.0, 5.0, n_levels):
                a = count_components(p, float(u), window, grid_n)
                b = len(trace_level(p, float(u), window))
                if not a == b == 1:
                    bad.append((name, text, float(u), a, b))
    ok = pin_counts == (3, 3) and not bad
    return ok, {"pinchuk_level_1": pin_counts, "disagreements": len(bad)}


def criterion_completeness(tol: Tolerances = Tolerances(), n_points: int = 20,
                           seed: int = 5) -> tuple[bool, dict]:
    rng = np.random.default_rng(seed)
    escapes = 0
    for m in (E1, E2, E3):
        f, g = pair(m)
        for H in (hamiltonian_field(f), hamiltonian_field(g)):
            for p in _uniform_points(rng, n_points, -3.0, 3.0):
                escapes += blow_up_time(H, p) is not None
    H = hamiltonian_field(pair(TAN_FLOW)[0])
    missing = sum(blow_up_time(H, p) is None for p in _uniform_points(rng, n_points, -3.0, 3.0))
    ok = escapes == 0 and missing == 0
    return ok, {"constant_jacobian_escapes": escapes, "tan_flow_non_escapes": missing}


def criterion_endpoints(tol: Tolerances = Tolerances()) -> tuple[bool, dict]:
    want = {"A1": CASE_A1, "A2": CASE_A2, "A3": CASE_A3, "A5": CASE_A5}
    got = {k: classify_endpoints(*pair(m)).case for k, m in want.items()}
    return all(k == v for k, v in got.items()), got


def criterion_properties(tol: Tolerances = Tolerances(), n_cases: int = 1000,
                         seed: int = 6) -> tuple[bool, dict]:
    rng = np.random.default_rng(seed)
    fails = {"algebra": 0, "euler": 0, "round_trip": 0, "bracket": 0}
    x, y = Polynomial.x(), Polynomial.y()
    for _ in range(n_cases):
        a, b, c = (random_poly(rng, 4) for _ in range(3))
        k = Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4)))
        fails["algebra"] += not (a + b == b + a and a * b == b * a
                                 and (a + b) + c == a + (b + c) and (a * b) * c == a * (b * c)
                                 and a * (b + c) == a * b + a * c and a - a == Polynomial.zero()
                                 and a.scale(k) == a * Polynomial.constant(k))
        euler = x * partial_x(a) + y * partial_y(a)
        weighted = sum((h.scale(h.total_degree) for h in homogeneous_components(a)
                        if not h.is_zero()), Polynomial.zero())
        fails["euler"] += euler != weighted
        fails["round_trip"] += parse(format_poly(a)) != a
        X, Y, Z = random_field(rng, 3), random_field(rng, 3), random_field(rng, 3)
        fails["bracket"] += not (
            lie_bracket(X, Y) == lie_bracket(Y, X).scale(-1)
            and lie_bracket(X + Z, Y) == lie_bracket(X, Y) + lie_bracket(Z, Y)
            and lie_bracket(X.scale(k), Y) == lie_bracket(X, Y).scale(k))
    return not any(fails.values()), {"cases": n_cases, **fails}


CRITERIA: list[tuple[int, str, Callable]] = [
    (1, "symbolic determinants", criterion_determinants),
    (2, "bracket identity", criterion_bracket_identity),
    (3, "infinity directions", criterion_infinity),
    (4, "flow oracle", criterion_flow_oracle),
    (5, "commutation and transport", criterion_commutation),
    (6, "branch counting", criterion_branches),
    (7, "completeness evidence", criterion_completeness),
    (8, "endpoint taxonomy", criterion_endpoints),
    (9, "property suites", criterion_properties),
]


def run_criterion(number: int, tol: Tolerances = Tolerances()) -> CriterionResult:
    _, name, fn = CRITERIA[number - 1]
    t0 = time.perf_counter()
    try:
        passed, measured = fn(tol)
    except Exception as exc:  # a crash is a failed row, not an aborted suite
        passed, measured = False, {"error": f"{type(exc).__name__}: {exc}"}
    elapsed = time.perf_counter() - t0
    return CriterionResult(number, name, bool(passed), elapsed,
                           float(tol.time_limits[number - 1]), measured)


def run_suite(tol: Tolerances = Tolerances(), numbers=None) -> list[CriterionResult]:
    numbers = numbers or [n for n, _, _ in CRITERIA]
    return [run_criterion(n, tol) for n in numbers]
