"""Whole-map analysis: verdict, endpoint taxonomy and collision search."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .compactify import InfinityDirection, infinity_singularities
from .flow import (
    IntegratorConfig,
    blow_up_time,
    commutation_defect,
    transport_residual_f,
    transport_residual_g,
)
from .hamiltonian import (
    Window,
    constant_jacobian,
    finite_singularity_scan,
    hamiltonian_field,
    jacobian_det,
    verify_claim1,
)
from .levels import (
    AsymptoticEstimate,
    LadderDiverged,
    TraceStalled,
    asymptotic_slope,
    connected_branch_count,
    count_components,
    trace_through,
)
from .parser import format_poly
from .poly import Polynomial, compile_many, evaluate_float, partial_x, partial_y

A1, A2, A3, A4, A5, INDETERMINATE = "A1", "A2", "A3", "A4", "A5", "Indeterminate"

INJECTIVE = "InjectiveByTheorem1"
JACOBIAN_VANISHES = "JacobianVanishes"
NONCONSTANT_NONVANISHING = "NonconstantNonvanishing"
MULTI_BRANCH = "MultiBranchObstruction"

EXIT_CODES = {INJECTIVE: 0, JACOBIAN_VANISHES: 2, NONCONSTANT_NONVANISHING: 3,
              MULTI_BRANCH: 4}

# two exit angles closer than this are the same point at infinity
COINCIDE_TOL = 0.05
SLOPE_TOL = 0.01


def _angle_gap(a: float, b: float) -> float:
    d = abs(a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def direction_for(est: AsymptoticEstimate,
                  dirs: list[InfinityDirection]) -> Optional[InfinityDirection]:
    """The direction at infinity an exit estimate lands on, if any."""
    for d in dirs:
        if d.vertical and est.vertical:
            return d
        if not d.vertical and not est.vertical and d.matches_slope(est.slope, SLOPE_TOL):
            return d
    return None


@dataclass
class EndpointConfig:
    f_directions: list
    g_directions: list
    case: str
    f_ends: list = field(default_factory=list)
    g_ends: list = field(default_factory=list)
    note: str = ""

    def to_json(self):
        return {
            "case": self.case,
            "f_directions": [d.to_json() for d in self.f_directions],
            "g_directions": [d.to_json() for d in self.g_directions],
            "f_ends": [e.to_json() for e in self.f_ends],
            "g_ends": [e.to_json() for e in self.g_ends],
            "note": self.note,
        }


def _ends(p: Polynomial, point, window: Window):
    u = evaluate_float(p, point)
    branch = trace_through(p, u, point, window)
    if branch.stalled:
        raise TraceStalled("level curve through the common point is singular")
    return asymptotic_slope(branch)


def classify_endpoints(f: Polynomial, g: Polynomial, window: Window = Window(),
                       point=None) -> EndpointConfig:
    """Endpoint configuration of the level curves of ``f`` and ``g`` through ``point``.

    ``point`` defaults to the window centre.  Each curve's two ends are
    located at infinity by ladder-converged exit angles; the case depends on
    whether each curve's ends coincide and on how the two pairs overlap.
    """
    if f.is_constant() or g.is_constant():
        raise ValueError("both components must be nonconstant")
    point = window.center if point is None else tuple(point)
    fdirs = infinity_singularities(f)
    gdirs = infinity_singularities(g)
    try:
        fe = _ends(f, point, window)
        ge = _ends(g, point, window)
    except (LadderDiverged, TraceStalled, ValueError) as exc:
        return EndpointConfig(fdirs, gdirs, INDETERMINATE, note=str(exc))
    if len(fe) != 2 or len(ge) != 2:
        return EndpointConfig(fdirs, gdirs, INDETERMINATE, fe, ge,
                              note="level curve does not reach infinity at both ends")
    fa = [e.limit_angle for e in fe]
    ga = [e.limit_angle for e in ge]
    f_same = _angle_gap(*fa) < COINCIDE_TOL
    g_same = _angle_gap(*ga) < COINCIDE_TOL
    overlap = any(_angle_gap(a, b) < COINCIDE_TOL for a in fa for b in ga)
    if not f_same and not g_same:
        case = A2 if overlap else A1
    elif not f_same:
        case = A3
    elif not g_same:
        case = A4
    else:
        case = A5
    f_hit = [direction_for(e, fdirs) for e in fe]
    g_hit = [direction_for(e, gdirs) for e in ge]
    note = ""
    if any(d is None for d in f_hit + g_hit):
        note = "some exit direction matches no root of the leading form"
    return EndpointConfig(fdirs, gdirs, case, fe, ge, note)


# ---------------------------------------------------------------------------
# collisions

def _refine_collision(F, J, p, q, tol=1e-10, max_iter=40):
    """Newton on ``F(p) = F(q)`` in ``p`` with ``q`` held fixed."""
    t1, t2 = F(*q)
    x, y = float(p[0]), float(p[1])
    for _ in range(max_iter + 1):
        v1, v2 = F(x, y)
        r1, r2 = v1 - t1, v2 - t2
        if not (math.isfinite(r1) and math.isfinite(r2)):
            return None
        if math.hypot(r1, r2) <= tol:
            return x, y
        a, b, c, d = J(x, y)
        det = a * d - b * c
        if det == 0 or not math.isfinite(det):
            return None
        x -= (d * r1 - b * r2) / det
        y -= (a * r2 - c * r1) / det
    return None


def collision_search(f: Polynomial, g: Polynomial, window: Window = Window(),
                     grid_n: int = 64, *, max_candidates: int = 2000,
                     max_results: int = 50) -> list[tuple]:
    """Pairs ``p != q`` in the window with ``F(p) = F(q)`` for ``F = (f, g)``.

    Grid values of ``F`` are hashed into buckets of one grid-range quantum;
    points sharing a bucket (or a neighbouring one) but lying at least three
    grid spacings apart are refined by Newton on ``p`` with ``q`` fixed.
    Returns ``(p, q, residual)`` with residual ``<= 1e-10`` and
    ``|p - q| >= 1e-4``.
    """
    if grid_n < 16:
        raise ValueError("grid_n must be at least 16")
    xs = np.linspace(window.x_min, window.x_max, grid_n)
    ys = np.linspace(window.y_min, window.y_max, grid_n)
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    P = np.column_stack([XX.ravel(), YY.ravel()])
    V = np.column_stack([evaluate_float(f, (XX, YY)).ravel(),
                         evaluate_float(g, (XX, YY)).ravel()])
    span = np.ptp(V, axis=0)
    quantum = np.where(span > 0, span / grid_n, 1.0)
    keys = np.floor((V - V.min(axis=0)) / quantum).astype(np.int64)
    buckets: dict = {}
    for idx, (a, b) in enumerate(keys.tolist()):
        buckets.setdefault((a, b), []).append(idx)
    min_sep = 3 * max(xs[1] - xs[0], ys[1] - ys[0])
    parts_d, parts_i, parts_j = [], [], []
    for (a, b), members in sorted(buckets.items()):
        others = []
        for da, db in ((1, -1), (1, 0), (1, 1), (0, 1)):
            others += buckets.get((a + da, b + db), [])
        I = np.array(members)
        Jn = np.array(members + others)
        ii, jj = np.meshgrid(np.arange(len(I)), np.arange(len(Jn)), indexing="ij")
        # within a bucket keep each unordered pair once
        keep = (jj > ii) | (jj >= len(I))
        ii, jj = I[ii[keep]], Jn[jj[keep]]
        far = np.hypot(*(P[ii] - P[jj]).T) >= min_sep
        ii, jj = ii[far], jj[far]
        parts_d.append(np.hypot(*(V[ii] - V[jj]).T))
        parts_i.append(ii)
        parts_j.append(jj)
    if parts_d:
        D = np.concatenate(parts_d)
        CI = np.concatenate(parts_i)
        CJ = np.concatenate(parts_j)
    else:
        D = CI = CJ = np.array([], dtype=np.int64)
    order = np.lexsort((CJ, CI, D))[:max_candidates]
    cands = [(float(D[k]), int(CI[k]), int(CJ[k])) for k in order]
    F = compile_many([f, g])
    J = compile_many([partial_x(f), partial_y(f), partial_x(g), partial_y(g)])
    found = {}
    for _, i, j in cands:
        q = P[j]
        p = _refine_collision(F, J, P[i], q)
        if p is None:
            continue
        p = np.array(p)
        if np.hypot(*(p - q)) < 1e-4:
            continue
        res = float(np.hypot(*(np.array(F(*p)) - np.array(F(*q)))))
        a, b = tuple(float(v) + 0.0 for v in p), tuple(float(v) + 0.0 for v in q)
        a, b = min(a, b), max(a, b)
        key = (round(a[0], 6), round(a[1], 6), round(b[0], 6), round(b[1], 6))
        if key not in found:
            found[key] = (a, b, res)
        if len(found) >= max_results:
            break
    return [found[k] for k in sorted(found)]


# ---------------------------------------------------------------------------
# full report

@dataclass
class AnalyzeOptions:
    window: Window = Window()
    grid_n: int = 512
    levels: int = 21
    collision_grid: int = 64
    seed: int = 0
    flow_points: int = 5


@dataclass
class MapAnalysisReport:
    f_text: str
    g_text: str
    jacobian: dict
    infinity_f: list
    infinity_g: list
    endpoint_case: dict
    branch_counts: dict
    flow_checks: dict
    collisions: list
    verdict: str
    evidence: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def to_json(self) -> dict:
        return {
            "f_text": self.f_text,
            "g_text": self.g_text,
            "jacobian": self.jacobian,
            "infinity_f": self.infinity_f,
            "infinity_g": self.infinity_g,
            "endpoint_case": self.endpoint_case,
            "branch_counts": self.branch_counts,
            "flow_checks": self.flow_checks,
            "collisions": self.collisions,
            "verdict": self.verdict,
            "evidence": self.evidence,
        }


def _guarded(fn, *args, **kwargs):
    try:
        return {"status": "ok", **fn(*args, **kwargs)}
    except Exception as exc:  # sub-check failures are reported, never fatal
        return {"status": "error", "error": f"{type(exc).__name__}: {exc}"}


def sample_levels(p: Polynomial, window: Window, n: int, grid: int = 101) -> list[float]:
    """Level through the window centre plus ``n - 1`` quantiles of ``p`` on the window."""
    xs = np.linspace(window.x_min, window.x_max, grid)
    ys = np.linspace(window.y_min, window.y_max, grid)
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    vals = evaluate_float(p, (XX, YY)).ravel()
    qs = np.linspace(0.025, 0.975, max(n - 1, 1))
    levels = [float(evaluate_float(p, window.center))]
    levels += [float(v) for v in np.quantile(vals, qs)]
    return levels


def _branch_counts(p: Polynomial, opts: AnalyzeOptions):
    rows = []
    for u in sample_levels(p, opts.window, opts.levels):
        k = count_components(p, u, opts.window, opts.grid_n)
        row = {"level": u, "components": k, "connected": k}
        if k >= 2:
            # pieces may join outside the window
            row["connected"] = connected_branch_count(p, u, opts.window)["connected"]
        rows.append(row)
    return {"levels": rows,
            "max_components": max(r["connected"] for r in rows),
            "max_window_components": max(r["components"] for r in rows)}


def _jacobian_zero_found(D: Polynomial, window: Window, n: int = 257) -> bool:
    xs = np.linspace(window.x_min, window.x_max, n)
    ys = np.linspace(window.y_min, window.y_max, n)
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    V = evaluate_float(D, (XX, YY))
    return bool(np.any(V == 0) or (V.min() < 0 < V.max()))


def _sample_points(opts: AnalyzeOptions, n: int, shrink: float = 0.2):
    rng = np.random.default_rng(opts.seed)
    inner = opts.window.scaled(shrink)
    return [(float(rng.uniform(inner.x_min, inner.x_max)),
             float(rng.uniform(inner.y_min, inner.y_max))) for _ in range(n)]


def _flow_suite(f, g, opts: AnalyzeOptions):
    pts = _sample_points(opts, opts.flow_points)
    times = (-1.0, -0.5, 0.5, 1.0)
    defects = []
    incomparable = 0
    for t in times:
        for s in times:
            d = commutation_defect(f, g, pts[0], t, s)
            if d is None:
                incomparable += 1
            else:
                defects.append(d)
    tf, tg = [], []
    for p in pts:
        for s in (-1.0, 1.0):
            tf.append(transport_residual_f(f, g, p, s))
            tg.append(transport_residual_g(f, g, p, s))
    cfg = IntegratorConfig()
    blow = []
    for p in pts:
        for H in (hamiltonian_field(f), hamiltonian_field(g)):
            blow.append(blow_up_time(H, p, cfg))
    return {
        "commutation": {"max_defect": max(defects, default=0.0),
                        "incomparable": incomparable, "tolerance": 1e-6,
                        "pass": bool(defects) and max(defects) <= 1e-6},
        "transport_f": {"max_residual": max(tf), "tolerance": 1e-6,
                        "pass": max(tf) <= 1e-6},
        "transport_g": {"max_residual": max(tg), "tolerance": 1e-6,
                        "pass": max(tg) <= 1e-6},
        "completeness": {"start_points": len(pts), "escapes": sum(b is not None for b in blow),
                         "pass": all(b is None for b in blow)},
    }


def _commutation_only(f, g, opts: AnalyzeOptions):
    pts = _sample_points(opts, 1)
    times = (-0.5, 0.5)
    defects = [commutation_defect(f, g, pts[0], t, s) for t in times for s in times]
    seen = [d for d in defects if d is not None]
    return {"commutation": {"max_defect": max(seen, default=None),
                            "incomparable": len(defects) - len(seen)}}


def analyze(f: Polynomial, g: Polynomial, options: Optional[AnalyzeOptions] = None
            ) -> MapAnalysisReport:
    opts = options or AnalyzeOptions()
    if f.is_constant() or g.is_constant():
        raise ValueError("both components must be nonconstant")
    D = jacobian_det(f, g)
    c = constant_jacobian(f, g)
    if c is not None:
        jac = {"constant": _frac(c)}
    else:
        jac = {"nonconstant": format_poly(D)}

    infinity_f = [d.to_json() for d in infinity_singularities(f)]
    infinity_g = [d.to_json() for d in infinity_singularities(g)]
    endpoint = classify_endpoints(f, g, opts.window)
    counts = {"f": _guarded(_branch_counts, f, opts), "g": _guarded(_branch_counts, g, opts)}
    multi = any(v.get("max_components", 0) >= 2 for v in counts.values())

    evidence = {"bracket_identity": bool(verify_claim1(f, g))}
    if c is not None and c != 0:
        evidence["finite_singularities_f"] = [list(p) for p in finite_singularity_scan(
            hamiltonian_field(f), opts.window)]
        evidence["finite_singularities_g"] = [list(p) for p in finite_singularity_scan(
            hamiltonian_field(g), opts.window)]
        flow_checks = _guarded(_flow_suite, f, g, opts)
    else:
        flow_checks = _guarded(_commutation_only, f, g, opts)
    collisions = [{"p": list(p), "q": list(q), "residual": r}
                  for p, q, r in collision_search(f, g, opts.window, opts.collision_grid)]

    if c is not None and c != 0:
        verdict = INJECTIVE
    elif multi:
        verdict = MULTI_BRANCH
    elif c == 0 or _jacobian_zero_found(D, opts.window):
        verdict = JACOBIAN_VANISHES
    else:
        verdict = NONCONSTANT_NONVANISHING
    evidence["multi_branch_levels"] = multi
    if c is None:
        evidence["jacobian_zero_in_window"] = _jacobian_zero_found(D, opts.window)
    return MapAnalysisReport(format_poly(f), format_poly(g), jac, infinity_f, infinity_g,
                             endpoint.to_json(), counts, flow_checks, collisions, verdict,
                             evidence)


def _frac(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
