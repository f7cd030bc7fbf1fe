"""Real level curves ``f = u`` in a window: tracing, counting, asymptotic slopes.

Branches are traced by predictor-corrector continuation along ``H_f``,
whose orbits are exactly the level curves of ``f``.  Component counting is
an independent marching-squares oracle with union-find, so the two methods
check each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .hamiltonian import Window
from .poly import Polynomial, compile_many, evaluate_float, partial_x, partial_y

H_INIT = 1e-2
H_MIN = 1e-5
H_MAX = 0.5
MAX_TURN = 0.1  # radians of tangent rotation allowed per step
MAX_POINTS = 200_000


class TraceStalled(RuntimeError):
    pass


class LadderDiverged(RuntimeError):
    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


def on_curve_tolerance(u: float) -> float:
    return 1e-9 * (1 + abs(u))


@dataclass(frozen=True)
class Exit:
    """Where a branch leaves the window."""

    point: tuple
    angle: float  # polar angle of the exit point about the origin

    @property
    def vertical(self) -> bool:
        return self.point[0] == 0.0

    @property
    def slope(self) -> Optional[float]:
        return None if self.vertical else self.point[1] / self.point[0]


@dataclass
class LevelCurveBranch:
    level: float
    points: np.ndarray  # (n, 2), ordered along H_f
    exits: tuple = (None, None)  # (backward end, forward end)
    closed_in_window: bool = False
    stalled: bool = False
    poly: Optional[Polynomial] = field(default=None, repr=False, compare=False)
    window: Optional[Window] = field(default=None, repr=False, compare=False)

    @property
    def exit_slopes(self) -> tuple:
        return tuple(None if e is None else e.slope for e in self.exits)

    def __len__(self):
        return len(self.points)


class _Curve:
    """Scalar evaluators for ``f - u`` and its gradient."""

    def __init__(self, f: Polynomial, u: float):
        self.f = f
        self.u = float(u)
        self._fn = compile_many([f, partial_x(f), partial_y(f)])

    def __call__(self, x, y):
        v, gx, gy = self._fn(x, y)
        return v - self.u, gx, gy

    def project(self, x, y, tol, max_iter=8):
        """Newton projection onto the level set along the gradient."""
        for k in range(max_iter + 1):
            r, gx, gy = self(x, y)
            if abs(r) <= tol:
                # one more step, kept only if it improves the residual
                g2 = gx * gx + gy * gy
                if g2 > 0 and r != 0:
                    nx, ny = x - r * gx / g2, y - r * gy / g2
                    r2 = self(nx, ny)[0]
                    if abs(r2) < abs(r):
                        return nx, ny, k
                return x, y, k
            g2 = gx * gx + gy * gy
            if not g2 > 1e-24 or not math.isfinite(g2):
                return None
            x, y = x - r * gx / g2, y - r * gy / g2
        return None

    def tangent(self, x, y):
        _, gx, gy = self(x, y)
        n = math.hypot(gx, gy)
        if n < 1e-12:
            return None
        return -gy / n, gx / n


def _inside(window: Window, x, y) -> bool:
    return window.x_min <= x <= window.x_max and window.y_min <= y <= window.y_max


def _exit_point(curve: _Curve, window: Window, p, q, tol):
    """Boundary point of the curve between inside ``p`` and outside ``q``."""
    (px, py), (qx, qy) = p, q
    # first boundary line crossed by the chord
    best = None
    for axis, bound in ((0, window.x_min), (0, window.x_max),
                        (1, window.y_min), (1, window.y_max)):
        a, b = (px, qx) if axis == 0 else (py, qy)
        if (a - bound) * (b - bound) <= 0 and a != b:
            lam = (bound - a) / (b - a)
            if best is None or lam < best[0]:
                best = (lam, axis, bound)
    if best is None:
        # p itself sits on the frame, outside only by rounding
        return p
    lam, axis, bound = best
    # solve f - u = 0 along the boundary line, bracketed by the chord ends
    if axis == 0:
        lo, hi = py, qy
        g = lambda s: curve(bound, s)[0]
    else:
        lo, hi = px, qx
        g = lambda s: curve(s, bound)[0]
    s0 = lo + lam * (hi - lo)
    span = max(abs(hi - lo), 1e-9)
    a, b = s0 - span, s0 + span
    ga, gb = g(a), g(b)
    if ga * gb > 0:
        # boundary root not bracketed: fall back to the chord crossing
        pt = (bound, s0) if axis == 0 else (s0, bound)
        proj = curve.project(*pt, tol)
        return pt if proj is None else (proj[0], proj[1])
    for _ in range(200):
        m = (a + b) / 2
        gm = g(m)
        if gm == 0 or b - a < 1e-15 * max(1.0, abs(m)):
            break
        if (gm < 0) == (ga < 0):
            a, ga = m, gm
        else:
            b = m
    m = (a + b) / 2
    return (bound, m) if axis == 0 else (m, bound)


def _trace_one_way(curve: _Curve, window: Window, start, sign: int, tol: float,
                   h_max: float, close_radius: float):
    """March from ``start`` along ``sign * H_f``; returns (points, status, exit)."""
    pts = [start]
    x, y = start
    t = curve.tangent(x, y)
    if t is None:
        return pts, "stalled", None
    d = (sign * t[0], sign * t[1])
    h = min(H_INIT, h_max)
    travelled = 0.0
    while len(pts) < MAX_POINTS:
        qx, qy = x + h * d[0], y + h * d[1]
        proj = curve.project(qx, qy, tol)
        ok = proj is not None and proj[2] <= 5
        if ok:
            nx, ny, _ = proj
            tn = curve.tangent(nx, ny)
            ok = tn is not None
        if ok:
            dn = (sign * tn[0], sign * tn[1])
            cos_turn = d[0] * dn[0] + d[1] * dn[1]
            step = math.hypot(nx - x, ny - y)
            ok = cos_turn >= math.cos(MAX_TURN) and 0.5 * h <= step <= 1.5 * h
        if not ok:
            h /= 2
            if h < H_MIN:
                return pts, "stalled", None
            continue
        if not _inside(window, nx, ny):
            e = _exit_point(curve, window, (x, y), (nx, ny), tol)
            pts.append(e)
            return pts, "exit", e
        travelled += step
        # closed loop: back near the start after going some distance
        if travelled > 4 * close_radius and len(pts) > 3:
            sx, sy = start
            if _seg_dist(sx, sy, x, y, nx, ny) < close_radius:
                pts.append(start)
                return pts, "closed", None
        pts.append((nx, ny))
        x, y, d = nx, ny, dn
        if cos_turn > math.cos(MAX_TURN / 4):
            h = min(h * 1.5, h_max)
    return pts, "stalled", None


def _seg_dist(px, py, ax, ay, bx, by):
    vx, vy = bx - ax, by - ay
    L2 = vx * vx + vy * vy
    if L2 == 0:
        return math.hypot(px - ax, py - ay)
    s = max(0.0, min(1.0, ((px - ax) * vx + (py - ay) * vy) / L2))
    return math.hypot(px - ax - s * vx, py - ay - s * vy)


def _dist_to_polyline(pts: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Distance from each query point in ``P`` (m, 2) to the polyline ``pts``."""
    if len(pts) == 1:
        return np.hypot(P[:, 0] - pts[0, 0], P[:, 1] - pts[0, 1])
    A = pts[:-1]
    V = pts[1:] - A
    L2 = np.einsum("ij,ij->i", V, V)
    L2[L2 == 0] = 1e-300
    W = P[:, None, :] - A[None, :, :]
    s = np.clip(np.einsum("mij,ij->mi", W, V) / L2, 0.0, 1.0)
    D = W - s[..., None] * V[None, :, :]
    return np.sqrt(np.min(np.einsum("mij,mij->mi", D, D), axis=1))


def trace_through(f: Polynomial, u: float, seed, window: Window, *,
                  h_max: Optional[float] = None) -> LevelCurveBranch:
    """Trace the branch of ``f = u`` through ``seed`` both ways until it leaves
    ``window``, closes up, or stalls."""
    curve = _Curve(f, u)
    tol = on_curve_tolerance(u)
    if h_max is None:
        h_max = min(H_MAX, window.diameter / 100)
    close_radius = window.diameter * 1e-3
    proj = curve.project(float(seed[0]), float(seed[1]), tol)
    if proj is None:
        raise TraceStalled(f"cannot project {tuple(seed)} onto the level {u}")
    start = (proj[0], proj[1])
    fwd, st_f, ex_f = _trace_one_way(curve, window, start, +1, tol, h_max, close_radius)
    if st_f == "closed":
        return LevelCurveBranch(float(u), np.array(fwd), (None, None), True, False, f, window)
    bwd, st_b, ex_b = _trace_one_way(curve, window, start, -1, tol, h_max, close_radius)
    pts = np.array(bwd[::-1] + fwd[1:])
    exits = tuple(None if e is None else Exit((float(e[0]), float(e[1])),
                                              math.atan2(e[1], e[0]))
                  for e in (ex_b, ex_f))
    stalled = "stalled" in (st_f, st_b)
    return LevelCurveBranch(float(u), pts, exits, False, stalled, f, window)


def _edge_roots(curve: _Curve, a, b, n, along_x: bool, fixed: float):
    """Roots of ``f - u`` on one window edge from ``n`` samples plus bisection."""
    s = np.linspace(a, b, n)
    vals = np.array([curve(v, fixed)[0] if along_x else curve(fixed, v)[0] for v in s])
    roots = [float(v) for v, r in zip(s, vals) if r == 0]
    for k in np.nonzero(vals[:-1] * vals[1:] < 0)[0]:
        lo, hi, glo = s[k], s[k + 1], vals[k]
        for _ in range(100):
            m = (lo + hi) / 2
            gm = curve(m, fixed)[0] if along_x else curve(fixed, m)[0]
            if gm == 0:
                lo = hi = m
                break
            if (gm < 0) == (glo < 0):
                lo, glo = m, gm
            else:
                hi = m
        roots.append(float((lo + hi) / 2))
    return [(r, fixed) if along_x else (fixed, r) for r in roots]


def _seeds(f: Polynomial, u: float, window: Window, seed_grid: int, curve: _Curve):
    w = window
    n_edge = 4 * seed_grid + 1
    seeds = []
    seeds += _edge_roots(curve, w.x_min, w.x_max, n_edge, True, w.y_min)
    seeds += _edge_roots(curve, w.x_min, w.x_max, n_edge, True, w.y_max)
    seeds += _edge_roots(curve, w.y_min, w.y_max, n_edge, False, w.x_min)
    seeds += _edge_roots(curve, w.y_min, w.y_max, n_edge, False, w.x_max)
    xs = np.linspace(w.x_min, w.x_max, seed_grid + 1)
    ys = np.linspace(w.y_min, w.y_max, seed_grid + 1)
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    V = evaluate_float(f, (XX, YY)) - u
    for axis in (0, 1):
        a = V[:-1, :] if axis == 0 else V[:, :-1]
        b = V[1:, :] if axis == 0 else V[:, 1:]
        idx = np.nonzero(a * b < 0)
        for i, j in zip(*idx):
            va, vb = a[i, j], b[i, j]
            lam = va / (va - vb)
            if axis == 0:
                seeds.append((xs[i] + lam * (xs[i + 1] - xs[i]), ys[j]))
            else:
                seeds.append((xs[i], ys[j] + lam * (ys[j + 1] - ys[j])))
    return seeds


def trace_level(f: Polynomial, u: float, window: Window = Window(), *,
                seed_grid: int = 128, merge_radius: Optional[float] = None
                ) -> list[LevelCurveBranch]:
    """All branches of ``f = u`` meeting ``window``, sorted by first point.

    Seeds come from the window edges and from sign changes on an interior
    grid; a seed within ``merge_radius`` of an already traced branch is
    skipped.  Branches hitting a singular point of the level set are
    returned truncated with ``stalled=True``.
    """
    if f.is_constant():
        raise ValueError("level curves of a constant polynomial are not curves")
    u = float(u)
    curve = _Curve(f, u)
    if merge_radius is None:
        merge_radius = window.diameter * 1e-3
    tol = on_curve_tolerance(u)
    branches: list[LevelCurveBranch] = []
    for seed in _seeds(f, u, window, seed_grid, curve):
        proj = curve.project(float(seed[0]), float(seed[1]), tol)
        if proj is None:
            continue
        p = np.array([[proj[0], proj[1]]])
        if any(_dist_to_polyline(b.points, p)[0] < merge_radius for b in branches):
            continue
        if not window.contains(p[0], pad=1e-9 * window.diameter):
            continue
        branches.append(trace_through(f, u, p[0], window))
    branches.sort(key=lambda b: (round(float(b.points[0, 0]), 12),
                                 round(float(b.points[0, 1]), 12)))
    return branches


def _trace_exterior(curve: _Curve, base: Window, start, sign: int, far: float,
                    h_min_scale: float, max_steps: int = 20_000):
    """Follow a branch outside ``base`` from its exit point.

    Steps grow with the distance from the origin.  Returns ``("reentered",
    point)``, ``("far", point)`` once ``|p| > far``, or ``("stalled", point)``.
    """
    x, y = start
    t = curve.tangent(x, y)
    if t is None:
        return "stalled", start
    d = (sign * t[0], sign * t[1])
    h = h_min_scale
    for _ in range(max_steps):
        r = math.hypot(x, y)
        h_cap = max(h_min_scale, 0.05 * r)
        qx, qy = x + h * d[0], y + h * d[1]
        _, gx, gy = curve(qx, qy)
        tol = on_curve_tolerance(curve.u) + 1e-13 * math.hypot(gx, gy) * max(1.0, r)
        proj = curve.project(qx, qy, tol)
        ok = proj is not None and proj[2] <= 5
        if ok:
            nx, ny, _ = proj
            tn = curve.tangent(nx, ny)
            ok = tn is not None
        if ok:
            dn = (sign * tn[0], sign * tn[1])
            cos_turn = d[0] * dn[0] + d[1] * dn[1]
            step = math.hypot(nx - x, ny - y)
            ok = cos_turn >= math.cos(MAX_TURN) and 0.5 * h <= step <= 1.5 * h
        if not ok:
            h /= 2
            if h < H_MIN * h_min_scale:
                return "stalled", (x, y)
            continue
        if _inside(base, nx, ny):
            return "reentered", (nx, ny)
        if math.hypot(nx, ny) > far:
            return "far", (nx, ny)
        x, y, d = nx, ny, dn
        if cos_turn > math.cos(MAX_TURN / 4):
            h = min(h * 1.5, h_cap)
    return "stalled", (x, y)


def connected_branch_count(f: Polynomial, u: float, window: Window = Window(), *,
                           far_factor: float = 1e3,
                           branches: Optional[list] = None) -> dict:
    """Branches of ``f = u`` meeting ``window``, merged through the exterior.

    A curve can leave the window and come back, which a window-local count
    sees as two pieces.  Each exit is followed outside until it re-enters
    the window (its piece is merged with the piece it re-enters on) or
    passes radius ``far_factor * window.diameter * max(1, |u|)``, taken as
    reaching infinity.
    """
    if branches is None:
        branches = trace_level(f, u, window)
    curve = _Curve(f, u)
    far = far_factor * window.diameter * max(1.0, abs(u))
    uf = _UnionFind()
    for k in range(len(branches)):
        uf.find(k)
    ends = []
    for k, b in enumerate(branches):
        for e in b.exits:
            if e is not None:
                ends.append((k, e.point))
    stalled = 0
    h0 = min(H_MAX, window.diameter / 100)
    for k, b in enumerate(branches):
        for end, sign in ((0, -1), (1, +1)):
            e = b.exits[end]
            if e is None:
                continue
            status, pt = _trace_exterior(curve, window, e.point, sign, far, h0)
            if status == "reentered":
                j = min(ends, key=lambda it: math.hypot(it[1][0] - pt[0], it[1][1] - pt[1]))[0]
                uf.union(k, j)
            elif status == "stalled":
                stalled += 1
    return {"window_branches": len(branches), "connected": uf.count() if branches else 0,
            "stalled_exteriors": stalled}


# ---------------------------------------------------------------------------
# grid oracle

class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, a):
        parent = self.parent
        root = a
        while parent.setdefault(root, root) != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def count(self):
        return len({self.find(a) for a in list(self.parent)})


def count_components(f: Polynomial, u: float, window: Window = Window(),
                     grid_n: int = 512) -> int:
    """Connected components of ``f = u`` in ``window`` by marching squares.

    Nodes of the union-find are grid edges whose endpoints differ in sign
    (``f - u >= 0`` counts as positive); each cell joins its crossing edges
    along its contour segments, with saddle cells resolved by the sign at
    the cell centre.
    """
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    n = grid_n
    xs = np.linspace(window.x_min, window.x_max, n + 1)
    ys = np.linspace(window.y_min, window.y_max, n + 1)
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    S = (evaluate_float(f, (XX, YY)) - u) >= 0
    Hc = S[:-1, :] != S[1:, :]  # edge (i,j)-(i+1,j), shape (n, n+1)
    Vc = S[:, :-1] != S[:, 1:]  # edge (i,j)-(i,j+1), shape (n+1, n)
    H_id = np.arange(n * (n + 1)).reshape(n, n + 1)
    V_id = n * (n + 1) + np.arange((n + 1) * n).reshape(n + 1, n)
    bottom, top = H_id[:, :-1], H_id[:, 1:]
    left, right = V_id[:-1, :], V_id[1:, :]
    cb, ct, cl, cr = Hc[:, :-1], Hc[:, 1:], Vc[:-1, :], Vc[1:, :]
    ncross = cb.astype(int) + ct + cl + cr
    uf = _UnionFind()
    for e in np.concatenate([H_id[Hc], V_id[Vc]]).tolist():
        uf.find(e)

    ids = np.stack([bottom, top, left, right], axis=-1)
    mask = np.stack([cb, ct, cl, cr], axis=-1)
    two = ncross == 2
    if np.any(two):
        sel_ids = ids[two]
        sel_mask = mask[two]
        order = np.argsort(~sel_mask, axis=1, kind="stable")[:, :2]
        pairs = np.take_along_axis(sel_ids, order, axis=1)
        for a, b in pairs.tolist():
            uf.union(a, b)
    four = np.argwhere(ncross == 4)
    if len(four):
        cx = (xs[four[:, 0]] + xs[four[:, 0] + 1]) / 2
        cy = (ys[four[:, 1]] + ys[four[:, 1] + 1]) / 2
        centre = (evaluate_float(f, (cx, cy)) - u) >= 0
        for (i, j), c in zip(four.tolist(), np.atleast_1d(centre).tolist()):
            b, t, l, r = (int(bottom[i, j]), int(top[i, j]), int(left[i, j]),
                          int(right[i, j]))
            if c == bool(S[i, j]):
                # corners (i+1,j) and (i,j+1) are cut off
                uf.union(b, r)
                uf.union(t, l)
            else:
                uf.union(b, l)
                uf.union(t, r)
    return uf.count()


# ---------------------------------------------------------------------------
# asymptotics

@dataclass(frozen=True)
class AsymptoticEstimate:
    angles: tuple  # exit angles across the ladder
    limit_angle: float
    converged: bool

    @property
    def vertical(self) -> bool:
        return abs(abs(self.limit_angle) - math.pi / 2) < 0.02

    @property
    def slope(self) -> Optional[float]:
        return None if self.vertical else math.tan(self.limit_angle)

    def to_json(self):
        return {"angles": list(self.angles), "limit_angle": self.limit_angle,
                "slope": self.slope, "vertical": self.vertical,
                "converged": self.converged}


DEFAULT_LADDER = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)


def _extrapolate(angles: Sequence[float]):
    a = np.unwrap(np.asarray(angles, dtype=float))
    d = np.diff(a)
    scale = max(1.0, float(np.max(np.abs(a))))
    if abs(d[-1]) <= 1e-9 * scale:
        return float(a[-1]), True
    shrinking = all(abs(d[k + 1]) < abs(d[k]) for k in range(len(d) - 1))
    same_sign = all(np.sign(d[k]) == np.sign(d[0]) for k in range(len(d)))
    if not (shrinking and same_sign and len(d) >= 2):
        return float(a[-1]), False
    d1, d2 = d[-2], d[-1]
    limit = a[-1] + d2 * d2 / (d1 - d2)
    # wrap into (-pi, pi]
    limit = math.atan2(math.sin(limit), math.cos(limit))
    return float(limit), True


def asymptotic_slope(branch: LevelCurveBranch, window_ladder: Optional[Sequence[Window]] = None,
                     *, f: Optional[Polynomial] = None) -> list[AsymptoticEstimate]:
    """Exit-direction estimates of a branch's two ends over growing windows.

    The branch is re-traced from one of its points in each window of the
    ladder (default: the branch window scaled 1x to 32x) and the polar
    angle of each exit is extrapolated (Aitken) once the differences shrink
    monotonically.  Raises :class:`LadderDiverged` otherwise.
    """
    f = f if f is not None else branch.poly
    if f is None:
        raise ValueError("branch carries no polynomial")
    if branch.closed_in_window or all(e is None for e in branch.exits):
        raise ValueError("branch does not leave its window")
    base = branch.window if branch.window is not None else Window()
    if window_ladder is None:
        window_ladder = [base.scaled(k) for k in DEFAULT_LADDER]
    seed = branch.points[len(branch.points) // 2]
    per_end = [[], []]
    for w in window_ladder:
        b = trace_through(f, branch.level, seed, w)
        for k in (0, 1):
            if b.exits[k] is not None:
                per_end[k].append(b.exits[k].angle)
            else:
                per_end[k].append(None)
    out = []
    diverged = False
    for k in (0, 1):
        angles = per_end[k]
        if branch.exits[k] is None:
            continue
        if any(a is None for a in angles) or len(angles) < 3:
            out.append(AsymptoticEstimate(tuple(a for a in angles if a is not None),
                                          math.nan, False))
            diverged = True
            continue
        limit, ok = _extrapolate(angles)
        out.append(AsymptoticEstimate(tuple(angles), limit, ok))
        diverged |= not ok
    if diverged:
        raise LadderDiverged("exit angles did not stabilise across the ladder", out)
    return out


def branches_to_csv(branches: Sequence[LevelCurveBranch]) -> str:
    lines = ["level,branch,x,y"]
    for k, b in enumerate(branches):
        for x, y in b.points.tolist():
            lines.append(f"{b.level!r},{k},{x!r},{y!r}")
    return "\n".join(lines) + "\n"
