"""Flows of planar polynomial fields and the flow-level laws of a Jacobian pair.

The integrator is the Dormand-Prince 5(4) pair (FSAL, PI step control) on
plain Python floats, which for two-dimensional systems is several times
faster than going through small numpy arrays.  Samples are the accepted step
endpoints; in between, cubic Hermite interpolation from the stored
derivatives gives dense output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .hamiltonian import PlanarPolyField, constant_jacobian, hamiltonian_field
from .poly import Polynomial, compile_many, evaluate_float

MIN_STEP = 1e-14


@dataclass(frozen=True)
class IntegratorConfig:
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    max_step: float = 0.1
    escape_radius: float = 1e6
    max_time: float = 1e3

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "max_step", "escape_radius", "max_time"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


# The laws below are checked an order or more above integrator tolerance.
CHECK_CONFIG = IntegratorConfig(abs_tol=1e-12, rel_tol=1e-12)


class FlowError(RuntimeError):
    pass


class FlowEscaped(FlowError):
    pass


class NonConstantJacobian(ValueError):
    pass


REACHED_TIME = "ReachedTime"
ESCAPED = "Escaped"
STEP_UNDERFLOW = "StepUnderflow"


@dataclass
class FlowTrajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    terminal: str
    escape_time: Optional[float] = None
    crossings: dict = field(default_factory=dict)
    dx: Optional[np.ndarray] = None
    dy: Optional[np.ndarray] = None

    @property
    def samples(self):
        return list(zip(self.t.tolist(), zip(self.x.tolist(), self.y.tolist())))

    @property
    def end(self) -> tuple[float, float]:
        return float(self.x[-1]), float(self.y[-1])

    @property
    def completed(self) -> bool:
        return self.terminal == REACHED_TIME

    def terminal_label(self) -> str:
        if self.terminal == ESCAPED:
            return f"Escaped({self.escape_time!r})"
        return self.terminal

    def at(self, t: float) -> tuple[float, float]:
        """Dense output by cubic Hermite interpolation between samples."""
        ts = self.t
        forward = ts[-1] >= ts[0]
        key = ts if forward else -ts
        tk = t if forward else -t
        if not key[0] <= tk <= key[-1]:
            raise ValueError(f"t={t} outside the integrated range")
        k = int(np.searchsorted(key, tk, side="right")) - 1
        k = min(max(k, 0), len(ts) - 2)
        return _hermite(ts[k], ts[k + 1], (self.x[k], self.y[k]), (self.x[k + 1], self.y[k + 1]),
                        (self.dx[k], self.dy[k]), (self.dx[k + 1], self.dy[k + 1]), t)

    def to_csv(self) -> str:
        lines = ["t,x,y"]
        for t, x, y in zip(self.t.tolist(), self.x.tolist(), self.y.tolist()):
            lines.append(f"{t!r},{x!r},{y!r}")
        lines.append(f"# terminal={self.terminal_label()}")
        return "\n".join(lines) + "\n"


def _hermite(t0, t1, y0, y1, f0, f1, t):
    h = t1 - t0
    if h == 0:
        return (float(y0[0]), float(y0[1]))
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return tuple(float(h00 * a + h10 * h * fa + h01 * b + h11 * h * fb)
                 for a, b, fa, fb in zip(y0, y1, f0, f1))


# Dormand-Prince 5(4) tableau
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                                22 / 525, -1 / 40)


def _field_fn(X):
    if isinstance(X, PlanarPolyField):
        return compile_many([X.P, X.Q])
    return X


def integrate(X, p0, t_end: float, cfg: IntegratorConfig = IntegratorConfig(), *,
              radii: Sequence[float] = ()) -> FlowTrajectory:
    """Integrate ``p' = X(p)`` from ``p0`` over ``[0, t_end]`` (backward if negative).

    Stops early when ``|p|`` reaches ``cfg.escape_radius`` (the crossing time
    is located on the dense output) or when the step size underflows.
    ``radii`` lists extra radii whose first crossing times are recorded.
    """
    if t_end == 0:
        raise ValueError("t_end must be nonzero")
    x, y = float(p0[0]), float(p0[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("initial point must be finite")
    F = _field_fn(X)
    sgn = 1.0 if t_end > 0 else -1.0
    T = abs(t_end)
    atol, rtol = cfg.abs_tol, cfg.rel_tol
    R = cfg.escape_radius
    pending = sorted(r for r in radii if r > 0)

    def f(a, b):
        try:
            u, v = F(a, b)
        except (OverflowError, ZeroDivisionError):
            return math.inf, math.inf
        return sgn * u, sgn * v

    k1 = f(x, y)
    ts, xs, ys, dxs, dys = [0.0], [x], [y], [k1[0]], [k1[1]]
    crossings = {}
    terminal = REACHED_TIME
    escape_time = None

    r0 = math.hypot(x, y)
    for r in list(pending):
        if r0 >= r:
            crossings[r] = 0.0
            pending.remove(r)
    if r0 >= R:
        return FlowTrajectory(np.array(ts), np.array(xs), np.array(ys), ESCAPED, 0.0,
                              crossings, np.array(dxs) * sgn, np.array(dys) * sgn)

    # initial step from the local time scale
    scale = max(abs(x), abs(y), 1.0)
    speed = max(abs(k1[0]), abs(k1[1]), 1e-12)
    h = min(cfg.max_step, T, 0.01 * scale / speed)
    h = max(h, 1e-6 * min(T, 1.0)) if math.isfinite(h) else cfg.max_step
    t = 0.0
    err_prev = 1e-4
    while t < T:
        last = t + h >= T - 1e-13 * max(1.0, T)
        if last:
            h = T - t
        if h < MIN_STEP and not last:
            terminal = STEP_UNDERFLOW
            break
        a1, b1 = k1
        k2 = f(x + h * _A21 * a1, y + h * _A21 * b1)
        k3 = f(x + h * (_A31 * a1 + _A32 * k2[0]), y + h * (_A31 * b1 + _A32 * k2[1]))
        k4 = f(x + h * (_A41 * a1 + _A42 * k2[0] + _A43 * k3[0]),
               y + h * (_A41 * b1 + _A42 * k2[1] + _A43 * k3[1]))
        k5 = f(x + h * (_A51 * a1 + _A52 * k2[0] + _A53 * k3[0] + _A54 * k4[0]),
               y + h * (_A51 * b1 + _A52 * k2[1] + _A53 * k3[1] + _A54 * k4[1]))
        k6 = f(x + h * (_A61 * a1 + _A62 * k2[0] + _A63 * k3[0] + _A64 * k4[0] + _A65 * k5[0]),
               y + h * (_A61 * b1 + _A62 * k2[1] + _A63 * k3[1] + _A64 * k4[1] + _A65 * k5[1]))
        xn = x + h * (_B1 * a1 + _B3 * k3[0] + _B4 * k4[0] + _B5 * k5[0] + _B6 * k6[0])
        yn = y + h * (_B1 * b1 + _B3 * k3[1] + _B4 * k4[1] + _B5 * k5[1] + _B6 * k6[1])
        k7 = f(xn, yn)
        ex = h * (_E1 * a1 + _E3 * k3[0] + _E4 * k4[0] + _E5 * k5[0] + _E6 * k6[0] + _E7 * k7[0])
        ey = h * (_E1 * b1 + _E3 * k3[1] + _E4 * k4[1] + _E5 * k5[1] + _E6 * k6[1] + _E7 * k7[1])
        sx = atol + rtol * max(abs(x), abs(xn))
        sy = atol + rtol * max(abs(y), abs(yn))
        err = math.sqrt(((ex / sx) ** 2 + (ey / sy) ** 2) / 2)
        if not math.isfinite(err):
            h *= 0.2
            err_prev = 1e-4
            continue
        if err <= 1.0:
            t_new = T if last else t + h
            r_new = math.hypot(xn, yn)
            hit = [r for r in pending if r_new >= r]
            for r in hit:
                crossings[r] = sgn * _crossing_time(t, h, (x, y), (xn, yn), k1, k7, r)
                pending.remove(r)
            if r_new >= R:
                tc = _crossing_time(t, h, (x, y), (xn, yn), k1, k7, R)
                px, py = _hermite(t, t + h, (x, y), (xn, yn), k1, k7, tc)
                kc = f(px, py)
                ts.append(tc)
                xs.append(px)
                ys.append(py)
                dxs.append(kc[0])
                dys.append(kc[1])
                terminal = ESCAPED
                escape_time = sgn * tc
                break
            t, x, y, k1 = t_new, xn, yn, k7
            ts.append(t)
            xs.append(x)
            ys.append(y)
            dxs.append(k1[0])
            dys.append(k1[1])
            fac = 0.9 * max(err, 1e-10) ** (-0.7 / 5) * err_prev ** (0.4 / 5)
            h = h * min(5.0, max(0.2, fac))
            err_prev = max(err, 1e-4)
        else:
            h = h * max(0.2, 0.9 * err ** (-1 / 5))
        h = min(h, cfg.max_step)

    t_arr = np.array(ts) * sgn
    return FlowTrajectory(t_arr, np.array(xs), np.array(ys), terminal, escape_time,
                          crossings, np.array(dxs) * sgn, np.array(dys) * sgn)


def _crossing_time(t0, h, y0, y1, f0, f1, radius):
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        px, py = _hermite(0.0, 1.0, y0, y1, (f0[0] * h, f0[1] * h), (f1[0] * h, f1[1] * h), mid)
        if math.hypot(px, py) >= radius:
            hi = mid
        else:
            lo = mid
    return t0 + h * hi


def flow_point(X, p, t: float, cfg: IntegratorConfig = CHECK_CONFIG) -> tuple[float, float]:
    """End point of the flow at time ``t``; raises :class:`FlowEscaped` otherwise."""
    if t == 0:
        return float(p[0]), float(p[1])
    traj = integrate(X, p, t, cfg)
    if not traj.completed:
        raise FlowEscaped(f"flow from {tuple(p)} ended with {traj.terminal_label()}")
    return traj.end


def blow_up_time(X, p0, cfg: IntegratorConfig = IntegratorConfig(), *,
                 backward: bool = False) -> Optional[float]:
    """Finite escape time estimate, or ``None`` if the orbit does not blow up.

    Escape times for radii ``R, 2R, 4R`` must approach each other
    geometrically (genuine blow-up); the limit is then extrapolated with
    Aitken's delta-squared.  Slow polynomial growth that merely crosses
    ``R`` gives widening gaps and is rejected.
    """
    R = cfg.escape_radius
    ladder = (R, 2 * R, 4 * R)
    run_cfg = replace(cfg, escape_radius=4 * R)
    t_end = -cfg.max_time if backward else cfg.max_time
    traj = integrate(X, p0, t_end, run_cfg, radii=ladder[:2])
    if traj.terminal == REACHED_TIME:
        return None
    if traj.terminal == STEP_UNDERFLOW:
        # cannot tell escape from stiffness without crossings
        if len(traj.crossings) < 2:
            return None
        times = [abs(traj.crossings[r]) for r in ladder[:2]] + [abs(traj.t[-1])]
    else:
        times = [abs(traj.crossings[r]) for r in ladder[:2]] + [abs(traj.escape_time)]
    t1, t2, t4 = times
    d1, d2 = t2 - t1, t4 - t2
    if not (d1 > 0 and 0 <= d2 < 0.75 * d1):
        return None
    est = t4 + d2 * d2 / (d1 - d2) if d1 != d2 else t4
    return -est if backward else est


def _fields(f, g):
    return hamiltonian_field(f), hamiltonian_field(g)


def commutation_defect(f: Polynomial, g: Polynomial, p, t: float, s: float,
                       cfg: IntegratorConfig = CHECK_CONFIG) -> Optional[float]:
    """``|phi_t(psi_s(p)) - psi_s(phi_t(p))|`` with ``phi`` of ``H_f`` and ``psi`` of ``H_g``.

    Returns ``None`` (incomparable) when any leg escapes or underflows.
    """
    if t == 0 or s == 0:
        return 0.0
    Hf, Hg = _fields(f, g)
    try:
        a = flow_point(Hf, flow_point(Hg, p, s, cfg), t, cfg)
        b = flow_point(Hg, flow_point(Hf, p, t, cfg), s, cfg)
    except FlowEscaped:
        return None
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _require_constant(f, g):
    c = constant_jacobian(f, g)
    if c is None or c == 0:
        raise NonConstantJacobian("transport laws need a constant nonzero Jacobian")
    return float(c)


def transport_residual_f(f: Polynomial, g: Polynomial, p, s: float,
                         cfg: IntegratorConfig = CHECK_CONFIG) -> float:
    """``|f(psi_s(p)) - (f(p) - c s)|``: ``f`` drifts linearly along ``H_g``."""
    c = _require_constant(f, g)
    if s == 0:
        return 0.0
    q = flow_point(hamiltonian_field(g), p, s, cfg)
    return abs(evaluate_float(f, q) - (evaluate_float(f, p) - c * s))


def transport_residual_g(f: Polynomial, g: Polynomial, p, t: float,
                         cfg: IntegratorConfig = CHECK_CONFIG) -> float:
    """``|g(phi_t(p)) - (g(p) + c t)|``: ``g`` drifts linearly along ``H_f``."""
    c = _require_constant(f, g)
    if t == 0:
        return 0.0
    q = flow_point(hamiltonian_field(f), p, t, cfg)
    return abs(evaluate_float(g, q) - (evaluate_float(g, p) + c * t))


def first_integral_drift(f: Polynomial, traj: FlowTrajectory) -> float:
    vals = evaluate_float(f, (traj.x, traj.y))
    vals = np.atleast_1d(vals)
    return float(np.max(np.abs(vals - vals[0])))


def tan_flow_closed_form(c1: float, c2: float, t):
    """Exact flow of ``(1 + x^2, -2 x y)`` through ``(c1, c2)``.

    Defined for ``t`` in ``(-pi/2 - arctan c1, pi/2 - arctan c1)``.
    """
    a = np.arctan(c1)
    return np.tan(t + a), (1 + c1 * c1) * c2 * np.cos(t + a) ** 2


def tan_flow_interval(c1: float) -> tuple[float, float]:
    a = math.atan(c1)
    return (-math.pi / 2 - a, math.pi / 2 - a)
