"""Hamiltonian vector fields, Jacobian determinants and Lie brackets."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .poly import Polynomial, compile_many, evaluate_float, partial_x, partial_y


@dataclass(frozen=True)
class Window:
    x_min: float = -10.0
    x_max: float = 10.0
    y_min: float = -10.0
    y_max: float = 10.0

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate window {self}")

    def scaled(self, k: float) -> "Window":
        cx, cy = self.center
        hx, hy = (self.x_max - self.x_min) / 2, (self.y_max - self.y_min) / 2
        return Window(cx - k * hx, cx + k * hx, cy - k * hy, cy + k * hy)

    @property
    def center(self):
        return ((self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2)

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.x_max - self.x_min, self.y_max - self.y_min))

    def contains(self, p, pad: float = 0.0) -> bool:
        return (self.x_min - pad <= p[0] <= self.x_max + pad
                and self.y_min - pad <= p[1] <= self.y_max + pad)

    def as_tuple(self):
        return (self.x_min, self.x_max, self.y_min, self.y_max)


@dataclass(frozen=True)
class PlanarPolyField:
    P: Polynomial
    Q: Polynomial

    def is_zero(self) -> bool:
        return self.P.is_zero() and self.Q.is_zero()

    def __add__(self, other: "PlanarPolyField") -> "PlanarPolyField":
        return PlanarPolyField(self.P + other.P, self.Q + other.Q)

    def __sub__(self, other: "PlanarPolyField") -> "PlanarPolyField":
        return PlanarPolyField(self.P - other.P, self.Q - other.Q)

    def scale(self, c) -> "PlanarPolyField":
        return PlanarPolyField(self.P.scale(c), self.Q.scale(c))

    def jacobian(self):
        return ((partial_x(self.P), partial_y(self.P)),
                (partial_x(self.Q), partial_y(self.Q)))

    def evaluator(self):
        """Scalar float callable ``(x, y) -> (P, Q)``."""
        return compile_many([self.P, self.Q])

    def __call__(self, x, y):
        return evaluate_float(self.P, (x, y)), evaluate_float(self.Q, (x, y))


def hamiltonian_field(f: Polynomial) -> PlanarPolyField:
    return PlanarPolyField(-partial_y(f), partial_x(f))


def jacobian_det(f: Polynomial, g: Polynomial) -> Polynomial:
    return partial_x(f) * partial_y(g) - partial_y(f) * partial_x(g)


def field_det(X: PlanarPolyField, Y: PlanarPolyField) -> Polynomial:
    """Pointwise 2x2 determinant ``det[X | Y]``."""
    return X.P * Y.Q - X.Q * Y.P


def lie_bracket(X: PlanarPolyField, Y: PlanarPolyField) -> PlanarPolyField:
    """``[X, Y] = (JY) X - (JX) Y``."""
    (xpx, xpy), (xqx, xqy) = X.jacobian()
    (ypx, ypy), (yqx, yqy) = Y.jacobian()
    P = ypx * X.P + ypy * X.Q - (xpx * Y.P + xpy * Y.Q)
    Q = yqx * X.P + yqy * X.Q - (xqx * Y.P + xqy * Y.Q)
    return PlanarPolyField(P, Q)


@dataclass(frozen=True)
class Claim1Result:
    holds: bool
    bracket: PlanarPolyField
    predicted: PlanarPolyField
    difference: Optional[PlanarPolyField]

    def __bool__(self):
        return self.holds


def verify_claim1(f: Polynomial, g: Polynomial) -> Claim1Result:
    """Check ``[H_f, H_g] == (-D_y, D_x)`` with ``D = jacobian_det(f, g)`` exactly."""
    bracket = lie_bracket(hamiltonian_field(f), hamiltonian_field(g))
    D = jacobian_det(f, g)
    predicted = PlanarPolyField(-partial_y(D), partial_x(D))
    diff = bracket - predicted
    ok = diff.is_zero()
    return Claim1Result(ok, bracket, predicted, None if ok else diff)


def constant_jacobian(f: Polynomial, g: Polynomial) -> Optional[Fraction]:
    D = jacobian_det(f, g)
    if D.is_constant():
        return D.constant_term()
    return None


def _grid(window: Window, n: int):
    xs = np.linspace(window.x_min, window.x_max, n)
    ys = np.linspace(window.y_min, window.y_max, n)
    return xs, ys


def _newton_zero(F, J, p, tol=1e-12, max_iter=50):
    p = np.array(p, dtype=float)
    for _ in range(max_iter):
        r = np.asarray(F(*p), dtype=float)
        if not np.all(np.isfinite(r)):
            return None
        if np.max(np.abs(r)) <= tol:
            # two polishing steps remove the last rounding residue
            for _ in range(2):
                A = np.asarray(J(*p), dtype=float).reshape(2, 2)
                try:
                    q = p - np.linalg.solve(A, r)
                except np.linalg.LinAlgError:
                    break
                rq = np.asarray(F(*q), dtype=float)
                if not np.max(np.abs(rq)) <= np.max(np.abs(r)):
                    break
                p, r = q, rq
            return p
        A = np.asarray(J(*p), dtype=float).reshape(2, 2)
        try:
            step = np.linalg.solve(A, r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(A, r, rcond=None)[0]
        p = p - step
        if not np.all(np.isfinite(p)):
            return None
    r = np.asarray(F(*p), dtype=float)
    return p if np.max(np.abs(r)) <= tol else None


def finite_singularity_scan(X: PlanarPolyField, window: Window = Window(),
                            grid_n: int = 64, *, tol: float = 1e-12,
                            merge: float = 1e-8) -> list[tuple[float, float]]:
    """Common real zeros of ``(P, Q)`` seeded from a grid, refined by Newton.

    Seeds are grid cells where both components change sign or are both
    small relative to their magnitude over the window.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    if X.is_zero():
        raise ValueError("the zero field vanishes everywhere")
    xs, ys = _grid(window, grid_n)
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    Pv = evaluate_float(X.P, (XX, YY))
    Qv = evaluate_float(X.Q, (XX, YY))

    def cell_flags(V):
        s = np.sign(V)
        c = [s[:-1, :-1], s[1:, :-1], s[:-1, 1:], s[1:, 1:]]
        lo = np.minimum.reduce(c)
        hi = np.maximum.reduce(c)
        return (lo <= 0) & (hi >= 0)

    scaleP = max(float(np.max(np.abs(Pv))), 1e-300)
    scaleQ = max(float(np.max(np.abs(Qv))), 1e-300)
    small = (np.abs(Pv) <= 1e-3 * scaleP) & (np.abs(Qv) <= 1e-3 * scaleQ)
    seeds = cell_flags(Pv) & cell_flags(Qv)
    seeds |= small[:-1, :-1]
    (pxx, pxy), (qxx, qxy) = X.jacobian()
    F = compile_many([X.P, X.Q])
    J = compile_many([pxx, pxy, qxx, qxy])
    hx = xs[1] - xs[0]
    hy = ys[1] - ys[0]
    found: list[np.ndarray] = []
    for i, j in zip(*np.nonzero(seeds)):
        p0 = (xs[i] + hx / 2, ys[j] + hy / 2)
        p = _newton_zero(F, J, p0, tol=tol)
        if p is None or not window.contains(p, pad=max(hx, hy)):
            continue
        if any(np.hypot(*(p - q)) <= merge for q in found):
            continue
        found.append(p)
    pts = sorted((float(p[0]) + 0.0, float(p[1]) + 0.0) for p in found)
    return pts
