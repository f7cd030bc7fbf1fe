"""Named example maps used throughout the checks and the CLI."""
from __future__ import annotations

from .parser import parse

# pairs with constant nonzero Jacobian
E1 = ("y - (2*x - y)^4", "2*x - y")  # D = -2
E2 = ("y - x^3", "y - x - x^3")  # D = 1
E3 = ("y - x^2", "y - x - x^2")  # D = 1

# (f, g) with D = 1 + x^2: H_f has the explicit incomplete flow
TAN_FLOW = ("-(1 + x^2)*y", "x")

# first component of Pinchuk's map; 1 - f = x(x*y - 1) at level 1
PINCHUK_F = "1 + x - x^2*y"

# endpoint-configuration illustrations
CASE_A1 = ("x", "y")
CASE_A2 = ("x", "y - x^3")
CASE_A3 = ("x", "y - x^2")
CASE_A5 = ("y - x^2", "y + x - x^2")

CONSTANT_JACOBIAN_MAPS = {"E1": E1, "E2": E2, "E3": E3}


def pair(texts):
    f, g = texts
    return parse(f), parse(g)
