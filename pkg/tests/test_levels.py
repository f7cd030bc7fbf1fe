import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polymaplab.catalog import E1, E2, E3, PINCHUK_F
from polymaplab.hamiltonian import Window
from polymaplab.levels import (
    LadderDiverged,
    asymptotic_slope,
    branches_to_csv,
    connected_branch_count,
    count_components,
    on_curve_tolerance,
    trace_level,
    trace_through,
)
from polymaplab.parser import parse
from polymaplab.poly import evaluate_float

W = Window()


def _on_curve(f, u, branches):
    for b in branches:
        vals = evaluate_float(f, (b.points[:, 0], b.points[:, 1]))
        assert np.max(np.abs(vals - u)) <= on_curve_tolerance(u)


def test_parabola_single_branch_top_exits():
    f = parse("y - x^2")
    (b,) = trace_level(f, 0.0, W)
    assert not b.closed_in_window and not b.stalled
    assert all(e.point[1] == pytest.approx(10.0) for e in b.exits)
    _on_curve(f, 0.0, [b])


def test_pinchuk_level_one_has_three_branches():
    f = parse(PINCHUK_F)
    bs = trace_level(f, 1.0, W)
    assert len(bs) == 3
    assert count_components(f, 1.0, W, 512) == 3
    _on_curve(f, 1.0, bs)
    # one of them is the line x = 0
    assert any(np.max(np.abs(b.points[:, 0])) < 1e-9 for b in bs)


def test_e1_level_zero():
    f = parse(E1[0])
    assert len(trace_level(f, 0.0, W)) == 1
    assert count_components(f, 0.0, W, 512) == 1


@pytest.mark.parametrize("u", np.linspace(-5, 5, 7).tolist())
def test_monotone_in_y_gives_one_branch(u):
    f = parse("y - x - x^3")
    assert count_components(f, u, W, 512) == 1
    assert len(trace_level(f, u, W)) == 1


def test_empty_and_closed():
    f = parse("x^2 + y^2")
    assert count_components(f, -1.0, W, 128) == 0
    assert trace_level(f, -1.0, W) == []
    (b,) = trace_level(f, 4.0, W)
    assert b.closed_in_window
    assert count_components(f, 4.0, W, 128) == 1
    _on_curve(f, 4.0, [b])


def test_grid_guard():
    with pytest.raises(ValueError):
        count_components(parse("x"), 0.0, W, 32)


def test_crossing_level_stalls():
    # x^2 - y^2 = 0 is two lines crossing at a singular point
    f = parse("x^2 - y^2")
    bs = trace_level(f, 0.0, W)
    assert any(b.stalled for b in bs)


def test_asymptotic_examples():
    f = parse(E1[0])
    (b,) = trace_level(f, 0.0, W)
    for est in asymptotic_slope(b):
        assert not est.vertical
        assert est.slope == pytest.approx(2.0, abs=1e-2)
    (b,) = trace_level(parse("y - x^2"), 0.0, W)
    assert all(est.vertical for est in asymptotic_slope(b))
    line = next(b for b in trace_level(parse(PINCHUK_F), 1.0, W)
                if np.max(np.abs(b.points[:, 0])) < 1e-9)
    assert all(est.vertical for est in asymptotic_slope(line))


def test_asymptotic_needs_exits():
    (b,) = trace_level(parse("x^2 + y^2"), 4.0, W)
    with pytest.raises(ValueError):
        asymptotic_slope(b)


def test_trace_through_point():
    f = parse("y - x^2")
    b = trace_through(f, 1.0, (1.0, 2.0), W)
    _on_curve(f, 1.0, [b])
    assert len(b.points) > 10


def test_csv():
    bs = trace_level(parse(PINCHUK_F), 1.0, W)
    lines = branches_to_csv(bs).splitlines()
    assert lines[0] == "level,branch,x,y"
    assert {ln.split(",")[1] for ln in lines[1:]} == {"0", "1", "2"}
    assert branches_to_csv([]) == "level,branch,x,y\n"


def test_reconnection_outside_window():
    # y - x^2 = -50 enters and leaves twice within the window edges
    f = parse("y - x^2")
    res = connected_branch_count(f, -50.0, W)
    assert res["window_branches"] == 2
    assert res["connected"] == 1
    assert connected_branch_count(parse(PINCHUK_F), 1.0, W)["connected"] == 3
    assert connected_branch_count(parse("x^2 - y^2"), 2.0, W)["connected"] == 2


@settings(max_examples=20)
@given(st.sampled_from([E1[0], E1[1], E2[0], E2[1], E3[0], E3[1]]), st.floats(-5, 5))
def test_tracer_agrees_with_oracle(text, u):
    f = parse(text)
    bs = trace_level(f, u, W)
    assert len(bs) == count_components(f, u, W, 256) == 1
    _on_curve(f, u, bs)


def test_foliation_spot_check():
    # distinct levels of a constant-Jacobian component never meet
    f = parse(E2[0])
    a = trace_level(f, 0.0, W)[0].points
    b = trace_level(f, 0.5, W)[0].points
    d = np.min(np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1]))
    assert d > 1e-3
