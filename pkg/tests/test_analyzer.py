import json
import math

import numpy as np
import pytest

from polymaplab.analyzer import (
    A1,
    A2,
    A3,
    A4,
    A5,
    EXIT_CODES,
    INJECTIVE,
    JACOBIAN_VANISHES,
    MULTI_BRANCH,
    NONCONSTANT_NONVANISHING,
    AnalyzeOptions,
    analyze,
    classify_endpoints,
    collision_search,
    direction_for,
)
from polymaplab.catalog import (
    CASE_A1,
    CASE_A2,
    CASE_A3,
    CASE_A5,
    CONSTANT_JACOBIAN_MAPS,
    E1,
    PINCHUK_F,
    TAN_FLOW,
    pair,
)
from polymaplab.compactify import infinity_singularities
from polymaplab.hamiltonian import Window
from polymaplab.parser import parse
from polymaplab.poly import evaluate_float

FAST = AnalyzeOptions(grid_n=256, levels=9)


@pytest.mark.parametrize("maps, case", [(CASE_A1, A1), (CASE_A2, A2), (CASE_A3, A3),
                                        (CASE_A5, A5), (E1, A4)])
def test_endpoint_cases(maps, case):
    assert classify_endpoints(*pair(maps)).case == case


def test_endpoint_slopes_match_directions():
    for maps in (CASE_A2, CASE_A3, CASE_A5) + tuple(CONSTANT_JACOBIAN_MAPS.values()):
        cfg = classify_endpoints(*pair(maps))
        for ends, dirs in ((cfg.f_ends, cfg.f_directions), (cfg.g_ends, cfg.g_directions)):
            for e in ends:
                assert direction_for(e, dirs) is not None


def test_endpoint_json_keys():
    js = classify_endpoints(*pair(CASE_A1)).to_json()
    assert set(js) == {"case", "f_directions", "g_directions", "f_ends", "g_ends", "note"}


@pytest.mark.parametrize("name", sorted(CONSTANT_JACOBIAN_MAPS))
def test_no_collisions_for_constant_jacobian(name):
    f, g = pair(CONSTANT_JACOBIAN_MAPS[name])
    for w in (Window(), Window(-3, 3, -3, 3), Window(-50, 50, -50, 50)):
        assert collision_search(f, g, w) == []


def test_collisions_found():
    f, g = parse("x^2 - y^2"), parse("2*x*y")
    pairs = collision_search(f, g, Window(-2, 2, -2, 2))
    assert pairs
    for p, q, r in pairs:
        assert r <= 1e-10
        assert np.hypot(p[0] + q[0], p[1] + q[1]) < 1e-6  # antipodes
    even = collision_search(parse("x^2"), parse("y"), Window(-2, 2, -2, 2))
    assert even and all(p[0] == pytest.approx(-q[0]) and p[1] == pytest.approx(q[1])
                        for p, q, _ in even)


def test_analyze_e1():
    rep = analyze(*pair(E1), FAST)
    assert rep.verdict == INJECTIVE and rep.exit_code == 0
    assert rep.jacobian == {"constant": "-2"}
    assert rep.collisions == []
    assert rep.evidence["bracket_identity"]
    assert rep.evidence["finite_singularities_f"] == []
    fc = rep.flow_checks
    assert fc["status"] == "ok"
    assert fc["commutation"]["pass"] and fc["commutation"]["incomparable"] == 0
    assert fc["transport_f"]["pass"] and fc["transport_g"]["pass"]
    assert fc["completeness"]["pass"]
    assert rep.branch_counts["f"]["max_components"] == 1
    assert rep.endpoint_case["case"] == A4


def test_analyze_pinchuk():
    rep = analyze(parse(PINCHUK_F), parse("y"), FAST)
    assert rep.verdict == MULTI_BRANCH and rep.exit_code == 4
    rows = rep.branch_counts["f"]["levels"]
    assert rep.branch_counts["f"]["max_components"] >= 2
    # the level through the window centre is f(0, 0) = 1
    assert rows[0]["level"] == 1.0 and rows[0]["components"] == 3


def test_analyze_degenerate_and_nonvanishing():
    rep = analyze(parse("x"), parse("x"), FAST)
    assert rep.verdict == JACOBIAN_VANISHES and rep.exit_code == 2
    assert rep.jacobian == {"constant": "0"}
    rep = analyze(parse("x + x^3"), parse("y"), FAST)
    assert rep.verdict == NONCONSTANT_NONVANISHING and rep.exit_code == 3
    rep = analyze(*pair(TAN_FLOW), FAST)
    assert rep.verdict == NONCONSTANT_NONVANISHING
    assert rep.jacobian == {"nonconstant": "x^2 + 1"}


def test_analyze_rejects_constants():
    with pytest.raises(ValueError):
        analyze(parse("1"), parse("x"))


def test_exit_codes_total():
    assert sorted(EXIT_CODES.values()) == [0, 2, 3, 4]


def test_report_deterministic_and_strict_json():
    a = json.dumps(analyze(*pair(E1), FAST).to_json(), allow_nan=False)
    b = json.dumps(analyze(*pair(E1), FAST).to_json(), allow_nan=False)
    assert a == b
    keys = set(json.loads(a))
    assert keys == {"f_text", "g_text", "jacobian", "infinity_f", "infinity_g",
                    "endpoint_case", "branch_counts", "flow_checks", "collisions",
                    "verdict", "evidence"}
