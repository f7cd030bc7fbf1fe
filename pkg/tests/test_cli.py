import json
import re

import pytest

from polymaplab import cli
from polymaplab.acceptance import Tolerances, run_criterion


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("f, g, code", [("y-(2*x-y)^4", "2*x-y", 0), ("x", "x", 2),
                                        ("1+x-x^2*y", "y", 4), ("x+x^3", "y", 3)])
def test_analyze_exit_codes(capsys, tmp_path, f, g, code):
    path = tmp_path / "r.json"
    got, out, _ = run(capsys, "analyze", "--f", f, "--g", g, "--json", str(path),
                      "--grid-n", "256")
    assert got == code
    report = json.loads(path.read_text())
    assert out.strip() == f"verdict: {report['verdict']}"
    if code == 0:
        assert report["jacobian"] == {"constant": "-2"}


def test_analyze_stdout_is_deterministic(capsys):
    args = ("analyze", "--f", "x", "--g", "x", "--grid-n", "128")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b
    assert json.loads(a)["verdict"] == "JacobianVanishes"


def test_parse_error_shows_caret(capsys):
    code, _, err = run(capsys, "analyze", "--f", "x^-1", "--g", "y")
    assert code == 1
    assert "offset 2" in err
    assert err.rstrip().endswith("x^-1\n  ^")


@pytest.mark.parametrize("argv", [
    ["analyze", "--f", "x"],
    ["levelset", "--f", "x"],
    ["flow", "--f", "x", "--p0", "1", "--tmax", "1"],
    ["analyze", "--f", "x", "--g", "y", "--window", "1,0,0,1"],
    ["verify", "--suite", ""],
    ["bogus"],
])
def test_usage_errors(capsys, argv):
    try:
        code = cli.main(argv)
    except SystemExit as e:
        code = e.code
    assert code == 1


def test_levelset_csv_and_svg(capsys, tmp_path):
    csv = tmp_path / "p.csv"
    assert cli.main(["levelset", "--f", "1+x-x^2*y", "--level", "1", "--out", str(csv)]) == 0
    rows = csv.read_text().splitlines()
    assert rows[0] == "level,branch,x,y"
    assert {r.split(",")[1] for r in rows[1:]} == {"0", "1", "2"}
    svg = tmp_path / "p.svg"
    cli.main(["levelset", "--f", "1+x-x^2*y", "--level", "1", "--format", "svg",
              "--out", str(svg)])
    text = svg.read_text()
    assert text.count('class="branch"') == 3
    assert "infinity-ray" in text
    svg_e1 = tmp_path / "e1.svg"
    cli.main(["levelset", "--f", "y-(2*x-y)^4", "--level", "0", "--format", "svg",
              "--out", str(svg_e1)])
    assert svg_e1.read_text().count('class="branch"') == 1
    # deterministic bytes
    again = tmp_path / "p2.svg"
    cli.main(["levelset", "--f", "1+x-x^2*y", "--level", "1", "--format", "svg",
              "--out", str(again)])
    assert again.read_bytes() == svg.read_bytes()


def test_levelset_empty(tmp_path):
    out = tmp_path / "e.csv"
    assert cli.main(["levelset", "--f", "x^2+y^2", "--level", "-1", "--out", str(out)]) == 0
    assert out.read_text() == "level,branch,x,y\n"


def test_levelset_stalled_branch_dashed(tmp_path):
    out = tmp_path / "s.svg"
    cli.main(["levelset", "--f", "x^2-y^2", "--level", "0", "--format", "svg", "--out", str(out)])
    text = out.read_text()
    assert "stalled" in text and "stroke-dasharray:6,4" in text


def test_flow_csv(capsys):
    code, out, _ = run(capsys, "flow", "--f", "-(1+x^2)*y", "--p0", "0,1", "--tmax", "3")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "t,x,y"
    assert lines[-1].startswith("# terminal=Escaped(")
    code, out, _ = run(capsys, "flow", "--f", "0", "--p0", "2,3", "--tmax", "1")
    assert out.splitlines()[-2].endswith(",2.0,3.0")
    code, out, _ = run(capsys, "flow", "--f", "y-x-x^2", "--p0", "0,0", "--tmax", "20",
                       "--backward")
    assert out.splitlines()[-1] == "# terminal=ReachedTime"
    assert float(out.splitlines()[-2].split(",")[0]) == -20.0


def _marks(text, cls):
    return re.findall(rf'class="{cls}" c?x="([-\d.]+)" c?y="([-\d.]+)"', text)


def test_portrait(tmp_path):
    out = tmp_path / "e2.svg"
    assert cli.main(["portrait", "--f", "y-x^3", "--g", "y-x-x^3", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("<?xml")
    assert 'class="equator"' in text and 'class="level-f"' in text
    f_marks = _marks(text, "inf-f")
    assert len(f_marks) == 2  # one antipodal pair, vertical
    assert {x for x, _ in f_marks} == {"300"}
    ident = tmp_path / "id.svg"
    cli.main(["portrait", "--f", "x", "--g", "y", "--out", str(ident)])
    text = ident.read_text()
    assert {x for x, _ in _marks(text, "inf-f")} == {"300"}
    assert {y for _, y in re.findall(r'class="inf-g" x="([-\d.]+)" y="([-\d.]+)"', text)} == {"295"}
    e1 = tmp_path / "e1.svg"
    cli.main(["portrait", "--f", "y-(2*x-y)^4", "--g", "2*x-y", "--out", str(e1)])
    assert "f: slope 2 (m=4)" in e1.read_text()


def test_verify_reports_each_criterion(capsys, monkeypatch):
    # a quick stand-in suite keeps this test cheap; the real one runs in test_acceptance
    monkeypatch.setattr(cli, "run_suite", lambda: [run_criterion(1), run_criterion(8)])
    code, out, _ = run(capsys, "verify", "--suite", "paper")
    assert code == 0
    assert out.count("[PASS]") == 2


def test_corrupted_tolerance_fails():
    bad = Tolerances(flow_oracle=0.0, blow_up=0.0)
    res = run_criterion(4, bad)
    assert not res.ok
    assert res.line().startswith("[FAIL] 4.")
