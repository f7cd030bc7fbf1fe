"""The nine acceptance criteria, each at its stated tolerance and time limit."""
import pytest

from polymaplab.acceptance import CRITERIA, run_criterion

RESULTS = []


@pytest.mark.parametrize("number", [n for n, _, _ in CRITERIA],
                         ids=[f"{n}-{name.replace(' ', '_')}" for n, name, _ in CRITERIA])
def test_criterion(number):
    res = run_criterion(number)
    RESULTS.append(res.line())
    print(res.line())
    assert res.ok, res.line()
