"""Acceptance suite: one test per criterion, one printed pass/fail line each.

The lines are printed live (visible with ``-s``) and repeated in the terminal
summary. Criterion 7 is a known failure: its linear-point clause cannot hold
because the curvature dips instead of peaking there, so the fitted decay length
is undefined. It is marked as a strict expected failure so that an unexpected
pass is reported too.
"""
import pytest

from gaplesswalk import acceptance

KNOWN_FAILURES = {
    7: "linear-point decay length: the curvature dips at the linear point, so the fit is rejected",
}

RESULTS: list[str] = []


def _param(c):
    marks = []
    if c.number in KNOWN_FAILURES:
        marks.append(pytest.mark.xfail(strict=True, reason=KNOWN_FAILURES[c.number]))
    return pytest.param(c, id=f"{c.number:02d}-{c.name}", marks=marks)


@pytest.mark.parametrize("criterion", [_param(c) for c in acceptance.CRITERIA])
def test_criterion(criterion):
    (r,) = acceptance.run([criterion.name])
    line = acceptance.format_result(r)
    RESULTS.append(line)
    print(line)
    assert r.passed, r.detail
