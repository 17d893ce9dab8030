import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaplesswalk.rg_flow import (
    SingularFlowError,
    VanishingDenominatorError,
    classify_flow_points,
    integrate_flow,
    printed_rhs,
    rg_rhs_closed,
    rg_rhs_numeric,
)

PI = np.pi


def test_red_fixed_point_numeric():
    assert abs(rg_rhs_numeric("red2", PI / 2)) < 1e-6


def test_red_divergence_grows():
    a = abs(rg_rhs_numeric("red2", 2 * PI / 3 - 1e-3))
    b = abs(rg_rhs_numeric("red2", 2 * PI / 3 - 1e-4))
    assert a > 1e2 and b > a


def test_orange_fixed_point_has_vanishing_denominator():
    with pytest.raises(VanishingDenominatorError):
        rg_rhs_numeric("op1", PI / 2)


@pytest.mark.parametrize(
    "family,special",
    [
        ("red", (0, PI / 2, -PI / 2, PI, -PI, 2 * PI / 3, -2 * PI / 3)),
        ("blue", (0, PI / 2, -PI / 2, PI, -PI, PI / 3, -PI / 3)),
        # quadratic points close the gap at k0 on these lines too
        ("orange_purple", (0, PI, -PI, PI / 2, -PI / 2, PI / 3, -PI / 3, 2 * PI / 3, -2 * PI / 3)),
    ],
)
def test_numeric_matches_closed(family, special):
    for t in np.linspace(-PI, PI, 181):
        if min(abs(t - s) for s in special) < 1e-2:
            continue
        closed = rg_rhs_closed(family, t)
        num = rg_rhs_numeric(family, t)
        assert abs(num - closed) / (1 + abs(closed)) < 1e-4, t


def test_closed_form_examples():
    assert rg_rhs_closed("red", 0.0) == 0.0
    assert rg_rhs_closed("orange_purple", PI / 2) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(SingularFlowError):
        rg_rhs_closed("orange_purple", 0.0)
    assert abs(rg_rhs_closed("blue", PI / 3 + 1e-9)) > 1e6


def test_printed_rates_are_twice_the_derivative_rates():
    for t in (0.3, 1.1, -2.5):
        assert printed_rhs("red", t) == pytest.approx(2 * rg_rhs_closed("red", t))
        assert printed_rhs("orange_purple", t) == pytest.approx(2 * rg_rhs_closed("orange_purple", t))


@given(st.sampled_from(["red", "blue"]), st.floats(0.01, 3.1))
def test_odd_symmetry(family, t):
    try:
        a = rg_rhs_closed(family, t)
        b = rg_rhs_closed(family, -t)
    except SingularFlowError:
        return
    assert a == pytest.approx(-b, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize(
    "family,fixed,unstable",
    [
        ("red", (-PI, -PI / 2, 0, PI / 2, PI), (-2 * PI / 3, 2 * PI / 3)),
        ("blue", (-PI, -PI / 2, 0, PI / 2, PI), (-PI / 3, PI / 3)),
        ("orange_purple", (-PI / 2, PI / 2), (-PI, 0, PI)),
    ],
)
def test_classification(family, fixed, unstable):
    pts = classify_flow_points(family)
    assert np.allclose(pts.fixed, fixed, atol=1e-6)
    assert np.allclose(pts.unstable, unstable, atol=1e-6)
    for x in pts.fixed:
        assert abs(rg_rhs_closed(family, x)) < 1e-8


def test_orange_flow_regular_at_quadratic_angles():
    for t in (PI / 3, -PI / 3, 2 * PI / 3, -2 * PI / 3):
        assert abs(rg_rhs_closed("orange_purple", t)) < 1


def test_integrate_to_fixed_point():
    tr = integrate_flow("red", 0.3)
    assert tr.terminal == "fixed_point"
    assert min(abs(tr.terminal_angle), abs(tr.terminal_angle - PI / 2)) < 1e-3


def test_integrate_never_crosses_poles_and_is_monotone():
    for start in (2 * PI / 3 - 1e-2, 2 * PI / 3 + 1e-2):
        tr = integrate_flow("red", start)
        side = np.sign(tr.thetas - 2 * PI / 3)
        assert np.all(side == side[0])
        d = np.diff(tr.thetas)
        assert np.all(d >= 0) or np.all(d <= 0)


def test_integrate_diverges_next_to_pole():
    assert integrate_flow("red", 2 * PI / 3 - 1e-7).terminal == "diverged"


def test_step_validation():
    with pytest.raises(ValueError):
        integrate_flow("red", 0.3, dl=0.5)
