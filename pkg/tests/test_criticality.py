import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gaplesswalk.criticality import (
    FitRejectedError,
    GapClosingError,
    NotATransitionError,
    analytic_oz_coefficients,
    closed_form_curvature,
    critical_bloch,
    critical_exponents,
    curvature_function,
    measure_peak,
    oz_fit,
    printed_blue_curvature,
    swap_detector,
)
from gaplesswalk.phase_topology import LineFamily, find_multicritical, get_line
from gaplesswalk.walk_core import bloch_components, gap_array

PI = np.pi
LINES = ["red1", "red2", "red3", "blue1", "blue2", "op1", "op2", "op3"]


def test_critical_bloch_substitution():
    cb = critical_bloch("red2", PI / 2, 0.4)
    _, d2, d3 = bloch_components(PI / 2, -PI / 4, 0.4)
    assert cb.d2c == pytest.approx(float(d2), abs=1e-14)
    assert cb.d3c == pytest.approx(float(d3), abs=1e-14)


@pytest.mark.parametrize("name", LINES)
def test_critical_bloch_derivatives(name):
    h = 1e-6
    for t, k in ((0.3, 0.8), (-1.2, 2.1), (2.5, -0.4)):
        cb = critical_bloch(name, t, k)
        p, m = critical_bloch(name, t, k + h), critical_bloch(name, t, k - h)
        assert cb.dd2c == pytest.approx((p.d2c - m.d2c) / (2 * h), abs=1e-6)
        assert cb.dd3c == pytest.approx((p.d3c - m.d3c) / (2 * h), abs=1e-6)


def test_orange_denominator_structure():
    # the cross product of (d2, d3) with its derivative over |d|^2 reduces to 4 sin(t) / den
    t, k = 0.2, np.linspace(0.1, 3.0, 9)
    cb = critical_bloch("op1", t, k)
    den = np.cos(2 * k) + 2 * np.cos(k) ** 2 * np.cos(2 * t) - 3
    f = (cb.d2c * cb.dd3c - cb.d3c * cb.dd2c) / (cb.d2c**2 + cb.d3c**2)
    assert np.allclose(f * den / (4 * np.sin(t)), 1.0, rtol=1e-10)


def test_curvature_raises_at_closing():
    with pytest.raises(GapClosingError):
        curvature_function("red2", 1.0, 0.0)


def test_red_curvature_matches_closed_form():
    k = np.linspace(0.05, 3.0, 50)
    assert np.allclose(curvature_function("red2", PI / 2, k), closed_form_curvature("red", PI / 2, k), atol=1e-9)


def test_closed_form_zeros():
    k = np.linspace(0.1, 3.0, 7)
    assert np.allclose(closed_form_curvature("orange_purple", 0.0, k), 0.0)
    assert np.allclose(closed_form_curvature("red", 0.0, k), 0.0)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(LINES), st.floats(-PI, PI), st.floats(-PI, PI))
def test_closed_form_matches_direct(name, t, k):
    line = get_line(name)
    assume(line.contains(t))
    # the direct form loses digits as 1/gap^2 next to closings
    assume(gap_array(t, float(line.theta2(t)), k) > 1e-3)
    direct = curvature_function(line, t, k)
    closed = float(closed_form_curvature(line.family, t, k))
    assert abs(direct - closed) <= 1e-9 * max(1.0, abs(direct))


def test_printed_blue_form_differs():
    k = np.linspace(0.2, 2.9, 10)
    direct = curvature_function("blue1", 0.7, k)
    assert np.max(np.abs(printed_blue_curvature(0.7, k) - direct)) > 1e-3
    assert np.allclose(closed_form_curvature("blue", 0.7, k), direct, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["red2", "blue1"]), st.floats(-3.0, 3.0), st.floats(1e-3, 0.1))
def test_peak_symmetry(name, t, dk):
    line = get_line(name)
    k0 = 0.0
    a = curvature_function(line, t, k0 + dk)
    b = curvature_function(line, t, k0 - dk)
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


def test_oz_fit_on_exact_model():
    k = np.linspace(-0.1, 0.1, 401)
    F = 50.0 / (1 + 30.0**2 * k**2)
    fit = oz_fit(k, F, 0.0, 0.1)
    assert fit.F_peak == pytest.approx(50.0, rel=1e-6)
    assert fit.xi_c == pytest.approx(30.0, rel=1e-6)


def test_oz_fit_rejects_noise():
    rng = np.random.default_rng(0)
    k = np.linspace(-0.1, 0.1, 401)
    with pytest.raises(FitRejectedError):
        oz_fit(k, 1 + rng.normal(0, 0.5, k.size), 0.0, 0.1)


def test_red_peak_near_quadratic_point():
    fit = measure_peak("red2", 2 * PI / 3 - 0.05, 0.0)
    z = analytic_oz_coefficients("red2", 2 * PI / 3 - 0.05, 0.0)
    assert np.isfinite(fit.F_peak) and np.isfinite(fit.xi_c) and fit.xi_c > 0
    assert fit.F_peak == pytest.approx(z.f_peak, rel=0.02)
    assert fit.xi_c == pytest.approx(np.sqrt(z.xi_squared), rel=0.02)
    assert abs(z.zeta1 / z.zeta2) == pytest.approx(abs(fit.F_peak), rel=0.02)
    assert fit.xi_c * 0.05 == pytest.approx(abs(fit.F_peak) * 0.05, rel=0.2)


def test_sign_flip_across_quadratic_point():
    lo = measure_peak("red2", 2 * PI / 3 - 0.05, 0.0).F_peak
    hi = measure_peak("red2", 2 * PI / 3 + 0.05, 0.0).F_peak
    assert np.sign(lo) == -np.sign(hi)


def test_zeta_taylor_expansion():
    t, k0, dk = 2.0, 0.0, 1e-3
    z = analytic_oz_coefficients("red2", t, k0)
    cb = critical_bloch("red2", t, k0 + dk)
    assert abs(cb.d2c - z.zeta1 * dk**2) < 10 * dk**3
    assert abs(cb.d3c - z.zeta2 * dk - z.zeta3 * dk**3) < 10 * dk**4
    zp = analytic_oz_coefficients("red2", t, PI)
    cb = critical_bloch("red2", t, PI + dk)
    assert abs(cb.d2c - zp.zeta1 * dk**2) < 10 * dk**3


def test_zeta_rejects_nhs_input():
    with pytest.raises(ValueError):
        analytic_oz_coefficients("red2", 1.0, 1.0)
    with pytest.raises(ValueError):
        analytic_oz_coefficients("op1", 1.0, 0.0)


@pytest.mark.parametrize(
    "name,mc",
    [("red2", 2 * PI / 3), ("red2", -2 * PI / 3), ("blue1", PI / 3), ("blue1", -PI / 3), ("op1", 0.0), ("red2", 0.0)],
)
def test_exponents(name, mc):
    fit = critical_exponents(name, mc)
    assert 0.95 <= fit.gamma <= 1.05
    assert 0.95 <= fit.nu <= 1.05
    assert abs(fit.gamma - fit.nu) < 0.05


def test_exponents_converged_in_resolution():
    a = critical_exponents("red2", 2 * PI / 3, n_samples=200)
    b = critical_exponents("red2", 2 * PI / 3, n_samples=400)
    assert abs(a.gamma - b.gamma) < 0.01


def test_quadratic_points_on_orange_lines_are_not_transitions():
    with pytest.raises(NotATransitionError):
        critical_exponents("op1", PI / 3)


def test_orange_peak_stays_bounded_near_quadratic_points():
    # op1 runs gapless -> gapped at theta1 = +-pi/3; nothing diverges there
    for eps in (1e-2, 1e-3):
        k = np.linspace(-PI, PI, 20001)
        f = curvature_function("op1", PI / 3 - eps, k[1::2])
        assert np.max(np.abs(f)) < 50


@pytest.mark.parametrize(
    "mc,line,family",
    [((0.0, 0.0), "red2", "NHS"), ((0.0, 0.0), "op1", "HS"), ((PI, 0.0), "blue1", "NHS"), ((-PI, 0.0), "blue2", "NHS")],
)
def test_swapping(mc, line, family):
    rep = swap_detector(find_multicritical(*mc), line, 1e-3)
    assert rep.peaked_family == family
    if family == "NHS":
        assert rep.hs_magnitude < 1e2
        assert all(abs(abs(k) - PI / 3) < 1e-2 or abs(abs(k) - 2 * PI / 3) < 1e-2 for k in rep.peaked_momenta)
    else:
        assert rep.nhs_magnitude < 1e2
        assert all(min(abs(k), abs(abs(k) - PI)) < 1e-6 for k in rep.peaked_momenta)


def test_swap_rejects_quadratic():
    with pytest.raises(ValueError):
        swap_detector(find_multicritical(PI / 3, PI / 3), "blue1", 1e-3)


def test_family_enum_values():
    assert LineFamily("red") is LineFamily.RED_HS
