import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaplesswalk.criticality import FitRejectedError, measure_peak
from gaplesswalk.observables import (
    GappedInputError,
    correlation_decay_length,
    count_loops,
    critical_winding,
    group_velocity,
    velocity_profile,
    wannier_correlation,
    wannier_correlation_numeric,
    winding_vector_trace,
)
from gaplesswalk.phase_topology import GaplessInputError, get_line, winding_number
from gaplesswalk.walk_core import gap_at

PI = np.pi


# --------------------------------------------------------------------------
# Wannier correlations


def test_zero_distance_value():
    s = wannier_correlation("red2", 2 * PI / 3 - 0.05, 0.0)
    assert s.lambda_values[0] == pytest.approx(s.F_peak / (2 * s.xi_c))
    assert len(s.R_values) == int(np.ceil(10 * s.xi_c)) + 1


def test_decay_slower_closer_to_quadratic_point():
    a = wannier_correlation("red2", 2 * PI / 3 - 0.1, 0.0)
    b = wannier_correlation("red2", 2 * PI / 3 - 0.3, 0.0)
    assert a.xi_c > b.xi_c
    assert correlation_decay_length(a) == pytest.approx(a.xi_c, rel=1e-9)


def test_fit_rejection_propagates_at_linear_point():
    with pytest.raises(FitRejectedError):
        wannier_correlation("red2", 0.1, 0.0)
    lo = wannier_correlation("red2", 0.1, 0.0, xi_source="leading_order")
    assert lo.xi_c == pytest.approx(abs(lo.F_peak))


def test_numeric_transform_zero_distance_is_mean_curvature():
    t = 1.0
    k = -PI + 2 * PI * (np.arange(1 << 15) + 0.5) / (1 << 15)
    from gaplesswalk.criticality import curvature_array

    mean = np.nanmean(curvature_array("red2", t, k))
    assert wannier_correlation_numeric("red2", t, 0).real == pytest.approx(mean, abs=1e-6)


def test_numeric_transform_matches_closed_form():
    t = 2 * PI / 3 - 0.005
    s = wannier_correlation("red2", t, 0.0)
    for r in np.rint(np.linspace(s.xi_c / 2, 3 * s.xi_c, 6)).astype(int):
        num = wannier_correlation_numeric("red2", t, int(r), k0=0.0)
        assert abs(num - s.lambda_values[r]) / abs(s.lambda_values[r]) < 0.1


def test_numeric_large_r_ratio():
    t = 2 * PI / 3 - 0.005
    xi = measure_peak("red2", t, 0.0).xi_c
    r = int(2 * xi)
    ratio = wannier_correlation_numeric("red2", t, r + 1, k0=0.0) / wannier_correlation_numeric("red2", t, r, k0=0.0)
    assert abs(ratio) == pytest.approx(np.exp(-1 / xi), rel=0.05)


def test_numeric_decay_shorter_far_from_transition():
    near = abs(wannier_correlation_numeric("red2", 2 * PI / 3 - 0.02, 40, k0=0.0))
    far = abs(wannier_correlation_numeric("red2", 2 * PI / 3 - 0.5, 40, k0=0.0))
    assert near > far


def test_numeric_input_validation():
    with pytest.raises(ValueError):
        wannier_correlation_numeric("red2", 1.0, -1)
    with pytest.raises(ValueError):
        wannier_correlation_numeric("red2", 1.0, 3, n_grid=1000)


# --------------------------------------------------------------------------
# group velocity


def test_linear_point_speed_three():
    k = np.array([0.1, 0.5, -0.8, 2.0])
    assert np.allclose(np.abs(group_velocity((0, 0), k)), 3.0)
    p = velocity_profile((0.0, 0.0))
    assert p.span == pytest.approx((-3.0, 3.0), abs=1e-3)
    assert len(p.discontinuities) > 0


def test_quadratic_point_velocity():
    p = velocity_profile((2 * PI / 3, 2 * PI / 3))
    assert p.span[0] == pytest.approx(-1.5, rel=0.05)
    assert p.span[1] == pytest.approx(1.5, rel=0.05)
    v = group_velocity((2 * PI / 3, 2 * PI / 3), np.array([-1e-3, 1e-3]))
    assert np.max(np.abs(v)) < 1e-2
    assert p.discontinuities == ()


def test_velocity_raises_at_closing():
    with pytest.raises(GaplessInputError):
        group_velocity((0, 0), 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-PI, PI), st.floats(-PI, PI), st.floats(-PI, PI))
def test_velocity_band_antisymmetry_and_bound(t1, t2, k):
    if gap_at((t1, t2), k) < 1e-6:
        return
    vp = group_velocity((t1, t2), k, "plus")
    assert vp == -group_velocity((t1, t2), k, "minus")
    assert abs(vp) <= 3 + 1e-6


def test_velocity_matches_quasi_energy_derivative():
    from gaplesswalk.walk_core import quasi_energy

    a, k, h = (0.7, -0.3), 1.1, 1e-6
    fd = (quasi_energy(a, k + h).e_plus - quasi_energy(a, k - h).e_plus) / (2 * h)
    assert group_velocity(a, k) == pytest.approx(fd, rel=1e-7)


@pytest.mark.parametrize("name", ["red1", "red2", "red3", "blue1", "blue2", "op1", "op2", "op3"])
def test_piecewise_constant_at_fixed_points(name):
    line = get_line(name)
    for t in (0.0, PI / 2, -PI / 2, PI, -PI):
        if line.contains(t):
            assert velocity_profile(line.angles(t)).piecewise_constant_deviation() < 1e-6


def test_generic_point_velocity_varies():
    assert velocity_profile(get_line("red2").angles(0.4)).piecewise_constant_deviation() > 0.1


def test_flat_band_velocity_vanishes():
    p = velocity_profile((PI / 2, PI / 2))
    assert np.max(np.abs(p.v_plus)) < 1e-12


# --------------------------------------------------------------------------
# gapless winding


@pytest.mark.parametrize(
    "name,t,expected",
    [
        ("red2", -2.5, 0),
        ("red2", -1.0, 2),
        ("red2", 1.0, -2),
        ("red2", 2.5, 0),
        ("blue1", -2.0, 2),
        ("blue1", 0.5, 0),
        ("blue1", 2.0, -2),
        ("op1", -0.5, 1),
        ("op1", 0.5, -1),
        ("op2", -2.5, 1),
        ("op3", 2.5, -1),
    ],
)
def test_critical_winding_values(name, t, expected):
    cw = critical_winding(name, t)
    assert cw.w_c == expected
    assert cw.quantized


def test_critical_winding_gapped_subdomain():
    with pytest.raises(GappedInputError):
        critical_winding("op1", PI / 2)


def test_critical_winding_delta_range():
    with pytest.raises(ValueError):
        critical_winding("red2", 1.0, delta=0.5)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["red2", "blue1", "op1"]), st.floats(-3.0, 3.0), st.sampled_from([1e-2, 5e-3, 2e-3]))
def test_critical_winding_stable_under_halving(name, t, delta):
    line = get_line(name)
    mcs = (-PI, -2 * PI / 3, -PI / 3, 0.0, PI / 3, 2 * PI / 3, PI)
    if min(abs(t - m) for m in mcs) < 0.05 or not line.in_gapless_domain(t):
        return
    a = critical_winding(line, t, delta).w_c_raw
    b = critical_winding(line, t, delta / 2).w_c_raw
    assert abs(a - b) < 1e-2


def test_flat_band_trace_one_loop():
    tr = winding_vector_trace((PI / 2, PI / 2))
    assert tr.closed
    assert count_loops(tr) == 1
    assert np.allclose(tr.n2, np.cos(tr.k), atol=1e-12)
    assert len(tr.samples()) == tr.k.size


@pytest.mark.parametrize("name,t,loops", [("red2", 1.0, 2), ("red2", -1.0, 2), ("red2", 2.5, 0), ("op1", 0.5, 1)])
def test_gapless_trace_loops(name, t, loops):
    tr = winding_vector_trace(name, t)
    assert not tr.closed
    assert count_loops(tr) == loops == abs(critical_winding(name, t).w_c)


@settings(max_examples=30, deadline=None)
@given(st.floats(-PI, PI), st.floats(-PI, PI))
def test_trace_loops_match_gapped_winding(t1, t2):
    try:
        w = winding_number((t1, t2))
    except GaplessInputError:
        return
    if w.min_gap < 1e-2:
        return
    assert count_loops(winding_vector_trace((t1, t2), n_grid=4096)) == abs(w.w)
