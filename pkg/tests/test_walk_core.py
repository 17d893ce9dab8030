import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaplesswalk.walk_core import (
    CoinAngles,
    DegenerateGapError,
    alpha,
    beta_form_discrepancy,
    bloch_components,
    bloch_derivatives,
    bloch_vector,
    chiral_check,
    coin_matrix,
    effective_hamiltonian,
    gap_at,
    pauli_decompose,
    quasi_energy,
    walk_unitary,
    wrap_angle,
)

PI = np.pi
angle = st.floats(-PI, PI, allow_nan=False)


def test_coin_matrix_special_values():
    assert np.allclose(coin_matrix(0.0), np.eye(2))
    assert np.allclose(coin_matrix(PI / 2), [[0, -1], [1, 0]])


@given(angle)
def test_coin_is_rotation(t):
    c = coin_matrix(t)
    assert np.isclose(np.linalg.det(c), 1.0)
    assert np.allclose(c.T @ c, np.eye(2), atol=1e-14)


def test_bloch_vector_examples():
    b = bloch_vector((0.0, 0.0), PI / 6)
    assert np.allclose([b.d0, b.d2, b.d3], [0, 0, 1], atol=1e-15)
    k = np.linspace(-PI, PI, 17)
    b = bloch_vector((PI / 2, PI / 2), k)
    assert np.allclose(b.d0, 0, atol=1e-15)
    assert np.allclose(b.d2, np.cos(k), atol=1e-15)
    assert np.allclose(b.d3, -np.sin(k), atol=1e-15)


def test_bloch_vector_matches_matrix_product():
    t1, t2, k = 0.7, -0.3, 1.1
    h = coin_matrix(t1 / 2)
    c = coin_matrix(t2)
    s = np.diag([np.exp(1j * k), np.exp(-1j * k)])
    u = h @ s @ c @ s @ c @ s @ h
    d = pauli_decompose(u)
    b = bloch_vector((t1, t2), k)
    assert np.allclose(d, [b.d0, 0, b.d2, b.d3], atol=1e-14)


def test_walk_unitary_pure_shift():
    k = 0.37
    assert np.allclose(walk_unitary((0, 0), k), np.diag([np.exp(3j * k), np.exp(-3j * k)]))


@given(angle, angle, angle)
def test_unitarity_and_sum_rule(t1, t2, k):
    u = walk_unitary((t1, t2), k)
    assert np.allclose(u.conj().T @ u, np.eye(2), atol=1e-12)
    d0, d2, d3 = bloch_components(t1, t2, k)
    assert abs(d0**2 + d2**2 + d3**2 - 1) < 1e-12


@given(angle, angle, angle)
def test_decomposition_is_real_with_zero_d1(t1, t2, k):
    d = pauli_decompose(walk_unitary((t1, t2), k))
    assert np.max(np.abs(d.imag)) < 1e-12
    assert abs(d[1]) < 1e-12


@given(angle, angle, angle)
def test_alpha_equals_d0(t1, t2, k):
    assert abs(alpha((t1, t2), k) - bloch_components(t1, t2, k)[0]) < 1e-12


def test_eigenphases_match_quasi_energy():
    t, k = (0.7, -0.3), 1.1
    phases = np.sort(-np.angle(np.linalg.eigvals(walk_unitary(t, k))))
    e = quasi_energy(t, k)
    assert np.allclose(phases, np.sort([e.e_minus, e.e_plus]), atol=1e-12)


def test_quasi_energy_examples():
    assert quasi_energy((0, 0), 0.0).e_plus == pytest.approx(0.0, abs=1e-12)
    for k in (-2.0, 0.1, 1.3):
        assert quasi_energy((PI / 2, PI / 2), k).e_plus == pytest.approx(PI / 2)
    assert quasi_energy((PI, 0), 0.0).e_plus == pytest.approx(PI)


def test_gap_examples():
    assert gap_at((0, 0), 0.0) == pytest.approx(0.0, abs=1e-12)
    assert gap_at((PI / 2, PI / 2), 0.9) == pytest.approx(PI / 2)
    assert gap_at((PI / 3, PI / 3), PI) == pytest.approx(0.0, abs=1e-7)


@given(angle, angle, angle)
def test_derivatives_match_finite_differences(t1, t2, k):
    h = 1e-6
    fp = np.array(bloch_components(t1, t2, k + h))
    fm = np.array(bloch_components(t1, t2, k - h))
    assert np.allclose(np.array(bloch_derivatives(t1, t2, k)), (fp - fm) / (2 * h), atol=1e-7)


@settings(max_examples=200)
@given(angle, angle, angle)
def test_chiral_symmetry(t1, t2, k):
    if gap_at((t1, t2), k) < 1e-9:
        with pytest.raises(DegenerateGapError):
            chiral_check((t1, t2), k)
    else:
        assert chiral_check((t1, t2), k) < 1e-10


def test_effective_hamiltonian_generates_unitary():
    from scipy.linalg import expm

    t, k = (0.7, -0.3), 1.1
    h = effective_hamiltonian(t, k)
    assert np.allclose(expm(-1j * h), walk_unitary(t, k), atol=1e-12)
    assert chiral_check((PI / 2, PI / 2), 0.3) < 1e-10


def test_beta_form_does_not_match_d0_form():
    # recorded discrepancy: the alternative radicand is not -16 (1 - d0^2)
    assert beta_form_discrepancy((0.7, -0.3), np.linspace(-PI, PI, 101)) > 1.0


def test_coin_angles_wrap():
    a = CoinAngles(3 * PI / 2, -PI)
    assert a.theta1 == pytest.approx(-PI / 2)
    assert a.theta2 == pytest.approx(-PI)
    assert wrap_angle(wrap_angle(7.0)) == pytest.approx(wrap_angle(7.0))


def test_out_of_range_d0_raises():
    from gaplesswalk.walk_core import _check_d0

    _check_d0(np.array([1.0 + 1e-13]))
    with pytest.raises(ValueError):
        _check_d0(np.array([1.0 + 1e-9]))
