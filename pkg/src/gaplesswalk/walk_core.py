"""Momentum-space three-step quantum walk.

The symmetric-frame walk operator is

    U(k) = C(t1/2) S(k) C(t2) S(k) C(t2) S(k) C(t1/2),

with ``S(k) = diag(e^{ik}, e^{-ik})`` in the (L, R) basis and ``C`` a real
rotation. Its Pauli decomposition ``U = d0 I + i d2 s2 + i d3 s3`` (``d1 = 0``)
carries the whole band structure.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CoinAngles",
    "BlochVector",
    "QuasiEnergy",
    "DegenerateGapError",
    "wrap_angle",
    "coin_matrix",
    "shift_matrix",
    "bloch_components",
    "bloch_derivatives",
    "bloch_vector",
    "walk_unitary",
    "pauli_decompose",
    "quasi_energy",
    "quasi_energy_array",
    "gap_at",
    "gap_array",
    "alpha",
    "effective_hamiltonian",
    "chiral_check",
    "beta_constants",
    "eigenvalue_beta_form",
    "beta_form_discrepancy",
]

PI = np.pi
TWO_PI = 2.0 * np.pi

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)

_CLAMP_TOL = 1e-12
_CHIRAL_GAP_TOL = 1e-9


class DegenerateGapError(ValueError):
    """Raised when a quantity needs a gapped spectrum but the gap is closed."""


def wrap_angle(x):
    """Map angles into [-pi, pi].

    Values already inside [-pi, pi] are returned unchanged, so both
    endpoints survive and the map is idempotent. Other values go to
    (-pi, pi].
    """
    x = np.asarray(x, dtype=float)
    inside = (x >= -PI) & (x <= PI)
    wrapped = PI - np.mod(PI - x, TWO_PI)
    out = np.where(inside, x, wrapped)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CoinAngles:
    """Coin rotation angles (theta1, theta2) on the torus [-pi, pi]^2."""

    theta1: float
    theta2: float

    def __post_init__(self):
        t1, t2 = float(self.theta1), float(self.theta2)
        if not (np.isfinite(t1) and np.isfinite(t2)):
            raise ValueError("coin angles must be finite")
        object.__setattr__(self, "theta1", wrap_angle(t1))
        object.__setattr__(self, "theta2", wrap_angle(t2))

    def as_tuple(self) -> tuple[float, float]:
        return (self.theta1, self.theta2)


@dataclass(frozen=True)
class BlochVector:
    """Pauli components of the walk operator; ``d1`` is zero by construction."""

    d0: np.ndarray | float
    d1: np.ndarray | float
    d2: np.ndarray | float
    d3: np.ndarray | float

    def norm_defect(self):
        return np.abs(self.d0**2 + self.d1**2 + self.d2**2 + self.d3**2 - 1.0)


@dataclass(frozen=True)
class QuasiEnergy:
    """Chiral pair of quasi-energies, ``e_minus = -e_plus`` with ``e_plus`` in [0, pi]."""

    e_plus: np.ndarray | float
    e_minus: np.ndarray | float


def _angles(angles) -> tuple[float, float]:
    if isinstance(angles, CoinAngles):
        return angles.theta1, angles.theta2
    t1, t2 = angles
    return float(t1), float(t2)


def coin_matrix(theta: float) -> np.ndarray:
    """Real rotation ``[[cos, -sin], [sin, cos]]``."""
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def shift_matrix(k: float) -> np.ndarray:
    """Conditional shift in momentum space, basis order (L, R)."""
    return np.diag([np.exp(1j * k), np.exp(-1j * k)])


def _line_coefficients(theta1: float, theta2: float):
    """Trig prefactors of the cos k, cos 3k, sin k, sin 3k harmonics."""
    c1, s1 = np.cos(theta1), np.sin(theta1)
    c2sq, s2sq = np.cos(theta2) ** 2, np.sin(theta2) ** 2
    s22 = np.sin(2.0 * theta2)
    a0 = -(c1 * s2sq + s1 * s22)
    b0 = c1 * c2sq
    a2 = s1 * s2sq - c1 * s22
    b2 = -s1 * c2sq
    a3 = -s2sq
    b3 = c2sq
    return a0, b0, a2, b2, a3, b3


def bloch_components(theta1, theta2, k):
    """Return ``(d0, d2, d3)`` as arrays broadcast over ``k``.

    ``theta1`` and ``theta2`` may be scalars or arrays broadcastable
    against ``k``.
    """
    k = np.asarray(k, dtype=float)
    a0, b0, a2, b2, a3, b3 = _line_coefficients(np.asarray(theta1, float), np.asarray(theta2, float))
    ck, c3k = np.cos(k), np.cos(3.0 * k)
    d0 = a0 * ck + b0 * c3k
    d2 = a2 * ck + b2 * c3k
    d3 = a3 * np.sin(k) + b3 * np.sin(3.0 * k)
    return d0, d2, d3


def bloch_derivatives(theta1, theta2, k):
    """Analytic k-derivatives ``(d0', d2', d3')``."""
    k = np.asarray(k, dtype=float)
    a0, b0, a2, b2, a3, b3 = _line_coefficients(np.asarray(theta1, float), np.asarray(theta2, float))
    sk, s3k = np.sin(k), np.sin(3.0 * k)
    dd0 = -a0 * sk - 3.0 * b0 * s3k
    dd2 = -a2 * sk - 3.0 * b2 * s3k
    dd3 = a3 * np.cos(k) + 3.0 * b3 * np.cos(3.0 * k)
    return dd0, dd2, dd3


def bloch_vector(angles, k) -> BlochVector:
    """Bloch vector ``(d0, d1, d2, d3)`` of the walk at momentum ``k``."""
    t1, t2 = _angles(angles)
    d0, d2, d3 = bloch_components(t1, t2, k)
    return BlochVector(d0=d0, d1=np.zeros_like(d0), d2=d2, d3=d3)


def walk_unitary(angles, k: float) -> np.ndarray:
    """Explicit 2x2 product of coins and shifts at a single momentum."""
    t1, t2 = _angles(angles)
    ch = coin_matrix(t1 / 2.0)
    c2 = coin_matrix(t2)
    s = shift_matrix(float(k))
    return ch @ s @ c2 @ s @ c2 @ s @ ch


def pauli_decompose(u: np.ndarray) -> np.ndarray:
    """Coefficients ``(d0, d1, d2, d3)`` with ``u = d0 I + i sum_j dj s_j``."""
    d0 = 0.5 * np.trace(u)
    dj = [-0.5j * np.trace(sig @ u) for sig in (SIGMA1, SIGMA2, SIGMA3)]
    return np.array([d0, *dj])


def _check_d0(d0):
    excess = np.max(np.abs(d0)) - 1.0 if np.size(d0) else -1.0
    if excess > _CLAMP_TOL:
        raise ValueError(f"|d0| exceeds 1 by {excess:.3e}; not a rounding artefact")


def quasi_energy_array(theta1, theta2, k):
    """``e_plus`` in [0, pi] over an array of momenta.

    Uses ``atan2(|(d2, d3)|, d0)``, which equals ``arccos(d0)`` on the unit
    sphere but does not lose digits near the band touchings.
    """
    d0, d2, d3 = bloch_components(theta1, theta2, k)
    _check_d0(d0)
    return np.arctan2(np.hypot(d2, d3), d0)


def quasi_energy(angles, k) -> QuasiEnergy:
    """Quasi-energy pair ``+-E`` with ``E = arccos(d0)``."""
    t1, t2 = _angles(angles)
    e = quasi_energy_array(t1, t2, k)
    if np.ndim(e) == 0:
        e = float(e)
    return QuasiEnergy(e_plus=e, e_minus=-e)


def gap_array(theta1, theta2, k):
    """Distance of ``E`` from the nearest gap-closing value 0 or pi."""
    e = quasi_energy_array(theta1, theta2, k)
    return np.minimum(e, PI - e)


def gap_at(angles, k):
    """``min(|E|, pi - |E|)``; zero exactly when ``|d0| = 1``."""
    t1, t2 = _angles(angles)
    g = gap_array(t1, t2, k)
    return float(g) if np.ndim(g) == 0 else g


def alpha(angles, k):
    """Eigenvalue real part in the expanded trigonometric form.

    Kept separate from ``bloch_components`` so the identity ``alpha == d0``
    can be tested between two independent expressions.
    """
    t1, t2 = _angles(angles)
    k = np.asarray(k, dtype=float)
    return np.cos(3 * k) * np.cos(t1) * np.cos(t2) ** 2 - np.cos(k) * np.sin(t2) * (
        2 * np.cos(t2) * np.sin(t1) + np.cos(t1) * np.sin(t2)
    )


def effective_hamiltonian(angles, k: float) -> np.ndarray:
    """Floquet Hamiltonian with ``U = exp(-i H)`` and spectrum ``+-E``.

    Built from ``(E, n)`` directly, ``H = -E (n . sigma)`` with
    ``n = (0, d2, d3)/|(d2, d3)|``, so no matrix logarithm branch is involved.
    """
    t1, t2 = _angles(angles)
    d0, d2, d3 = (float(x) for x in bloch_components(t1, t2, float(k)))
    r = np.hypot(d2, d3)
    e = np.arctan2(r, d0)
    if min(e, PI - e) < _CHIRAL_GAP_TOL or r == 0.0:
        raise DegenerateGapError(f"gap closed at k={k}")
    return -e * (d2 * SIGMA2 + d3 * SIGMA3) / r


def chiral_check(angles, k: float) -> float:
    """Norm of ``s1 H s1 + H``; vanishes for the chiral walk."""
    h = effective_hamiltonian(angles, k)
    return float(np.linalg.norm(SIGMA1 @ h @ SIGMA1 + h))


def beta_constants(angles, k):
    """Coefficients ``(b1, b2, b3)`` of the alternative eigenvalue radicand."""
    t1, t2 = _angles(angles)
    k = np.asarray(k, dtype=float)
    b1 = (9 + 4 * np.cos(2 * k) + 3 * np.cos(4 * k)) * np.sin(k) ** 2 * np.cos(2 * t1)
    b2 = 2 * np.cos(2 * k) * np.cos(t1) ** 2 * np.cos(2 * t2) + np.sin(2 * t1) * np.sin(2 * t2)
    b3 = (
        9
        + 3 * np.cos(4 * k)
        + (2 * np.cos(4 * k) * np.cos(t1) ** 2 - 5 * np.cos(2 * t1) - 1) * np.cos(4 * t2)
        + 4 * np.cos(2 * k) * (np.sin(2 * t1) * np.sin(4 * t2) - 2)
    )
    return b1, b2, b3


def eigenvalue_beta_form(angles, k):
    """Eigenvalue pair ``alpha +- sqrt(radicand)/4`` from the beta coefficients.

    Cross-check only. The radicand is returned alongside so callers can
    compare it with ``-16 (1 - d0^2)``, which the ``d0`` form implies.
    """
    b1, b2, b3 = beta_constants(angles, k)
    k = np.asarray(k, dtype=float)
    radicand = -2 * b1 - 8 * np.sin(2 * k) ** 2 * b2 + 2 * np.cos(k) ** 2 * b3
    a = alpha(angles, k)
    root = np.sqrt(radicand + 0j) / 4.0
    return a + root, a - root, radicand


def beta_form_discrepancy(angles, k) -> float:
    """Max ``|radicand + 16 (1 - d0^2)|`` over ``k``; zero if the forms agree."""
    t1, t2 = _angles(angles)
    d0, _, _ = bloch_components(t1, t2, k)
    _, _, radicand = eigenvalue_beta_form(angles, k)
    return float(np.max(np.abs(radicand + 16.0 * (1.0 - d0**2))))
