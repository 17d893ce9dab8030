"""Wannier-state correlations, group velocity and winding of gapless phases."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .criticality import FitRejectedError, curvature_array, measure_peak, peak_value
from .phase_topology import CriticalLine, GaplessInputError, closing_momenta, gap_closing_momenta, get_line
from .walk_core import CoinAngles, bloch_components, bloch_derivatives

__all__ = [
    "CorrelationSeries",
    "VelocityProfile",
    "CriticalWinding",
    "UnitVectorSample",
    "WindingTrace",
    "GappedInputError",
    "wannier_correlation",
    "wannier_correlation_numeric",
    "correlation_decay_length",
    "group_velocity",
    "velocity_profile",
    "critical_winding",
    "critical_winding_at",
    "winding_vector_trace",
    "count_loops",
]

PI = np.pi
TWO_PI = 2 * np.pi


class GappedInputError(ValueError):
    """A gapless-phase quantity was requested where the spectrum is gapped."""


def _line(line) -> CriticalLine:
    return get_line(line) if isinstance(line, str) else line


def _angles(a) -> tuple[float, float]:
    if isinstance(a, CoinAngles):
        return a.theta1, a.theta2
    return float(a[0]), float(a[1])


# --------------------------------------------------------------------------
# Wannier-state correlation


@dataclass(frozen=True)
class CorrelationSeries:
    R_values: np.ndarray
    lambda_values: np.ndarray
    xi_c: float
    k0: float
    F_peak: float
    xi_source: str


def wannier_correlation(
    line,
    theta1c: float,
    k0: float,
    R_max: int | None = None,
    xi_source: str = "fit",
) -> CorrelationSeries:
    """``lambda(R) = exp(i k0 R) F0 / (2 xi) exp(-R / xi)`` for R = 0..R_max.

    Parameters
    ----------
    xi_source : {"fit", "leading_order"}
        ``"fit"`` takes F0 and xi from an Ornstein-Zernike fit at k0.
        ``"leading_order"`` sets ``xi = |F(theta1c, k0)|``, the leading term
        of the small-dk expansion; it is informational only.

    Raises
    ------
    FitRejectedError
        If the OZ fit fails or the extremum at k0 is a dip (xi^2 < 0).
    """
    line = _line(line)
    if xi_source == "fit":
        fit = measure_peak(line, theta1c, k0)
        if not fit.is_peak:
            raise FitRejectedError(
                f"no decay length: xi^2 = {fit.xi_squared:.4g} < 0 at theta1c={theta1c:.6g}, k0={k0:.6g}", fit
            )
        f0, xi = fit.F_peak, fit.xi_c
    elif xi_source == "leading_order":
        f0 = peak_value(line, theta1c, k0)
        xi = abs(f0)
    else:
        raise ValueError("xi_source must be 'fit' or 'leading_order'")
    if R_max is None:
        R_max = int(min(max(np.ceil(10 * xi), 1), 10_000))
    R = np.arange(int(R_max) + 1)
    lam = np.exp(1j * k0 * R) * f0 / (2 * xi) * np.exp(-R / xi)
    return CorrelationSeries(R, lam, float(xi), float(k0), float(f0), xi_source)


def correlation_decay_length(series: CorrelationSeries) -> float:
    """Decay length from a log-linear fit of |lambda(R)|."""
    mag = np.abs(series.lambda_values)
    m = mag > 0
    slope = np.polyfit(series.R_values[m], np.log(mag[m]), 1)[0]
    return float(-1.0 / slope)


def wannier_correlation_numeric(
    line,
    theta1c: float,
    R: int,
    n_grid: int = 16384,
    k0: float | None = None,
    exclude: float = 1e-6,
) -> complex:
    """``(1/2 pi) int F(theta1c, k) exp(i k R) dk`` by the midpoint rule.

    Without ``k0`` the integral runs over the whole zone. With ``k0`` it runs
    over ``|k - k0| <= pi/2``: F(k + pi) = F(k) on every critical line, so
    the full-zone transform is ``1 + (-1)^R`` times this single-peak part.
    Samples within ``exclude`` of a gap-closing momentum are dropped.
    """
    if R < 0:
        raise ValueError("R must be >= 0")
    if n_grid < 4096:
        raise ValueError("n_grid must be >= 4096")
    line = _line(line)
    if k0 is None:
        a, length = -PI, TWO_PI
    else:
        a, length = k0 - PI / 2, PI
    h = length / n_grid
    k = a + (np.arange(n_grid) + 0.5) * h
    f = curvature_array(line, theta1c, k)
    keep = np.isfinite(f)
    for c in closing_momenta(theta1c, float(line.theta2(theta1c))):
        dist = np.abs((k - c.k + PI) % TWO_PI - PI)
        keep &= dist > exclude
    f = np.where(keep, f, 0.0)
    return complex(np.sum(f * np.exp(1j * k * R)) * h / TWO_PI)


# --------------------------------------------------------------------------
# group velocity


def _velocity_plus(t1, t2, k):
    d0p, _, _ = bloch_derivatives(t1, t2, k)
    _, d2, d3 = bloch_components(t1, t2, k)
    r = np.hypot(d2, d3)
    with np.errstate(divide="ignore", invalid="ignore"):
        return -d0p / r, r


def group_velocity(angles, k, band: str = "plus"):
    """``dE/dk`` of the upper (``E = arccos d0``) or lower band.

    ``sqrt(1 - d0^2)`` is evaluated as ``|(d2, d3)|``.

    Raises
    ------
    GaplessInputError
        At a gap-closing momentum (``1 - d0^2 <= 1e-14``).
    """
    if band not in ("plus", "minus"):
        raise ValueError("band must be 'plus' or 'minus'")
    t1, t2 = _angles(angles)
    v, r = _velocity_plus(t1, t2, np.asarray(k, dtype=float))
    if np.any(r**2 <= 1e-14):
        raise GaplessInputError("group velocity requested at a gap-closing momentum")
    v = v if band == "plus" else -v
    return float(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class VelocityProfile:
    k: np.ndarray
    v_plus: np.ndarray
    v_minus: np.ndarray
    span: tuple[float, float]
    discontinuities: tuple[float, ...]
    closings: tuple[float, ...]

    def piecewise_constant_deviation(self) -> float:
        """Largest spread of |v| between consecutive gap closings."""
        if not self.closings:
            return float(np.ptp(np.abs(self.v_plus)))
        cuts = np.sort(np.asarray(self.closings))
        seg = np.searchsorted(cuts, self.k)
        seg[seg == len(cuts)] = 0  # wrap the last arc onto the first
        dev = 0.0
        for s in np.unique(seg):
            a = np.abs(self.v_plus[seg == s])
            dev = max(dev, float(np.ptp(a)))
        return dev


def velocity_profile(angles, n_grid: int = 4096) -> VelocityProfile:
    """Group velocity on a midpoint grid of the zone with span and jumps.

    A closing counts as a discontinuity when v sampled 1e-4 either side of
    it differs by more than 1e-2. Closer probes lose digits next to k = pi.
    """
    if n_grid < 1024:
        raise ValueError("n_grid must be >= 1024")
    t1, t2 = _angles(angles)
    k = -PI + TWO_PI * (np.arange(n_grid) + 0.5) / n_grid
    v, _ = _velocity_plus(t1, t2, k)
    closings = closing_momenta(t1, t2)
    jumps = []
    eps = 1e-4
    for c in closings:
        lo, _ = _velocity_plus(t1, t2, c.k - eps)
        hi, _ = _velocity_plus(t1, t2, c.k + eps)
        if abs(float(hi) - float(lo)) > 1e-2:
            jumps.append(c.k)
    span = (float(np.min(v)), float(np.max(v)))
    return VelocityProfile(k, v, -v, span, tuple(jumps), tuple(c.k for c in closings))


# --------------------------------------------------------------------------
# winding in gapless phases


@dataclass(frozen=True)
class CriticalWinding:
    """Winding with ``|k - k_c| <= delta`` removed around every closing.

    ``w_c_raw`` is the Richardson extrapolation over delta, delta/2, delta/4;
    ``raw_by_delta`` holds the un-extrapolated values.
    """

    w_c_raw: float
    w_c: int
    quantized: bool
    delta: float
    excluded: tuple[float, ...]
    raw_by_delta: tuple[tuple[float, float], ...]


def _arc_winding(t1, t2, closings, delta, n_grid):
    ks = np.sort(np.asarray(closings, dtype=float))
    lo = ks + delta
    hi = np.roll(ks, -1) - delta
    hi[-1] += TWO_PI
    n_per = max(16, int(n_grid // len(ks)))
    return kernels.arc_angle_sum(t1, t2, lo, hi, n_per) / TWO_PI


def critical_winding_at(theta1: float, theta2: float, delta: float = 1e-2, n_grid: int = 8192) -> CriticalWinding:
    """Gapless winding number at arbitrary angles with at least one closing."""
    if not 1e-4 <= delta <= 1e-1:
        raise ValueError("delta must lie in [1e-4, 1e-1]")
    closings = [c.k for c in closing_momenta(theta1, theta2)]
    if not closings:
        raise GappedInputError(f"no gap closing at ({theta1}, {theta2}); use winding_number")
    ks = np.sort(closings)
    if len(ks) > 1:
        sep = np.min(np.diff(np.append(ks, ks[0] + TWO_PI)))
        delta = min(delta, 0.25 * sep)
    ws = [_arc_winding(theta1, theta2, ks, delta / 2**j, n_grid) for j in range(3)]
    r1 = 2 * ws[1] - ws[0]
    r2 = 2 * ws[2] - ws[1]
    raw = (4 * r2 - r1) / 3
    w = int(np.rint(raw))
    return CriticalWinding(
        float(raw),
        w,
        bool(abs(raw - w) < 1e-2),
        float(delta),
        tuple(float(x) for x in ks),
        tuple((float(delta / 2**j), float(ws[j])) for j in range(3)),
    )


def critical_winding(line, theta1c: float, delta: float = 1e-2, n_grid: int = 8192) -> CriticalWinding:
    """Winding number of a gapless phase on ``line`` at ``theta1c``.

    Raises
    ------
    GappedInputError
        In the gapped sub-domain of an orange/purple line.
    """
    line = _line(line)
    if not line.contains(theta1c):
        raise ValueError(f"theta1c={theta1c} outside the domain of {line.name}")
    if not gap_closing_momenta(line, theta1c):
        raise GappedInputError(f"{line.name} is gapped at theta1c={theta1c}")
    return critical_winding_at(theta1c, float(line.theta2(theta1c)), delta, n_grid)


@dataclass(frozen=True)
class UnitVectorSample:
    k: float
    n2: float
    n3: float


@dataclass(frozen=True)
class WindingTrace:
    """Normalised (n2, n3) along the zone; ``segment`` labels contiguous arcs."""

    k: np.ndarray
    n2: np.ndarray
    n3: np.ndarray
    segment: np.ndarray
    closed: bool

    def samples(self) -> list[UnitVectorSample]:
        return [UnitVectorSample(float(a), float(b), float(c)) for a, b, c in zip(self.k, self.n2, self.n3)]


def winding_vector_trace(angles_or_line, theta1c: float | None = None, n_grid: int = 1024, delta: float = 1e-2) -> WindingTrace:
    """Unit winding vector over the zone, with closing neighbourhoods removed."""
    if isinstance(angles_or_line, (CriticalLine, str)) and theta1c is not None:
        line = _line(angles_or_line)
        t1, t2 = theta1c, float(line.theta2(theta1c))
    else:
        t1, t2 = _angles(angles_or_line)
    k = -PI + TWO_PI * (np.arange(n_grid) + 0.5) / n_grid
    _, d2, d3 = bloch_components(t1, t2, k)
    closings = [c.k for c in closing_momenta(t1, t2)]
    keep = np.ones(n_grid, dtype=bool)
    for c in closings:
        keep &= np.abs((k - c + PI) % TWO_PI - PI) > delta
    r = np.hypot(d2, d3)
    keep &= r > 0
    # a new segment starts after every removed run
    seg = np.cumsum(np.r_[True, ~keep[:-1]] & keep) - 1
    if keep[0] and keep[-1]:
        # the arc crossing the zone boundary is one segment
        seg[seg == seg[-1]] = 0
    k, n2, n3, seg = k[keep], d2[keep] / r[keep], d3[keep] / r[keep], seg[keep]
    return WindingTrace(k, n2, n3, seg, closed=not closings)


def count_loops(trace: WindingTrace) -> int:
    """Number of full turns of the traced vector, |total angle| / 2 pi, rounded.

    Increments are summed inside each contiguous arc only, including the
    step across the zone boundary when that arc wraps around it.
    """
    if trace.k.size < 2:
        return 0
    n2, n3 = trace.n2, trace.n3
    inc = np.arctan2(n2[:-1] * n3[1:] - n3[:-1] * n2[1:], n2[:-1] * n2[1:] + n3[:-1] * n3[1:])
    same = trace.segment[1:] == trace.segment[:-1]
    total = float(np.sum(inc[same]))
    if trace.closed or (trace.segment[-1] == trace.segment[0]):
        total += float(np.arctan2(n2[-1] * n3[0] - n3[-1] * n2[0], n2[-1] * n2[0] + n3[-1] * n3[0]))
    return int(np.rint(abs(total) / TWO_PI))
