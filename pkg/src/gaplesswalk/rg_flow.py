"""Curvature renormalisation-group flow along the critical lines.

The flow ``d theta1c / dl = (1/2) d_k^2 F(theta1c, k0) / d_theta F(theta1c, k0)``
vanishes at fixed points and diverges at the multicritical angles that
host gapless-to-gapless transitions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .criticality import curvature_array, family_representative
from .phase_topology import CriticalLine, LineFamily, get_line

__all__ = [
    "FlowCoefficients",
    "RGTrajectory",
    "FlowPoints",
    "VanishingDenominatorError",
    "SingularFlowError",
    "flow_coefficients",
    "rg_rhs_numeric",
    "rg_rhs_closed",
    "printed_rhs",
    "integrate_flow",
    "classify_flow_points",
    "FIXED_THRESHOLD",
    "DIVERGED_THRESHOLD",
]

PI = math.pi
FIXED_THRESHOLD = 1e-6
DIVERGED_THRESHOLD = 1e6
_MAX_STEP = 1e-2


class VanishingDenominatorError(ZeroDivisionError):
    """d_theta F vanished at k0."""


class SingularFlowError(ZeroDivisionError):
    """The closed-form flow has a pole exactly at the requested angle."""


@dataclass(frozen=True)
class FlowCoefficients:
    kappa1: float
    kappa2: float
    kappa3: float
    kappa_r: float
    kappa_b: float


def flow_coefficients(theta1c: float) -> FlowCoefficients:
    s, c = math.sin(theta1c), math.cos(theta1c)
    c2 = math.cos(2 * theta1c)
    return FlowCoefficients(s, c, math.sin(2 * theta1c), c2, 4 * c - c2)


def _line_for(line_or_family) -> CriticalLine:
    if isinstance(line_or_family, CriticalLine):
        return line_or_family
    try:
        return get_line(line_or_family)
    except KeyError:
        return family_representative(LineFamily(line_or_family))


def _even_extrapolation(line, theta1c, k0, h):
    """F(k0) and d_k^2 F(k0) from samples at k0 +- h, 2h, 3h (F is even about k0)."""
    hs = np.array([h, 2 * h, 3 * h])
    f = 0.5 * (curvature_array(line, theta1c, k0 + hs) + curvature_array(line, theta1c, k0 - hs))
    A = np.vstack([np.ones(3), hs**2, hs**4]).T
    c = np.linalg.solve(A, f)
    return float(c[0]), float(2 * c[1])


def rg_rhs_numeric(line, theta1c: float, k0: float = 0.0, h_k: float = 1e-4, h_theta: float = 1e-5) -> float:
    """Flow rate from finite differences of the curvature function.

    ``F(k0)`` and its second k-derivative come from an even polynomial
    through samples at ``k0 +- (1, 2, 3) h_k`` (k0 itself is a closing on the
    high-symmetry lines); ``d_theta F`` is a central difference.

    Returns ``inf`` when F itself is not finite at ``theta1c``.

    Raises
    ------
    VanishingDenominatorError
        If ``|d_theta F| < 1e-12``.
    """
    line = _line_for(line)
    f0, d2k = _even_extrapolation(line, theta1c, k0, h_k)
    fp, _ = _even_extrapolation(line, theta1c + h_theta, k0, h_k)
    fm, _ = _even_extrapolation(line, theta1c - h_theta, k0, h_k)
    if not all(np.isfinite([f0, fp, fm, d2k])):
        return math.inf
    dth = (fp - fm) / (2 * h_theta)
    if abs(dth) < 1e-12:
        raise VanishingDenominatorError(f"d_theta F = {dth:.3e} at theta1c={theta1c}")
    return 0.5 * d2k / dth


def rg_rhs_closed(family, theta1c: float) -> float:
    """Closed-form flow rate for a line family.

    Red: ``(3 k1 - k1/(1 + 2 k2) - 2 k1/(2 + kr) + k3) / 2``;
    blue: the red rate at ``theta1c + pi``;
    orange/purple: ``k2 / k1``.

    Raises
    ------
    SingularFlowError
        When a denominator vanishes exactly.
    """
    family = LineFamily(family)
    if family is LineFamily.BLUE_HS:
        return rg_rhs_closed(LineFamily.RED_HS, theta1c + PI)
    k = flow_coefficients(theta1c)
    try:
        if family is LineFamily.RED_HS:
            return 0.5 * (3 * k.kappa1 - k.kappa1 / (1 + 2 * k.kappa2) - 2 * k.kappa1 / (2 + k.kappa_r) + k.kappa3)
        return k.kappa2 / k.kappa1
    except ZeroDivisionError as exc:
        raise SingularFlowError(f"flow pole at theta1c={theta1c}") from exc


def printed_rhs(family, theta1c: float) -> float:
    """Flow rates exactly as tabulated in closed form, for comparison.

    Red and orange/purple equal twice the derivative-based rate; the blue
    entry does not match the blue curvature function.
    """
    family = LineFamily(family)
    k = flow_coefficients(theta1c)
    if family is LineFamily.RED_HS:
        return 3 * k.kappa1 - k.kappa1 / (1 + 2 * k.kappa2) - 2 * k.kappa1 / (2 + k.kappa_r) + k.kappa3
    if family is LineFamily.BLUE_HS:
        return k.kappa1 + k.kappa1 / (1 - 2 * k.kappa2) - 6 * k.kappa1 / (4 - k.kappa_b) + k.kappa3
    return 2 * k.kappa2 / k.kappa1


def _poles(family: LineFamily) -> tuple[float, ...]:
    if family is LineFamily.RED_HS:
        return (-2 * PI / 3, 2 * PI / 3)
    if family is LineFamily.BLUE_HS:
        return (-PI / 3, PI / 3)
    return (-PI, 0.0, PI)


@dataclass(frozen=True)
class RGTrajectory:
    thetas: np.ndarray
    dl: float
    terminal: str  # "fixed_point", "diverged" or "max_steps"
    terminal_angle: float
    steps: int = field(default=0)


def _safe_rhs(family, t):
    try:
        return rg_rhs_closed(family, t)
    except SingularFlowError:
        return math.inf


def integrate_flow(family, theta1_start: float, dl: float = 1e-3, max_steps: int = 200_000) -> RGTrajectory:
    """Explicit Euler steps ``theta <- theta + rhs * dl`` with |step| <= 1e-2.

    Stops at a fixed point (|rhs| < 1e-6), on divergence (|rhs| > 1e6, or a
    step that would cross a pole), or after ``max_steps``.
    """
    family = LineFamily(family)
    if not 0 < dl <= 1e-2:
        raise ValueError("dl must lie in (0, 1e-2]")
    poles = _poles(family)
    t = float(theta1_start)
    path = [t]
    for n in range(max_steps):
        r = _safe_rhs(family, t)
        if abs(r) < FIXED_THRESHOLD:
            return RGTrajectory(np.array(path), dl, "fixed_point", t, n)
        if not abs(r) <= DIVERGED_THRESHOLD:
            return RGTrajectory(np.array(path), dl, "diverged", t, n)
        step = max(-_MAX_STEP, min(_MAX_STEP, r * dl))
        t_new = t + step
        for p in poles:
            if (t - p) * (t_new - p) < 0:
                return RGTrajectory(np.array(path), dl, "diverged", p, n)
        if t_new > PI:
            t_new -= 2 * PI
        elif t_new < -PI:
            t_new += 2 * PI
        t = t_new
        path.append(t)
    return RGTrajectory(np.array(path), dl, "max_steps", t, max_steps)


@dataclass(frozen=True)
class FlowPoints:
    fixed: tuple[float, ...]
    unstable: tuple[float, ...]
    stable: tuple[float, ...]


def _emit(x: float, out: list[float]):
    """Record an angle in [-pi, pi]; the seam point is listed as both -pi and pi."""
    x = (x + PI) % (2 * PI) - PI
    if abs(x) < 1e-12:
        x = 0.0
    if abs(abs(x) - PI) < 1e-9:
        for v in (-PI, PI):
            if not any(abs(v - y) < 1e-9 for y in out):
                out.append(v)
    elif not any(abs(x - y) < 1e-9 for y in out):
        out.append(x)


def classify_flow_points(family, resolution: int = 2000) -> FlowPoints:
    """Zeros (fixed points) and poles (unstable points) of the closed-form flow.

    Sign changes of the rate on a periodic grid are bisected to 1e-12 and
    labelled a pole when |rhs| is still above 1e3 next to the root.
    """
    family = LineFamily(family)
    if resolution < 1000:
        raise ValueError("resolution must be >= 1000")
    # offset grid so no node sits on a pole or zero exactly
    grid = -PI + 2 * PI * (np.arange(resolution) + 0.5) / resolution
    vals = np.array([_safe_rhs(family, t) for t in grid])
    fixed: list[float] = []
    unstable: list[float] = []
    stable: list[float] = []
    for j in range(resolution):
        a, b = grid[j], grid[(j + 1) % resolution]
        fa, fb = vals[j], vals[(j + 1) % resolution]
        if j == resolution - 1:
            b += 2 * PI
        if np.sign(fa) == np.sign(fb):
            continue
        x = brentq(lambda t: _safe_rhs(family, t), a, b, xtol=1e-13)
        near = max(abs(_safe_rhs(family, x - 1e-9)), abs(_safe_rhs(family, x + 1e-9)))
        if near > 1e3:
            _emit(x, unstable)
        else:
            _emit(x, fixed)
            if fa > 0 > fb:
                _emit(x, stable)
    return FlowPoints(tuple(sorted(fixed)), tuple(sorted(unstable)), tuple(sorted(stable)))
