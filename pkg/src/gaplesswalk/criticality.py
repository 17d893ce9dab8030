"""Curvature function on critical lines, Ornstein-Zernike fits and critical exponents.

On a critical line the walk has one free parameter ``theta1c``; the
curvature function

    F(theta1c, k) = (d2 d3' - d3 d2') / (d2^2 + d3^2)

develops an Ornstein-Zernike peak ``F0 / (1 + xi^2 dk^2)`` near a
gap-closing momentum as ``theta1c`` approaches a multicritical angle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .phase_topology import (
    CriticalLine,
    LineFamily,
    MulticriticalPoint,
    PoorFitError,
    closing_momenta,
    get_line,
)
from .walk_core import bloch_components, bloch_derivatives

__all__ = [
    "CriticalBloch",
    "OZFit",
    "ExponentFit",
    "ZetaCoefficients",
    "SwapReport",
    "GapClosingError",
    "FitRejectedError",
    "NotATransitionError",
    "critical_bloch",
    "curvature_function",
    "curvature_array",
    "eta_coefficients",
    "closed_form_curvature",
    "printed_blue_curvature",
    "oz_fit",
    "half_width",
    "measure_peak",
    "peak_momentum",
    "peak_value",
    "transition_angles",
    "critical_exponents",
    "analytic_oz_coefficients",
    "swap_detector",
    "family_representative",
]

PI = np.pi
_R2_MIN = 1e-14
_FAMILY_LINE = {
    LineFamily.RED_HS: "red2",
    LineFamily.BLUE_HS: "blue1",
    LineFamily.ORANGE_PURPLE_NHS: "op1",
}


class GapClosingError(ValueError):
    """Curvature requested at a momentum where (d2, d3) vanishes."""


class FitRejectedError(PoorFitError):
    """Ornstein-Zernike fit below the acceptance threshold."""


class NotATransitionError(ValueError):
    """The multicritical angle does not separate two gapless phases on this line."""


def _line(line) -> CriticalLine:
    return get_line(line) if isinstance(line, str) else line


def family_representative(family: LineFamily) -> CriticalLine:
    """A line of ``family``; all lines of one family share F(theta1c, k)."""
    return get_line(_FAMILY_LINE[LineFamily(family)])


# --------------------------------------------------------------------------
# curvature on a line


@dataclass(frozen=True)
class CriticalBloch:
    d2c: np.ndarray | float
    d3c: np.ndarray | float
    dd2c: np.ndarray | float
    dd3c: np.ndarray | float


def critical_bloch(line, theta1c: float, k) -> CriticalBloch:
    """(d2, d3) and their k-derivatives with theta2 fixed by the line map.

    On the high-symmetry lines ``sin(theta1 + 2 theta2) = 0``, which turns
    ``d2`` into ``2 sin(theta1) cos^2(theta2) sin(2k) sin(k)``. That form
    has no cancellation near k = 0 or pi and is used there.
    """
    line = _line(line)
    t2 = float(line.theta2(theta1c))
    k = np.asarray(k, dtype=float)
    _, d2, d3 = bloch_components(theta1c, t2, k)
    _, dd2, dd3 = bloch_derivatives(theta1c, t2, k)
    if line.family is not LineFamily.ORANGE_PURPLE_NHS:
        c = 2.0 * np.sin(theta1c) * np.cos(t2) ** 2
        s1, s2, c1, c2 = np.sin(k), np.sin(2 * k), np.cos(k), np.cos(2 * k)
        d2 = c * s2 * s1
        dd2 = c * (2.0 * c2 * s1 + s2 * c1)
    return CriticalBloch(d2, d3, dd2, dd3)


def curvature_array(line, theta1c: float, k):
    """Curvature function over an array of momenta; NaN at exact closings."""
    cb = critical_bloch(line, theta1c, k)
    r2 = cb.d2c**2 + cb.d3c**2
    with np.errstate(divide="ignore", invalid="ignore"):
        f = (cb.d2c * cb.dd3c - cb.d3c * cb.dd2c) / r2
    return np.where(r2 > _R2_MIN * 1e-20, f, np.nan)


def curvature_function(line, theta1c: float, k):
    """Curvature function F(theta1c, k) on a critical line.

    Raises
    ------
    GapClosingError
        If ``d2^2 + d3^2 <= 1e-14`` at any requested momentum.
    """
    cb = critical_bloch(line, theta1c, k)
    r2 = cb.d2c**2 + cb.d3c**2
    if np.any(r2 <= _R2_MIN):
        raise GapClosingError(f"gap closes at theta1c={theta1c}")
    f = (cb.d2c * cb.dd3c - cb.d3c * cb.dd2c) / r2
    return float(f) if np.ndim(f) == 0 else f


def eta_coefficients(family, theta1c: float, k):
    """The five coefficients of the red or blue rational curvature form."""
    family = LineFamily(family)
    t = theta1c
    k = np.asarray(k, dtype=float)
    ck2 = np.cos(k) ** 2
    if family is LineFamily.RED_HS:
        return (
            128 * (1 + 2 * ck2 * np.cos(t)),
            np.cos(4 * k),
            ck2 * np.cos(t),
            16 * (1 + ck2 * (3 * np.cos(t) + 2 * np.cos(2 * t))),
            2 * (4 * np.cos(3 * t) + np.cos(4 * t)),
        )
    if family is LineFamily.BLUE_HS:
        return (
            128 * (-1 + 2 * ck2 * np.cos(t)),
            np.cos(4 * k),
            ck2 * np.cos(t),
            16 * (1 - ck2 * (3 * np.cos(t) - 2 * np.cos(2 * t))),
            2 * (-4 * np.cos(3 * t) + np.cos(4 * t)),
        )
    raise ValueError("eta coefficients exist for the red and blue families only")


def closed_form_curvature(family, theta1c: float, k):
    """Rational closed form of F on each line family.

    The blue form is the red form shifted by theta1 -> theta1 + pi with the
    overall sign reversed, which is what direct evaluation gives.
    """
    family = LineFamily(family)
    t = theta1c
    k = np.asarray(k, dtype=float)
    if family is LineFamily.ORANGE_PURPLE_NHS:
        den = np.cos(2 * k) + 2 * np.cos(k) ** 2 * np.cos(2 * t) - 3
        return 4 * np.sin(t) / den
    e1, e2, e3, e4, e5 = eta_coefficients(family, t, k)
    if family is LineFamily.RED_HS:
        num = -np.cos(t / 2) ** 3 * np.sin(t / 2) * e1
        den = 25 + 7 * e2 + 16 * e3 + np.cos(2 * k) * e4 - np.sin(2 * k) ** 2 * e5
    else:
        num = np.sin(t / 2) ** 3 * np.cos(t / 2) * e1
        den = 25 + 7 * e2 - 16 * e3 + np.cos(2 * k) * e4 - np.sin(2 * k) ** 2 * e5
    with np.errstate(divide="ignore", invalid="ignore"):
        return num / den


def printed_blue_curvature(theta1c: float, k):
    """Blue-line form with the cos^3 sin prefactor and -cos(4t) in eta5.

    Kept for comparison only; it does not equal the direct evaluation.
    """
    t = theta1c
    k = np.asarray(k, dtype=float)
    e1, e2, e3, e4, _ = eta_coefficients(LineFamily.BLUE_HS, t, k)
    e5 = 2 * (-4 * np.cos(3 * t) - np.cos(4 * t))
    num = np.cos(t / 2) ** 3 * np.sin(t / 2) * e1
    den = 25 + 7 * e2 - 16 * e3 + np.cos(2 * k) * e4 - np.sin(2 * k) ** 2 * e5
    return num / den


# --------------------------------------------------------------------------
# Ornstein-Zernike fits


@dataclass(frozen=True)
class OZFit:
    """Fit of ``F0 / (1 + xi^2 dk^2)``.

    ``xi_squared`` is negative when the extremum at ``k0`` is a dip rather
    than a peak; ``xi_c`` is then NaN.
    """

    F_peak: float
    xi_c: float
    k0: float
    r_squared: float
    xi_squared: float
    window: float
    n_samples: int

    @property
    def is_peak(self) -> bool:
        return self.xi_squared > 0


def oz_fit(k, F, k0: float, window: float, exclude_fraction: float = 1e-3, min_r2: float = 0.99) -> OZFit:
    """Linear regression of 1/F on dk^2 inside ``|k - k0| <= window``.

    Samples with ``|k - k0| < exclude_fraction * window`` are dropped.

    Raises
    ------
    FitRejectedError
        If fewer than 20 samples are usable or r^2 < ``min_r2``.
    """
    k = np.asarray(k, dtype=float)
    F = np.asarray(F, dtype=float)
    dk = k - k0
    m = (np.abs(dk) <= window) & (np.abs(dk) >= exclude_fraction * window) & np.isfinite(F) & (F != 0)
    if m.sum() < 20:
        raise FitRejectedError(f"only {int(m.sum())} samples inside the window")
    x = dk[m] ** 2
    y = 1.0 / F[m]
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - resid @ resid / ss if ss > 0 else 1.0
    f_peak = 1.0 / coef[0]
    xi2 = coef[1] * f_peak
    xi = float(np.sqrt(xi2)) if xi2 > 0 else float("nan")
    fit = OZFit(float(f_peak), xi, float(k0), float(r2), float(xi2), float(window), int(m.sum()))
    if r2 < min_r2:
        raise FitRejectedError(f"OZ fit r^2 = {r2:.4f} < {min_r2}", fit)
    return fit


def peak_value(line, theta1c: float, k0: float) -> float:
    """F at ``k0``, taking the limit when ``k0`` is itself a closing."""
    line = _line(line)
    try:
        return curvature_function(line, theta1c, k0)
    except GapClosingError:
        pass
    # F is even about a high-symmetry closing: fit F0 + a h^2 + b h^4
    h = np.array([1e-4, 2e-4, 3e-4])
    f = curvature_array(line, theta1c, k0 + h)
    A = np.vstack([np.ones(3), h**2, h**4]).T
    return float(np.linalg.solve(A, f)[0])


def half_width(line, theta1c: float, k0: float, f0: float | None = None) -> float | None:
    """Smallest dk > 0 with F(k0 + dk) = F(k0)/2, or None if never reached."""
    line = _line(line)
    f0 = peak_value(line, theta1c, k0) if f0 is None else f0
    dd = np.geomspace(1e-8, 1.0, 400)
    g = curvature_array(line, theta1c, k0 + dd) - 0.5 * f0
    ok = np.isfinite(g)
    flips = np.nonzero(ok[1:] & ok[:-1] & (np.sign(g[1:]) != np.sign(g[:-1])))[0]
    if flips.size == 0:
        return None
    i = flips[0]
    return float(brentq(lambda x: float(curvature_array(line, theta1c, k0 + x)) - 0.5 * f0, dd[i], dd[i + 1]))


def measure_peak(
    line,
    theta1c: float,
    k0: float,
    window: float | None = None,
    n_samples: int = 200,
    width_fraction: float = 0.5,
    max_window: float = 0.1,
    min_r2: float = 0.99,
) -> OZFit:
    """Sample F around ``k0`` and fit the Ornstein-Zernike form.

    The default window is ``min(max_window, width_fraction * HWHM)``; a
    fixed window wider than the peak lets the background dominate 1/F.
    """
    line = _line(line)
    if window is None:
        hw = half_width(line, theta1c, k0)
        window = max_window if hw is None else min(max_window, width_fraction * hw)
    dk = np.linspace(-window, window, 2 * n_samples + 1)
    f = curvature_array(line, theta1c, k0 + dk)
    return oz_fit(k0 + dk, f, k0, window, min_r2=min_r2)


def peak_momentum(line, theta1c: float, near: float, span: float = 0.5, n_grid: int = 4001) -> float:
    """Momentum of the largest |F| within ``near +- span``, golden-section refined."""
    line = _line(line)
    k = near + np.linspace(-span, span, n_grid)
    f = np.abs(curvature_array(line, theta1c, k))
    f[~np.isfinite(f)] = -1.0
    j = int(np.argmax(f))
    h = k[1] - k[0]
    res = minimize_scalar(
        lambda x: -abs(float(curvature_array(line, theta1c, x))),
        bounds=(k[j] - h, k[j] + h),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x)


# --------------------------------------------------------------------------
# exponents


def transition_angles(line) -> tuple[float, ...]:
    """Multicritical angles on ``line`` that separate two gapless phases."""
    family = _line(line).family
    if family is LineFamily.RED_HS:
        return (-2 * PI / 3, 0.0, 2 * PI / 3)
    if family is LineFamily.BLUE_HS:
        return (-PI, -PI / 3, PI / 3, PI)
    return (-PI, 0.0, PI)


def _is_linear_angle(line: CriticalLine, theta_mc: float) -> bool:
    if line.family is LineFamily.RED_HS:
        return abs(theta_mc) < 1e-9
    if line.family is LineFamily.BLUE_HS:
        return abs(abs(theta_mc) - PI) < 1e-9
    return True


def _default_k0(line: CriticalLine, theta_mc: float):
    """Momentum tracked by the exponent fits; a callable when it moves with theta1c."""
    if line.family is LineFamily.ORANGE_PURPLE_NHS:
        return 0.0
    if not _is_linear_angle(line, theta_mc):
        return 0.0
    # swapped peaks near the linear points sit close to the NHS closings at pi/3
    return lambda t: peak_momentum(line, t, PI / 3, span=0.4)


@dataclass(frozen=True)
class ExponentFit:
    gamma: float
    nu: float
    fit_range: tuple[float, float]
    slope_errors: tuple[float, float]
    side: str
    distances: np.ndarray
    F_peaks: np.ndarray
    xis: np.ndarray
    min_r_squared: float


def _slope(x, y):
    A = np.vstack([np.log(x), np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
    n = len(x)
    resid = np.log(y) - A @ coef
    s2 = resid @ resid / max(n - 2, 1)
    se = np.sqrt(s2 / np.sum((np.log(x) - np.log(x).mean()) ** 2))
    return float(coef[0]), float(se)


def critical_exponents(
    line,
    mc: MulticriticalPoint | float,
    distances=None,
    side: str = "both",
    k0=None,
    n_samples: int = 200,
) -> ExponentFit:
    """Fit gamma and nu from OZ peaks at distances from a multicritical angle.

    Parameters
    ----------
    side : {"both", "+", "-"}
        ``"+"``/``"-"`` approach from above/below only. ``"both"`` uses the
        geometric mean of the two sides at every distance, which cancels
        the leading odd correction to scaling.
    k0 : float or callable, optional
        Peak momentum, or a function of ``theta1c`` returning it.

    Points beyond +-pi use the affine continuation of the line map, which
    is the same walk as the partner branch across the torus seam.
    """
    line = _line(line)
    theta_mc = mc.theta1 if isinstance(mc, MulticriticalPoint) else float(mc)
    if not any(abs(theta_mc - t) < 1e-9 for t in transition_angles(line)):
        raise NotATransitionError(f"theta1={theta_mc:.6f} hosts no gapless-gapless transition on {line.name}")
    if distances is None:
        distances = np.geomspace(1e-3, 1e-1, 20)
    distances = np.asarray(distances, dtype=float)
    if k0 is None:
        k0 = _default_k0(line, theta_mc)
    signs = {"both": (1.0, -1.0), "+": (1.0,), "-": (-1.0,)}[side]
    Fs, xis, r2 = [], [], []
    for x in distances:
        fpk, xx = [], []
        for s in signs:
            t = theta_mc + s * x
            kk = k0(t) if callable(k0) else float(k0)
            fit = measure_peak(line, t, kk, n_samples=n_samples)
            if not fit.is_peak:
                raise FitRejectedError(f"no peak at theta1c={t:.6g}, k0={kk:.6g}")
            fpk.append(abs(fit.F_peak))
            xx.append(fit.xi_c)
            r2.append(fit.r_squared)
        Fs.append(np.exp(np.mean(np.log(fpk))))
        xis.append(np.exp(np.mean(np.log(xx))))
    Fs = np.array(Fs)
    xis = np.array(xis)
    sg, eg = _slope(distances, Fs)
    sn, en = _slope(distances, xis)
    return ExponentFit(
        gamma=-sg,
        nu=-sn,
        fit_range=(float(distances.min()), float(distances.max())),
        slope_errors=(eg, en),
        side=side,
        distances=distances,
        F_peaks=Fs,
        xis=xis,
        min_r_squared=float(min(r2)),
    )


# --------------------------------------------------------------------------
# small-dk expansion at high-symmetry closings


@dataclass(frozen=True)
class ZetaCoefficients:
    """Expansion ``d2 ~ z1 dk^2``, ``d3 ~ z2 dk + z3 dk^3`` about k0.

    ``f_peak = -z1/z2`` is the exact limit of F at k0; ``xi_squared`` is the
    OZ width implied by the expansion, and ``xi_leading = |z1/z2|`` its
    leading term near a multicritical point.
    """

    zeta1: float
    zeta2: float
    zeta3: float
    k0: float
    f_peak: float
    xi_squared: float
    xi_leading: float


def analytic_oz_coefficients(line, theta1: float, k0: float) -> ZetaCoefficients:
    """Taylor coefficients of (d2, d3) about a high-symmetry momentum."""
    line = _line(line)
    if line.family is LineFamily.ORANGE_PURPLE_NHS:
        raise ValueError("expansion is defined on the high-symmetry lines only")
    if abs(k0) < 1e-12:
        sgn = 1.0
    elif abs(abs(k0) - PI) < 1e-12:
        sgn = -1.0
    else:
        raise ValueError("k0 must be 0 or +-pi")
    t2 = float(line.theta2(theta1))
    c2sq, s2sq = np.cos(t2) ** 2, np.sin(t2) ** 2
    s1, c1 = np.sin(theta1), np.cos(theta1)
    z1 = sgn * 0.5 * (9 * c2sq * s1 - s2sq * s1 + c1 * np.sin(2 * t2))
    z2 = sgn * (3 * c2sq - s2sq)
    z3 = sgn * (-27 * c2sq + s2sq) / 6.0
    return ZetaCoefficients(
        float(z1),
        float(z2),
        float(z3),
        float(k0),
        float(-z1 / z2),
        float(z1**2 / z2**2 + 3 * z3 / z2),
        float(abs(z1 / z2)),
    )


# --------------------------------------------------------------------------
# swapping of peak momenta near linear points


@dataclass(frozen=True)
class SwapReport:
    """Which family of momenta carries the diverging peaks.

    ``hs_magnitude``/``nhs_magnitude`` are the largest |F| within pi/6 of
    {0, pi} and elsewhere in the zone.
    """

    theta1c: float
    peaked_momenta: tuple[float, ...]
    suppressed_momenta: tuple[float, ...]
    peaked_family: str
    hs_magnitude: float
    nhs_magnitude: float
    threshold: float


def _near_hs(k):
    k = np.abs(np.asarray(k))
    return (k < PI / 6) | (k > 5 * PI / 6)


def swap_detector(mc: MulticriticalPoint, approach_line, epsilon: float, n_grid: int = 1 << 16) -> SwapReport:
    """Locate the diverging peaks at ``theta1 = theta1_mc + epsilon`` on a line.

    A peak counts as diverging when ``|F| >= 0.1 / epsilon``.
    """
    from .phase_topology import DispersionKind

    if mc.kind is not DispersionKind.LINEAR:
        raise ValueError("swapping is defined at linear multicritical points only")
    if not 1e-3 <= abs(epsilon) <= 1e-1:
        raise ValueError("epsilon must satisfy 1e-3 <= |epsilon| <= 1e-1")
    line = _line(approach_line)
    if abs(float(line.theta2(mc.theta1)) - mc.theta2) > 1e-9 and abs(
        abs(float(line.theta2(mc.theta1)) - mc.theta2) - PI
    ) > 1e-9:
        raise ValueError(f"{line.name} does not pass through {mc.angles.as_tuple()}")
    t = mc.theta1 + epsilon
    k = -PI + 2 * PI * (np.arange(n_grid) + 0.5) / n_grid
    f = np.abs(curvature_array(line, t, k))
    f[~np.isfinite(f)] = 0.0
    hs = _near_hs(k)
    thr = 0.1 / abs(epsilon)
    peaks = np.nonzero((f >= np.roll(f, 1)) & (f >= np.roll(f, -1)) & (f >= thr))[0]
    refined = sorted({round(peak_momentum(line, t, k[j], span=4 * PI / n_grid, n_grid=41), 9) for j in peaks})
    hs_mag = float(f[hs].max())
    nhs_mag = float(f[~hs].max())
    peaked_hs = [x for x in refined if _near_hs(x)]
    peaked_nhs = [x for x in refined if not _near_hs(x)]
    closings = [c.k for c in closing_momenta(mc.theta1, mc.theta2)]
    if peaked_nhs and not peaked_hs:
        family = "NHS"
        suppressed = tuple(c for c in closings if _near_hs(c))
    elif peaked_hs and not peaked_nhs:
        family = "HS"
        suppressed = tuple(c for c in closings if not _near_hs(c))
    else:
        family = "mixed" if refined else "none"
        suppressed = ()
    return SwapReport(t, tuple(refined), suppressed, family, hs_mag, nhs_mag, thr)
