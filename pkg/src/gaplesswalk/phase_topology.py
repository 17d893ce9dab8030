"""Winding numbers, the gapped phase diagram, critical lines and multicritical points."""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import kernels
from .walk_core import CoinAngles, bloch_components, bloch_derivatives, gap_array, wrap_angle

__all__ = [
    "LineFamily",
    "DispersionKind",
    "CriticalLine",
    "GapClosing",
    "MulticriticalPoint",
    "WindingResult",
    "PhaseDiagram",
    "DispersionFit",
    "GaplessInputError",
    "PoorFitError",
    "critical_lines",
    "get_line",
    "winding_number",
    "phase_diagram",
    "closing_momenta",
    "gap_closing_momenta",
    "multicritical_points",
    "find_multicritical",
    "dispersion_fits",
    "dynamical_exponent",
]

PI = np.pi

_HS_MERGE = 1e-4
_DEDUP_TOL = 1e-6


class GaplessInputError(ValueError):
    """The requested quantity needs a gapped spectrum."""


class PoorFitError(RuntimeError):
    """A log-log or least-squares fit fell below its quality threshold."""


class LineFamily(str, Enum):
    RED_HS = "red"
    BLUE_HS = "blue"
    ORANGE_PURPLE_NHS = "orange_purple"


class DispersionKind(str, Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"


# |theta1| ranges on which the orange/purple lines stay gapless
_OP_GAPLESS = ((-PI, -2 * PI / 3), (-PI / 3, PI / 3), (2 * PI / 3, PI))


@dataclass(frozen=True)
class CriticalLine:
    """Straight critical line ``theta2 = slope * theta1 + intercept``."""

    name: str
    family: LineFamily
    branch_id: int
    slope: float
    intercept: float
    theta1_domain: tuple[float, float]

    def theta2(self, theta1):
        return self.slope * np.asarray(theta1, dtype=float) + self.intercept

    def angles(self, theta1c: float) -> CoinAngles:
        return CoinAngles(theta1c, float(self.theta2(theta1c)))

    def contains(self, theta1, tol: float = 1e-12) -> bool:
        lo, hi = self.theta1_domain
        return lo - tol <= theta1 <= hi + tol

    def gapless_domains(self) -> list[tuple[float, float]]:
        lo, hi = self.theta1_domain
        if self.family is not LineFamily.ORANGE_PURPLE_NHS:
            return [(lo, hi)]
        out = []
        for a, b in _OP_GAPLESS:
            a, b = max(a, lo), min(b, hi)
            if b > a:
                out.append((a, b))
        return out

    def in_gapless_domain(self, theta1c: float, tol: float = 1e-12) -> bool:
        return any(a - tol <= theta1c <= b + tol for a, b in self.gapless_domains())

    @property
    def hs_momentum(self) -> float | None:
        """High-symmetry closing momentum at E = 0 (red) or E = pi (blue) side."""
        if self.family is LineFamily.RED_HS:
            return 0.0
        if self.family is LineFamily.BLUE_HS:
            return PI
        return None


_LINES = (
    CriticalLine("red1", LineFamily.RED_HS, 1, -0.5, PI, (0.0, PI)),
    CriticalLine("red2", LineFamily.RED_HS, 2, -0.5, 0.0, (-PI, PI)),
    CriticalLine("red3", LineFamily.RED_HS, 3, -0.5, -PI, (-PI, 0.0)),
    CriticalLine("blue1", LineFamily.BLUE_HS, 1, -0.5, PI / 2, (-PI, PI)),
    CriticalLine("blue2", LineFamily.BLUE_HS, 2, -0.5, -PI / 2, (-PI, PI)),
    CriticalLine("op1", LineFamily.ORANGE_PURPLE_NHS, 1, 1.0, 0.0, (-PI, PI)),
    CriticalLine("op2", LineFamily.ORANGE_PURPLE_NHS, 2, 1.0, PI, (-PI, 0.0)),
    CriticalLine("op3", LineFamily.ORANGE_PURPLE_NHS, 3, 1.0, -PI, (0.0, PI)),
)


def critical_lines() -> list[CriticalLine]:
    """The eight critical lines of the (theta1, theta2) torus."""
    return list(_LINES)


def get_line(name: str) -> CriticalLine:
    for line in _LINES:
        if line.name == name:
            return line
    raise KeyError(f"unknown critical line {name!r}; expected one of {[l.name for l in _LINES]}")


# --------------------------------------------------------------------------
# winding number and phase diagram


@dataclass(frozen=True)
class WindingResult:
    w_raw: float
    w: int
    residual: float
    grid_size: int
    min_gap: float


def winding_number(angles, n_grid: int = 4096) -> WindingResult:
    """Winding of (d2, d3) around the origin over the Brillouin zone."""
    a = angles if isinstance(angles, CoinAngles) else CoinAngles(*angles)
    w_raw, g = kernels.winding_and_gap(np.array([a.theta1]), np.array([a.theta2]), int(n_grid))
    if g[0] < 1e-6:
        raise GaplessInputError(f"min gap {g[0]:.2e} at {a.as_tuple()}; use critical_winding")
    w = int(np.rint(w_raw[0]))
    return WindingResult(float(w_raw[0]), w, float(abs(w_raw[0] - w)), int(n_grid), float(g[0]))


@dataclass(frozen=True)
class PhaseDiagram:
    """Winding data on a square grid; arrays are indexed ``[i1, i2]``."""

    theta: np.ndarray
    w_raw: np.ndarray
    min_gap: np.ndarray
    gapless: np.ndarray
    winding: np.ndarray
    line_id: np.ndarray
    k_grid: int
    gap_threshold: float
    n_interface_flags: int = field(default=0)

    @property
    def resolution(self) -> int:
        return self.theta.size

    def residual(self) -> np.ndarray:
        return np.abs(self.w_raw - np.rint(self.w_raw))


def _sweep_chunk(args):
    t1, t2, k_grid = args
    return kernels.winding_and_gap(t1, t2, k_grid)


def _sweep(t1, t2, k_grid, jobs):
    if jobs <= 1:
        return kernels.winding_and_gap(t1, t2, k_grid)
    chunks = np.array_split(np.arange(t1.size), jobs * 4)
    tasks = [(t1[c], t2[c], k_grid) for c in chunks]
    w_raw = np.empty(t1.size)
    gap = np.empty(t1.size)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for c, (w, g) in zip(chunks, pool.map(_sweep_chunk, tasks)):
            w_raw[c] = w
            gap[c] = g
    return w_raw, gap


def nearest_line_ids(t1, t2) -> np.ndarray:
    """Name of the closest critical-line segment to each point."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    dists = []
    for line in _LINES:
        lo, hi = line.theta1_domain
        p0 = np.array([lo, line.theta2(lo)])
        p1 = np.array([hi, line.theta2(hi)])
        seg = p1 - p0
        s = ((t1 - p0[0]) * seg[0] + (t2 - p0[1]) * seg[1]) / (seg @ seg)
        s = np.clip(s, 0.0, 1.0)
        dists.append(np.hypot(t1 - p0[0] - s * seg[0], t2 - p0[1] - s * seg[1]))
    names = np.array([l.name for l in _LINES])
    return names[np.argmin(np.stack(dists), axis=0)]


def _flag_interfaces(w, gapless, gap):
    """Flag the lower-gap cell of every gapped 4-neighbour pair with differing w."""
    n_added = 0
    while True:
        added = 0
        for axis in (0, 1):
            a = [slice(None)] * 2
            b = [slice(None)] * 2
            a[axis] = slice(None, -1)
            b[axis] = slice(1, None)
            a, b = tuple(a), tuple(b)
            bad = (~gapless[a]) & (~gapless[b]) & (w[a] != w[b])
            if not bad.any():
                continue
            pick_a = bad & (gap[a] <= gap[b])
            pick_b = bad & ~(gap[a] <= gap[b])
            gapless[a] |= pick_a
            gapless[b] |= pick_b
            added += int(pick_a.sum() + pick_b.sum())
        n_added += added
        if added == 0:
            return n_added


def phase_diagram(
    resolution: int = 201,
    k_grid: int = 4096,
    jobs: int = 1,
    gap_threshold: float | None = None,
) -> PhaseDiagram:
    """Winding number or gapless flag on a ``resolution x resolution`` grid.

    Cells with min-gap below ``gap_threshold`` (default half a grid spacing)
    are gapless. Where two neighbouring gapped cells still disagree in w,
    the one with the smaller gap is also flagged, so w only changes across
    gapless cells.
    """
    if resolution < 11:
        raise ValueError("resolution must be >= 11")
    if k_grid < 16:
        raise ValueError("k_grid must be >= 16")
    theta = np.linspace(-PI, PI, int(resolution))
    h = theta[1] - theta[0]
    thr = 0.5 * h if gap_threshold is None else float(gap_threshold)
    T1, T2 = np.meshgrid(theta, theta, indexing="ij")
    w_raw, gap = _sweep(T1.ravel(), T2.ravel(), int(k_grid), int(jobs))
    w_raw = w_raw.reshape(T1.shape)
    gap = gap.reshape(T1.shape)
    w = np.rint(w_raw).astype(int)
    gapless = gap < thr
    n_added = _flag_interfaces(w, gapless, gap)
    winding = np.where(gapless, 0, w)
    ids = nearest_line_ids(T1, T2)
    return PhaseDiagram(theta, w_raw, gap, gapless, winding, ids, int(k_grid), thr, n_added)


# --------------------------------------------------------------------------
# gap closings


@dataclass(frozen=True)
class GapClosing:
    """A momentum where |d0| = 1; ``energy`` is 0 or pi."""

    k: float
    kind: str  # "HS" or "NHS"
    energy: float
    gap: float


def _r_abs(t1, t2, k):
    _, d2, d3 = bloch_components(t1, t2, k)
    return float(np.hypot(d2, d3))


def closing_momenta(theta1: float, theta2: float, tol: float = 1e-8, n_scan: int = 4096) -> list[GapClosing]:
    """All k in (-pi, pi] where the gap closes.

    Local minima of |(d2, d3)| on a scan grid are refined as roots of d0'.

    High-symmetry closings are tested exactly at 0 and pi (-pi is reported
    as pi); refined minima within 1e-4 of a closed high-symmetry momentum
    are merged into it.
    """
    k = -PI + 2 * PI * np.arange(n_scan) / n_scan
    _, d2, d3 = bloch_components(theta1, theta2, k)
    r = np.hypot(d2, d3)
    step = 2 * PI / n_scan
    cand = np.nonzero((r <= np.roll(r, 1)) & (r <= np.roll(r, -1)))[0]
    found: list[float] = []
    for j in cand:
        # a minimum of r well above the reachable slope*step cannot be a zero
        if r[j] > 3.5 * step:
            continue
        lo, hi = k[j] - step, k[j] + step
        dlo, dhi = (float(bloch_derivatives(theta1, theta2, x)[0]) for x in (lo, hi))
        if dlo * dhi < 0:
            # |d0| = 1 is an extremum of d0, so d0' has a simple sign change there
            found.append(brentq(lambda x: float(bloch_derivatives(theta1, theta2, x)[0]), lo, hi, xtol=1e-15))
        else:
            res = minimize_scalar(
                lambda x: _r_abs(theta1, theta2, x), bounds=(lo, hi), method="bounded", options={"xatol": 1e-13}
            )
            found.append(float(res.x))
    out: list[GapClosing] = []
    hs_closed = []
    for hs in (0.0, PI):
        g = float(gap_array(theta1, theta2, hs))
        if g < tol:
            d0, _, _ = bloch_components(theta1, theta2, hs)
            out.append(GapClosing(hs, "HS", 0.0 if d0 > 0 else PI, g))
            hs_closed.append(hs)
    for kk in found:
        kk = float(wrap_angle(kk))
        if kk <= -PI + _HS_MERGE:
            kk += 2 * PI
        # flat (quartic) touchings at 0 or pi refine only to ~1e-5
        if any(abs(kk - hs) < _HS_MERGE for hs in hs_closed):
            continue
        g = float(gap_array(theta1, theta2, kk))
        if g >= tol or any(abs(kk - c.k) < _DEDUP_TOL for c in out):
            continue
        d0, _, _ = bloch_components(theta1, theta2, kk)
        out.append(GapClosing(kk, "NHS", 0.0 if d0 > 0 else PI, g))
    out.sort(key=lambda c: c.k)
    return out


def gap_closing_momenta(line: CriticalLine, theta1c: float, tol: float = 1e-8) -> list[GapClosing]:
    """Gap-closing momenta on ``line`` at ``theta1c``; empty in gapped sub-domains."""
    if not line.contains(theta1c):
        raise ValueError(f"theta1c={theta1c} outside the domain of {line.name}")
    return closing_momenta(theta1c, float(line.theta2(theta1c)), tol)


# --------------------------------------------------------------------------
# multicritical points and dispersion


@dataclass(frozen=True)
class MulticriticalPoint:
    angles: CoinAngles
    kind: DispersionKind
    parent_lines: tuple[str, str]
    gap_closing_momenta: tuple[GapClosing, ...]

    @property
    def theta1(self) -> float:
        return self.angles.theta1

    @property
    def theta2(self) -> float:
        return self.angles.theta2


def _intersections():
    pts: list[tuple[float, float, list[str]]] = []
    for la, lb in itertools.combinations(_LINES, 2):
        if np.isclose(la.slope, lb.slope):
            continue
        t1 = (lb.intercept - la.intercept) / (la.slope - lb.slope)
        if not (la.contains(t1, 1e-9) and lb.contains(t1, 1e-9)):
            continue
        t2 = float(la.theta2(t1))
        for p in pts:
            if abs(p[0] - t1) < 1e-9 and abs(p[1] - t2) < 1e-9:
                p[2].extend(n for n in (la.name, lb.name) if n not in p[2])
                break
        else:
            pts.append((float(t1) + 0.0, t2 + 0.0, [la.name, lb.name]))
    return pts


def multicritical_points() -> list[MulticriticalPoint]:
    """Pairwise intersections of the critical lines, classified by dispersion.

    A point is linear when some closing sits at a non-high-symmetry
    momentum, quadratic when all closings are at 0 or pi.
    """
    out = []
    for t1, t2, names in _intersections():
        closings = tuple(closing_momenta(t1, t2))
        kind = DispersionKind.LINEAR if any(c.kind == "NHS" for c in closings) else DispersionKind.QUADRATIC
        out.append(MulticriticalPoint(CoinAngles(t1, t2), kind, tuple(names), closings))
    out.sort(key=lambda m: (m.kind.value, m.theta1, m.theta2))
    return out


def find_multicritical(theta1: float, theta2: float, tol: float = 1e-9) -> MulticriticalPoint:
    for mc in multicritical_points():
        if abs(mc.theta1 - theta1) < tol and abs(mc.theta2 - theta2) < tol:
            return mc
    raise KeyError(f"no multicritical point at ({theta1}, {theta2})")


@dataclass(frozen=True)
class DispersionFit:
    k0: float
    z: float
    r_squared: float


def dispersion_fits(mc: MulticriticalPoint, fit_window: float = 0.05, n_samples: int = 50) -> list[DispersionFit]:
    """Log-log slope of E(k0 + dk) - E(k0) at each closing momentum of ``mc``."""
    if not 0 < fit_window <= 0.1:
        raise ValueError("fit_window must lie in (0, 0.1]")
    t1, t2 = mc.theta1, mc.theta2
    dk = np.geomspace(fit_window * 1e-3, fit_window, n_samples)
    x = np.log(dk)
    fits = []
    for c in mc.gap_closing_momenta:
        g0 = float(gap_array(t1, t2, c.k))
        slopes, r2s = [], []
        for sign in (1.0, -1.0):
            y = np.log(gap_array(t1, t2, c.k + sign * dk) - g0)
            A = np.vstack([x, np.ones_like(x)]).T
            coef, *_ = np.linalg.lstsq(A, y, rcond=None)
            resid = y - A @ coef
            r2s.append(1.0 - resid @ resid / np.sum((y - y.mean()) ** 2))
            slopes.append(coef[0])
        fits.append(DispersionFit(c.k, float(np.mean(slopes)), float(min(r2s))))
    return fits


def dynamical_exponent(mc: MulticriticalPoint, fit_window: float = 0.05, n_samples: int = 50) -> float:
    """Dynamical exponent z (``E ~ |dk|^z``) averaged over the closings of ``mc``."""
    fits = dispersion_fits(mc, fit_window, n_samples)
    worst = min(f.r_squared for f in fits)
    if worst < 0.99:
        raise PoorFitError(f"dispersion fit r^2 = {worst:.4f} < 0.99")
    return float(np.mean([f.z for f in fits]))
