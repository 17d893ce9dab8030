"""Acceptance suite: reproducibility checks for every headline result.

Each criterion returns ``(passed, detail)``; :func:`run` times them and
collects :class:`CriterionResult` records.
"""
from __future__ import annotations

import os
import tempfile
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import observables as obs
from . import rg_flow
from .criticality import (
    FitRejectedError,
    _default_k0,
    closed_form_curvature,
    critical_exponents,
    curvature_function,
    measure_peak,
    swap_detector,
)
from .phase_topology import (
    DispersionKind,
    LineFamily,
    critical_lines,
    dynamical_exponent,
    get_line,
    multicritical_points,
    phase_diagram,
)
from .walk_core import (
    alpha,
    bloch_components,
    chiral_check,
    gap_array,
    pauli_decompose,
    walk_unitary,
)

__all__ = ["Criterion", "CriterionResult", "CRITERIA", "run", "format_result"]

PI = np.pi
_SEED = 20240917


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    summary: str
    check: Callable[[], tuple[bool, str]]


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float


def _timed(limit: float, fn: Callable[[], tuple[bool, str]]) -> tuple[bool, str]:
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    within = dt < limit
    return ok and within, f"{detail}; {dt:.1f} s (limit {limit:.0f} s)"


# --------------------------------------------------------------------------
# 1. phase diagram


def _segment_points(line, lo, hi, n):
    t1 = np.linspace(lo, hi, n)
    return t1, np.asarray(line.theta2(t1), dtype=float)


def _distance_to_gapless_lines(t1, t2):
    best = np.full(t1.shape, np.inf)
    for line in critical_lines():
        for lo, hi in line.gapless_domains():
            p0 = np.array([lo, float(line.theta2(lo))])
            p1 = np.array([hi, float(line.theta2(hi))])
            seg = p1 - p0
            s = np.clip(((t1 - p0[0]) * seg[0] + (t2 - p0[1]) * seg[1]) / (seg @ seg), 0.0, 1.0)
            best = np.minimum(best, np.hypot(t1 - p0[0] - s * seg[0], t2 - p0[1] - s * seg[1]))
    return best


def check_phase_diagram(resolution: int = 201, k_grid: int = 4096) -> tuple[bool, str]:
    def body():
        pd = phase_diagram(resolution, k_grid, jobs=1)
        gapped = ~pd.gapless
        values = set(np.unique(pd.winding[gapped]).tolist())
        res = float(pd.residual()[gapped].max())
        h = pd.theta[1] - pd.theta[0]
        T1, T2 = np.meshgrid(pd.theta, pd.theta, indexing="ij")
        # gapless cells lie within one cell of a gapless line segment
        far = _distance_to_gapless_lines(T1[pd.gapless], T2[pd.gapless]) > np.sqrt(2) * h + 1e-12
        # every gapless line segment is covered within one cell
        missed = 0
        for line in critical_lines():
            for lo, hi in line.gapless_domains():
                t1, t2 = _segment_points(line, lo, hi, 4 * resolution)
                i = np.clip(np.rint((t1 + PI) / h).astype(int), 0, resolution - 1)
                j = np.clip(np.rint((t2 + PI) / h).astype(int), 0, resolution - 1)
                for a, b in zip(i, j):
                    blk = pd.gapless[max(a - 1, 0) : a + 2, max(b - 1, 0) : b + 2]
                    missed += int(not blk.any())
        ok = values <= {-3, -1, 1, 3} and res < 1e-3 and not far.any() and missed == 0
        return ok, (
            f"w values {sorted(values)}, max |w_raw - w| {res:.1e}, "
            f"{int(pd.gapless.sum())} gapless cells, {int(far.sum())} off-line, {missed} uncovered line points"
        )

    return _timed(60.0, body)


# --------------------------------------------------------------------------
# 2. multicritical catalog


_QUADRATIC = {
    (-2 * PI / 3, -2 * PI / 3),
    (-2 * PI / 3, PI / 3),
    (-PI / 3, -PI / 3),
    (-PI / 3, 2 * PI / 3),
    (PI / 3, -2 * PI / 3),
    (PI / 3, PI / 3),
    (2 * PI / 3, -PI / 3),
    (2 * PI / 3, 2 * PI / 3),
}
_LINEAR = {(0.0, 0.0), (PI, 0.0), (-PI, 0.0), (0.0, PI), (0.0, -PI)}


def _same_set(found, expected, tol=1e-9):
    found = list(found)
    return len(found) == len(expected) and all(
        any(abs(a - x) < tol and abs(b - y) < tol for a, b in found) for x, y in expected
    )


def check_multicritical() -> tuple[bool, str]:
    def body():
        mcs = multicritical_points()
        quad = [m for m in mcs if m.kind is DispersionKind.QUADRATIC]
        lin = [m for m in mcs if m.kind is DispersionKind.LINEAR]
        zq = [dynamical_exponent(m) for m in quad]
        zl = [dynamical_exponent(m) for m in lin]
        ok = (
            _same_set((m.angles.as_tuple() for m in quad), _QUADRATIC)
            and _same_set((m.angles.as_tuple() for m in lin), _LINEAR)
            and all(abs(z - 2) < 0.1 for z in zq)
            and all(abs(z - 1) < 0.05 for z in zl)
        )
        return ok, (
            f"{len(quad)} quadratic (z {min(zq):.4f}..{max(zq):.4f}), "
            f"{len(lin)} linear (z {min(zl):.4f}..{max(zl):.4f})"
        )

    return _timed(10.0, body)


# --------------------------------------------------------------------------
# 3. exponents, 4. sign flip


_EXPONENT_TARGETS = (
    ("red2", 2 * PI / 3),
    ("red2", -2 * PI / 3),
    ("blue1", PI / 3),
    ("blue1", -PI / 3),
    ("op1", 0.0),
)

_TRANSITION_POINTS = _EXPONENT_TARGETS + (("red2", 0.0), ("blue1", PI))


def check_exponents() -> tuple[bool, str]:
    def body():
        parts, ok = [], True
        for name, mc in _EXPONENT_TARGETS:
            fit = critical_exponents(name, mc, np.geomspace(1e-3, 1e-1, 20))
            good = 0.95 <= fit.gamma <= 1.05 and 0.95 <= fit.nu <= 1.05 and abs(fit.gamma - fit.nu) < 0.05
            ok &= good
            parts.append(f"{name}@{mc:+.3f}: g={fit.gamma:.4f} n={fit.nu:.4f}")
        return ok, ", ".join(parts)

    return _timed(30.0, body)


def _signed_peak(line, t, k0):
    kk = k0(t) if callable(k0) else k0
    return measure_peak(line, t, kk).F_peak


def check_sign_flip() -> tuple[bool, str]:
    def body():
        parts, ok = [], True
        for name, mc in _TRANSITION_POINTS:
            line = get_line(name)
            k0 = _default_k0(line, mc)
            f = {(s, d): _signed_peak(line, mc + s * d, k0) for s in (1, -1) for d in (1e-3, 1e-1)}
            flip = np.sign(f[1, 1e-3]) != np.sign(f[-1, 1e-3]) and np.sign(f[1, 1e-1]) != np.sign(f[-1, 1e-1])
            ratio = min(abs(f[s, 1e-3]) / abs(f[s, 1e-1]) for s in (1, -1))
            ok &= bool(flip) and ratio >= 10
            parts.append(f"{name}@{mc:+.3f}: flip={bool(flip)} ratio={ratio:.0f}")
        return ok, ", ".join(parts)

    return _timed(10.0, body)


# --------------------------------------------------------------------------
# 5. swapping


def check_swapping() -> tuple[bool, str]:
    ok, n, worst = True, 0, 0.0
    for mc in multicritical_points():
        if mc.kind is not DispersionKind.LINEAR:
            continue
        for name in mc.parent_lines:
            hs_line = get_line(name).family is not LineFamily.ORANGE_PURPLE_NHS
            for eps in (1e-3, -1e-3):
                rep = swap_detector(mc, name, eps)
                want = "NHS" if hs_line else "HS"
                suppressed = rep.hs_magnitude if hs_line else rep.nhs_magnitude
                worst = max(worst, suppressed)
                ok &= rep.peaked_family == want and suppressed < 1e2
                n += 1
    return ok, f"{n} approaches, largest suppressed-family |F| {worst:.2e}"


# --------------------------------------------------------------------------
# 6. RG flow


_RG_EXPECTED = {
    LineFamily.RED_HS: ((0.0, PI / 2, -PI / 2, PI, -PI), (2 * PI / 3, -2 * PI / 3)),
    LineFamily.BLUE_HS: ((0.0, PI / 2, -PI / 2, PI, -PI), (PI / 3, -PI / 3)),
    LineFamily.ORANGE_PURPLE_NHS: ((PI / 2, -PI / 2), (0.0, PI, -PI)),
}


# quadratic points on the orange/purple lines close the gap at k0 = 0 or pi
_GAPLESS_AT_K0 = {LineFamily.ORANGE_PURPLE_NHS: (PI / 3, -PI / 3, 2 * PI / 3, -2 * PI / 3)}


def rg_agreement(family, n: int = 400, exclusion: float = 0.05) -> float:
    """Worst relative numeric/closed-form disagreement away from zeros and poles."""
    family = LineFamily(family)
    fixed, poles = _RG_EXPECTED[family]
    special = np.array(fixed + poles + _GAPLESS_AT_K0.get(family, ()))
    worst = 0.0
    for t in -PI + 2 * PI * (np.arange(n) + 0.5) / n:
        if np.min(np.abs(t - special)) < exclusion:
            continue
        closed = rg_flow.rg_rhs_closed(family, t)
        num = rg_flow.rg_rhs_numeric(family, t)
        worst = max(worst, abs(num - closed) / abs(closed))
    return worst


def check_rg_flow() -> tuple[bool, str]:
    def body():
        ok, parts = True, []
        for family, (fixed, poles) in _RG_EXPECTED.items():
            pts = rg_flow.classify_flow_points(family)
            good = _same_set(((x, 0.0) for x in pts.fixed), {(x, 0.0) for x in fixed}, 1e-6) and _same_set(
                ((x, 0.0) for x in pts.unstable), {(x, 0.0) for x in poles}, 1e-6
            )
            err = rg_agreement(family)
            ok &= good and err < 1e-4
            parts.append(f"{family.value}: points ok={good}, rel err {err:.1e}")
        return ok, ", ".join(parts)

    return _timed(10.0, body)


# --------------------------------------------------------------------------
# 7. Wannier correlations


def _decay_lengths(name, mc, sign):
    out = []
    for off in (0.1, 0.3):
        fit = measure_peak(name, mc + sign * off, _k0_at(name, mc))
        out.append(fit.xi_c if fit.is_peak else np.nan)
    return out


def _k0_at(name, mc):
    line = get_line(name)
    if line.family is LineFamily.BLUE_HS and abs(abs(mc) - PI / 3) < 1e-9:
        return PI
    return 0.0


def wannier_consistency(name, theta1c, k0, n_points: int = 12) -> float:
    """Largest relative gap between the numeric transform and the closed form."""
    series = obs.wannier_correlation(name, theta1c, k0)
    xi = series.xi_c
    rs = np.unique(np.rint(np.linspace(xi / 2, 3 * xi, n_points)).astype(int))
    worst = 0.0
    for r in rs:
        num = obs.wannier_correlation_numeric(name, theta1c, int(r), k0=k0)
        ana = series.lambda_values[r]
        worst = max(worst, abs(num - ana) / abs(ana))
    return worst


def check_wannier() -> tuple[bool, str]:
    parts, ok = [], True
    for name, mc in (("red2", 2 * PI / 3), ("red2", -2 * PI / 3), ("blue1", PI / 3), ("blue1", -PI / 3)):
        for sign in (1, -1):
            x1, x3 = _decay_lengths(name, mc, sign)
            good = bool(x1 > x3)
            ok &= good
        parts.append(f"quadratic {name}@{mc:+.3f}: xi(0.1)={x1:.3g} > xi(0.3)={x3:.3g}")
    for name, mc in (("red2", 0.0), ("blue1", PI)):
        x1, x3 = _decay_lengths(name, mc, -1)
        good = bool(x1 < x3)  # NaN (no decay length) fails
        ok &= good
        lo = [obs.wannier_correlation(name, mc - off, _k0_at(name, mc), 1, xi_source="leading_order").xi_c for off in (0.1, 0.3)]
        parts.append(
            f"linear {name}@{mc:+.3f}: fitted xi(0.1)={x1:.3g}, xi(0.3)={x3:.3g} "
            f"(leading-order {lo[0]:.3g} < {lo[1]:.3g})"
        )
    worst = 0.0
    for name, t, k0 in (
        ("red2", 2 * PI / 3 - 0.005, 0.0),
        ("red2", -2 * PI / 3 + 0.005, 0.0),
        ("blue1", PI / 3 + 0.005, PI),
        ("blue1", -PI / 3 - 0.005, PI),
        ("op1", 0.01, 0.0),
        ("op1", -0.01, 0.0),
    ):
        worst = max(worst, wannier_consistency(name, t, k0))
    ok &= worst < 0.1
    parts.append(f"transform vs closed form {worst:.1%}")
    return ok, "; ".join(parts)


# --------------------------------------------------------------------------
# 8. group velocity


_FIXED_ANGLES = (0.0, PI / 2, -PI / 2, PI, -PI)


def check_velocity() -> tuple[bool, str]:
    ok = True
    lin_err = quad_err = v0 = pc = 0.0
    for mc in multicritical_points():
        prof = obs.velocity_profile(mc.angles, 4096)
        if mc.kind is DispersionKind.LINEAR:
            lin_err = max(lin_err, abs(prof.span[0] + 3), abs(prof.span[1] - 3))
        else:
            quad_err = max(quad_err, abs(prof.span[0] + 1.5) / 1.5, abs(prof.span[1] - 1.5) / 1.5)
            for c in mc.gap_closing_momenta:
                # v vanishes linearly; 1e-3 is the closest probe with 1 - d0^2 > 1e-14
                v = obs.group_velocity(mc.angles, np.array([c.k - 1e-3, c.k + 1e-3]))
                v0 = max(v0, float(np.max(np.abs(v))))
    for line in critical_lines():
        for t in _FIXED_ANGLES:
            if line.contains(t):
                pc = max(pc, obs.velocity_profile(line.angles(t), 4096).piecewise_constant_deviation())
    ok = lin_err < 1e-3 and quad_err < 0.05 and v0 < 1e-2 and pc < 1e-6
    return ok, (
        f"linear span err {lin_err:.1e}, quadratic span rel err {quad_err:.1e}, "
        f"|v| next to quadratic closings {v0:.1e}, fixed-point deviation {pc:.1e}"
    )


# --------------------------------------------------------------------------
# 9. gapless winding


def _sweep_wc(line, n, delta=1e-2):
    lo, hi = line.theta1_domain
    ts = lo + (hi - lo) * (np.arange(n) + 0.5) / n
    out = []
    for t in ts:
        try:
            out.append(obs.critical_winding(line, t, delta).w_c)
        except obs.GappedInputError:
            out.append(None)
    return ts, out


def _jumps(ts, ws):
    pts = []
    for a, b, wa, wb in zip(ts[:-1], ts[1:], ws[:-1], ws[1:]):
        if wa is not None and wb is not None and wa != wb:
            pts.append((a, b))
    return pts


def _jumps_at(jumps, expected):
    return len(jumps) == len(expected) and all(any(a < x < b for a, b in jumps) for x in expected)


def check_gapless_winding(n: int = 600) -> tuple[bool, str]:
    ok, parts = True, []
    red = get_line("red2")
    ts, ws = _sweep_wc(red, n)
    mags = []
    for lo, hi in ((-PI, -2 * PI / 3), (-2 * PI / 3, 0), (0, 2 * PI / 3), (2 * PI / 3, PI)):
        seg = {abs(w) for t, w in zip(ts, ws) if lo < t < hi}
        mags.append(seg.pop() if len(seg) == 1 else None)
    good = mags == [0, 2, 2, 0] and _jumps_at(_jumps(ts, ws), (-2 * PI / 3, 0.0, 2 * PI / 3))
    ok &= good
    sign = [ws[np.searchsorted(ts, -1.0)], ws[np.searchsorted(ts, 1.0)]]
    parts.append(f"red |w_c| plateaus {mags}, w_c at -1/+1 = {sign}")
    blue = get_line("blue1")
    ts, ws = _sweep_wc(blue, n)
    jumps = _jumps(ts, ws)
    seam = ws[0] != ws[-1] and {abs(ws[0]), abs(ws[-1])} == {2}
    good = _jumps_at(jumps, (-PI / 3, PI / 3)) and seam and set(map(abs, ws)) == {0, 2}
    ok &= good
    parts.append(f"blue jumps {[round(float(a + b) / 2, 3) for a, b in jumps]} + seam flip {seam}")
    op_vals = set()
    for name in ("op1", "op2", "op3"):
        _, ws = _sweep_wc(get_line(name), n // 3)
        op_vals |= {abs(w) for w in ws if w is not None}
    ok &= op_vals == {1}
    parts.append(f"orange/purple |w_c| {sorted(op_vals)}")
    drift = 0.0
    for line in (red, blue, get_line("op1")):
        for t in np.linspace(-PI, PI, 41)[1:-1]:
            lo_mc = min(abs(t - m) for m in (-PI, -2 * PI / 3, -PI / 3, 0.0, PI / 3, 2 * PI / 3, PI))
            if lo_mc < 0.05 or not line.in_gapless_domain(t):
                continue
            for d in (1e-2, 5e-3, 2e-3):
                a = obs.critical_winding(line, t, d).w_c_raw
                b = obs.critical_winding(line, t, d / 2).w_c_raw
                drift = max(drift, abs(a - b))
    ok &= drift < 1e-2
    parts.append(f"delta-halving drift {drift:.1e}")
    return ok, "; ".join(parts)


# --------------------------------------------------------------------------
# 10. property suites


def check_properties() -> tuple[bool, str]:
    rng = np.random.default_rng(_SEED)
    t1, t2, k = rng.uniform(-PI, PI, (3, 10_000))
    d0, d2, d3 = bloch_components(t1, t2, k)
    unit = float(np.max(np.abs(d0**2 + d2**2 + d3**2 - 1)))
    alpha_dev = mat = chiral = 0.0
    for a, b, q in zip(t1[:1000], t2[:1000], k[:1000]):
        alpha_dev = max(alpha_dev, abs(float(alpha((a, b), q)) - float(bloch_components(a, b, q)[0])))
    for a, b, q in zip(t1[:300], t2[:300], k[:300]):
        c = pauli_decompose(walk_unitary((a, b), q))
        mat = max(mat, float(np.max(np.abs(c - np.array(_components(a, b, q))))))
        if gap_array(a, b, q) > 1e-6:
            chiral = max(chiral, chiral_check((a, b), q))
    curv = 0.0
    for name in ("red2", "blue1", "op1"):
        line = get_line(name)
        ts = rng.uniform(-PI, PI, 200)
        ks = rng.uniform(-PI, PI, 200)
        for t, q in zip(ts, ks):
            if gap_array(t, float(line.theta2(t)), q) < 1e-3:
                continue
            direct = curvature_function(line, t, q)
            closed = float(closed_form_curvature(line.family, t, q))
            curv = max(curv, abs(direct - closed) / max(1.0, abs(direct)))
    va = 0.0
    for a, b, q in zip(t1[:300], t2[:300], k[:300]):
        if gap_array(a, b, q) > 1e-6:
            va = max(va, abs(obs.group_velocity((a, b), q, "plus") + obs.group_velocity((a, b), q, "minus")))
    det = _cli_deterministic()
    ok = unit < 1e-12 and chiral < 1e-10 and alpha_dev < 1e-12 and mat < 1e-12 and curv < 1e-9 and va == 0.0 and det
    return ok, (
        f"unitarity {unit:.1e}, chiral {chiral:.1e}, alpha {alpha_dev:.1e}, matrix {mat:.1e}, "
        f"curvature {curv:.1e}, band antisymmetry {va:.1e}, CLI deterministic {det}"
    )


def _components(a, b, q):
    d0, d2, d3 = bloch_components(a, b, q)
    return (d0, 0.0, d2, d3)


def _cli_deterministic() -> bool:
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        blobs = []
        for run_id in range(2):
            out = os.path.join(tmp, f"pd{run_id}.csv")
            code = main(["phase-diagram", "--resolution", "41", "--k-grid", "512", "--output", out, "--jobs", str(1 + run_id)])
            if code != 0:
                return False
            with open(out, "rb") as fh:
                blobs.append(fh.read())
        return blobs[0] == blobs[1]


# --------------------------------------------------------------------------


CRITERIA: tuple[Criterion, ...] = (
    Criterion(1, "phase_diagram", "201x201 grid: gapped w in {-3,-1,1,3}, gapless set on the eight lines", check_phase_diagram),
    Criterion(2, "multicritical", "8 quadratic (z=2) and 5 linear (z=1) intersection points", check_multicritical),
    Criterion(3, "exponents", "gamma, nu in [0.95, 1.05] and |gamma - nu| < 0.05", check_exponents),
    Criterion(4, "sign_flip", "F_peak flips sign across transitions and grows >= 10x", check_sign_flip),
    Criterion(5, "swapping", "peaks swap between HS and NHS momenta at linear points", check_swapping),
    Criterion(6, "rg_flow", "closed/numeric flow agree; fixed and unstable points located", check_rg_flow),
    Criterion(7, "wannier", "decay-length ordering and transform vs closed form within 10%", check_wannier),
    Criterion(8, "velocity", "velocity spans, zeros and piecewise-constant profiles", check_velocity),
    Criterion(9, "gapless_winding", "w_c plateaus, transitions and delta stability", check_gapless_winding),
    Criterion(10, "properties", "unitarity, chirality, decompositions, antisymmetry, determinism", check_properties),
)


def _select(only):
    if not only:
        return CRITERIA
    keys = {str(x).strip().lower().replace("-", "_") for x in only}
    chosen = tuple(c for c in CRITERIA if c.name in keys or str(c.number) in keys)
    unknown = keys - {c.name for c in chosen} - {str(c.number) for c in chosen}
    if unknown:
        raise KeyError(f"unknown criteria: {sorted(unknown)}")
    return chosen


def run(only=None) -> list[CriterionResult]:
    """Run the selected criteria (all by default) in order."""
    results = []
    for c in _select(only):
        t0 = time.perf_counter()
        try:
            passed, detail = c.check()
        except (FitRejectedError, ArithmeticError, ValueError) as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CriterionResult(c.number, c.name, bool(passed), detail, time.perf_counter() - t0))
    return results


def format_result(r: CriterionResult) -> str:
    return f"[{'PASS' if r.passed else 'FAIL'}] {r.number:2d} {r.name}: {r.detail}"
