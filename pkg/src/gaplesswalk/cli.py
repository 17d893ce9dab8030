"""Command-line driver: sweeps, figure data and the acceptance runner.

Every data command writes one table (CSV or JSON records) plus a JSON
manifest ``<stem>.manifest.json`` listing the config, outputs and status.

Config files hold ``key = value`` lines; keys are flag names without the
leading dashes (``k-grid`` and ``k_grid`` are both accepted), ``#`` starts
a comment. Flags given on the command line override the file.

Exit codes: 0 ok, 1 acceptance failure, 2 config error, 3 I/O error,
4 fit failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, acceptance
from . import observables as obs
from . import rg_flow
from .criticality import FitRejectedError, critical_exponents, measure_peak, transition_angles
from .phase_topology import (
    LineFamily,
    PoorFitError,
    critical_lines,
    dynamical_exponent,
    find_multicritical,
    gap_closing_momenta,
    get_line,
    phase_diagram,
)

EXIT_OK, EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_IO, EXIT_FIT = 0, 1, 2, 3, 4
PI = math.pi
LINE_NAMES = ("red1", "red2", "red3", "blue1", "blue2", "op1", "op2", "op3")

# per-command defaults and minimum resolutions
_DEFAULTS = {
    "phase-diagram": {"resolution": 201, "k_grid": 4096},
    "critical-scan": {"resolution": 600, "line": "red2", "delta": 1e-2},
    "exponents": {"resolution": 20},
    "rg-flow": {"resolution": 2000, "line": "red2"},
    "wannier": {"line": "red2", "offsets": "0.1,0.3"},
    "velocity": {"resolution": 4096, "angles": "0,0"},
    "winding-trace": {"resolution": 1024, "angles": "1.5707963267948966,1.5707963267948966", "delta": 1e-2},
}
_MINIMUM = {
    "phase-diagram": 11,
    "critical-scan": 2,
    "exponents": 5,
    "rg-flow": 1000,
    "velocity": 1024,
    "winding-trace": 16,
}


class ConfigError(ValueError):
    """Invalid command-line or config-file input."""


# --------------------------------------------------------------------------
# formatting


def _fmt(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "NA" if not math.isfinite(x) else repr(float(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    return x


def _render(columns, rows, fmt) -> str:
    if fmt == "json":
        records = [dict(zip(columns, (_jsonable(v) for v in r))) for r in rows]
        return json.dumps(records, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


class _Writer:
    """Collects output files for the run manifest."""

    def __init__(self, output: str, fmt: str):
        self.fmt = fmt
        stem, ext = os.path.splitext(output)
        self.stem = stem if ext in (".csv", ".json") else output
        self.files: list[str] = []

    def path(self, suffix: str = "") -> str:
        return f"{self.stem}{suffix}.{self.fmt}"

    def table(self, columns, rows, suffix: str = ""):
        p = self.path(suffix)
        _write(p, _render(columns, rows, self.fmt))
        self.files.append(p)

    def manifest(self, command, config, status, wall, extra=None):
        doc = {
            "toolkit_version": __version__,
            "command": command,
            "config": _jsonable(config),
            "outputs": [os.path.basename(f) for f in self.files],
            "status": status,
            "wall_time_s": round(wall, 3),
        }
        if extra:
            doc["results"] = _jsonable(extra)
        _write(f"{self.stem}.manifest.json", json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _write(path, text):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# --------------------------------------------------------------------------
# config handling


def _read_config(path) -> dict:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _floats(text, n=None, name="value"):
    try:
        vals = [float(eval_angle(v)) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad {name}: {text!r}") from exc
    if n is not None and len(vals) != n:
        raise ConfigError(f"{name} needs {n} comma-separated numbers, got {text!r}")
    return vals


def eval_angle(text: str) -> float:
    """Parse a number, also accepting ``pi`` multiples such as ``2pi/3`` or ``-pi``."""
    s = text.strip().lower().replace(" ", "")
    if "pi" not in s:
        return float(s)
    num, _, den = s.partition("/")
    coef = num.replace("*", "").replace("pi", "")
    c = {"": 1.0, "+": 1.0, "-": -1.0}.get(coef)
    c = float(coef) if c is None else c
    return c * PI / (float(den) if den else 1.0)


def _resolve(args) -> dict:
    cmd = args.command
    cfg = dict(_DEFAULTS.get(cmd, {}))
    if getattr(args, "config", None):
        cfg.update(_read_config(args.config))
    for key in ("resolution", "k_grid", "line", "theta1_range", "delta", "output", "format", "jobs", "angles", "offsets", "xi_source"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    cfg.setdefault("format", "csv")
    cfg.setdefault("jobs", 1)
    cfg.setdefault("output", cmd.replace("-", "_"))
    try:
        for key in ("resolution", "k_grid", "jobs"):
            if key in cfg:
                cfg[key] = int(cfg[key])
        if "delta" in cfg:
            cfg["delta"] = float(cfg["delta"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    if "line" in cfg and cfg["line"] not in LINE_NAMES:
        raise ConfigError(f"unknown line {cfg['line']!r}; choose from {', '.join(LINE_NAMES)}")
    if cmd in _MINIMUM and "resolution" in cfg and cfg["resolution"] < _MINIMUM[cmd]:
        raise ConfigError(f"{cmd} needs resolution >= {_MINIMUM[cmd]}")
    if cfg.get("jobs", 1) < 1:
        raise ConfigError("jobs must be >= 1")
    if "delta" in cfg and not 1e-4 <= cfg["delta"] <= 1e-1:
        raise ConfigError("delta must lie in [1e-4, 1e-1]")
    if "theta1_range" in cfg:
        lo, hi = _floats(cfg["theta1_range"], 2, "theta1-range")
        if not -PI - 1e-12 <= lo < hi <= PI + 1e-12:
            raise ConfigError("theta1-range must satisfy -pi <= lo < hi <= pi")
        cfg["theta1_range"] = (lo, hi)
    if "angles" in cfg and isinstance(cfg["angles"], str):
        a = _floats(cfg["angles"], 2, "angles")
        if any(abs(x) > PI + 1e-12 for x in a):
            raise ConfigError("angles must lie in [-pi, pi]")
        cfg["angles"] = tuple(a)
    if "offsets" in cfg and isinstance(cfg["offsets"], str):
        cfg["offsets"] = tuple(_floats(cfg["offsets"], None, "offsets"))
    return cfg


# --------------------------------------------------------------------------
# commands


def cmd_phase_diagram(cfg, out: _Writer):
    pd = phase_diagram(cfg["resolution"], cfg["k_grid"], jobs=cfg["jobs"])
    rows = []
    n = pd.resolution
    for i in range(n):
        for j in range(n):
            gl = bool(pd.gapless[i, j])
            rows.append(
                (pd.theta[i], pd.theta[j], None if gl else int(pd.winding[i, j]), pd.min_gap[i, j], pd.line_id[i, j] if gl else "")
            )
    out.table(("theta1", "theta2", "w", "min_gap", "line_id"), rows)
    return {"gapless_cells": int(pd.gapless.sum()), "interface_flags": pd.n_interface_flags, "gap_threshold": pd.gap_threshold}


def _theta_grid(line, cfg):
    lo, hi = cfg.get("theta1_range", line.theta1_domain)
    lo, hi = max(lo, line.theta1_domain[0]), min(hi, line.theta1_domain[1])
    n = cfg["resolution"]
    return lo + (hi - lo) * (np.arange(n) + 0.5) / n


def cmd_critical_scan(cfg, out: _Writer):
    line = get_line(cfg["line"])
    k0 = line.hs_momentum or 0.0
    rows = []
    for t in _theta_grid(line, cfg):
        closings = gap_closing_momenta(line, t)
        try:
            fit = measure_peak(line, t, k0)
            fpk, xi, xi2, r2 = fit.F_peak, fit.xi_c, fit.xi_squared, fit.r_squared
        except FitRejectedError:
            fpk = xi = xi2 = r2 = None
        if closings:
            cw = obs.critical_winding(line, t, cfg["delta"])
            wc, wraw = cw.w_c, cw.w_c_raw
        else:
            wc = wraw = None
        ks = ";".join(_fmt(c.k) for c in closings)
        rows.append((t, float(line.theta2(t)), k0, fpk, xi, xi2, r2, wc, wraw, ks))
    out.table(("theta1c", "theta2c", "k0", "F_peak", "xi_c", "xi_squared", "r_squared", "w_c", "w_c_raw", "closings"), rows)
    return {"line": line.name, "rows": len(rows)}


def _exponent_targets(cfg):
    lines = [get_line(cfg["line"])] if "line" in cfg else critical_lines()
    seen, out = set(), []
    for line in lines:
        for t in transition_angles(line):
            if not line.contains(t, 1e-9):
                continue
            key = (line.name, round(t, 9))
            if key not in seen:
                seen.add(key)
                out.append((line, t))
    return out


def _find_mc(t1, t2):
    # the walk depends on theta2 only through cos^2, sin^2 and sin(2 theta2)
    for shift in (0.0, -PI, PI):
        if abs(t2 + shift) <= PI + 1e-9:
            try:
                return find_multicritical(t1, t2 + shift)
            except KeyError:
                pass
    raise KeyError(f"no multicritical point at ({t1}, {t2})")


def cmd_exponents(cfg, out: _Writer):
    n = cfg["resolution"]
    rows = []
    for line, t in _exponent_targets(cfg):
        mc = _find_mc(t, float(line.theta2(t)))
        fit = critical_exponents(line, t, np.geomspace(1e-3, 1e-1, n))
        if fit.min_r_squared < 0.99:
            raise PoorFitError(f"fit quality {fit.min_r_squared:.4f} below 0.99 at {line.name}, {t:.6f}")
        z = dynamical_exponent(mc)
        rows.append(
            (line.name, mc.theta1, mc.theta2, mc.kind.value, fit.gamma, fit.nu, z, fit.slope_errors[0], fit.slope_errors[1], fit.min_r_squared)
        )
    out.table(("line", "mc_theta1", "mc_theta2", "kind", "gamma", "nu", "z", "gamma_err", "nu_err", "min_r_squared"), rows)
    return {"fits": len(rows)}


def cmd_rg_flow(cfg, out: _Writer):
    family = get_line(cfg["line"]).family
    n = cfg["resolution"]
    rows = []
    for t in -PI + 2 * PI * (np.arange(n) + 0.5) / n:
        closed = rg_flow._safe_rhs(family, t)
        try:
            num = rg_flow.rg_rhs_numeric(family.value, t)
        except rg_flow.VanishingDenominatorError:
            num = None
        rows.append((t, closed, num))
    out.table(("theta1", "rhs_closed", "rhs_numeric"), rows)
    pts = rg_flow.classify_flow_points(family, max(n, 1000))
    prow = [("fixed", x, x in pts.stable) for x in pts.fixed] + [("unstable", x, False) for x in pts.unstable]
    out.table(("kind", "theta1", "stable"), prow, "_points")
    return {"family": family.value, "fixed": list(pts.fixed), "unstable": list(pts.unstable)}


def _wannier_anchor(line):
    """First quadratic transition angle on ``line``; linear ones otherwise."""
    ts = [t for t in transition_angles(line) if line.contains(t, 1e-9)]
    if line.family is LineFamily.RED_HS:
        quad = [t for t in ts if abs(t) > 1e-9]
    elif line.family is LineFamily.BLUE_HS:
        quad = [t for t in ts if abs(abs(t) - PI) > 1e-9]
    else:
        quad = []
    return (quad or ts)[0]


def cmd_wannier(cfg, out: _Writer):
    line = get_line(cfg["line"])
    mc = float(cfg["theta1_range"][0]) if "theta1_range" in cfg else _wannier_anchor(line)
    k0 = PI if line.family is LineFamily.BLUE_HS and abs(abs(mc) - PI / 3) < 1e-9 else 0.0
    source = cfg.get("xi_source", "fit")
    series = []
    for off in cfg["offsets"]:
        t = mc - off if line.contains(mc - off) else mc + off
        series.append((off, t, obs.wannier_correlation(line, t, k0, R_max=None, xi_source=source)))
    r_max = min(max(len(s.R_values) for _, _, s in series) - 1, 10_000)
    cols = ["R"] + [f"abs_lambda_{_fmt(off)}" for off, _, _ in series]
    rows = []
    for r in range(r_max + 1):
        vals = [abs(s.lambda_values[r]) if r < len(s.lambda_values) else 0.0 for _, _, s in series]
        rows.append((r, *vals))
    out.table(cols, rows)
    return {
        "line": line.name,
        "theta1_mc": mc,
        "k0": k0,
        "xi_source": source,
        "decay_lengths": {_fmt(off): s.xi_c for off, _, s in series},
        "theta1c": {_fmt(off): t for off, t, _ in series},
    }


def _angles_from(cfg):
    if "line" in cfg and "theta1_range" in cfg:
        line = get_line(cfg["line"])
        t = cfg["theta1_range"][0]
        return line.name, (t, float(line.theta2(t)))
    return None, cfg["angles"]


def cmd_velocity(cfg, out: _Writer):
    _, ang = _angles_from(cfg)
    prof = obs.velocity_profile(ang, cfg["resolution"])
    out.table(("k", "v_plus", "v_minus"), list(zip(prof.k, prof.v_plus, prof.v_minus)))
    summary = (ang[0], ang[1], prof.span[0], prof.span[1], len(prof.discontinuities), prof.piecewise_constant_deviation())
    out.table(("theta1", "theta2", "span_min", "span_max", "n_discontinuities", "piecewise_deviation"), [summary], "_summary")
    return {"span": list(prof.span), "discontinuities": list(prof.discontinuities)}


def cmd_winding_trace(cfg, out: _Writer):
    _, ang = _angles_from(cfg)
    tr = obs.winding_vector_trace(ang, n_grid=cfg["resolution"], delta=cfg["delta"])
    out.table(("k", "n2", "n3", "segment"), list(zip(tr.k, tr.n2, tr.n3, tr.segment)))
    return {"angles": list(ang), "loops": obs.count_loops(tr), "closed": tr.closed}


_COMMANDS = {
    "phase-diagram": cmd_phase_diagram,
    "critical-scan": cmd_critical_scan,
    "exponents": cmd_exponents,
    "rg-flow": cmd_rg_flow,
    "wannier": cmd_wannier,
    "velocity": cmd_velocity,
    "winding-trace": cmd_winding_trace,
}


def cmd_acceptance(args) -> int:
    if args.list:
        for c in acceptance.CRITERIA:
            print(f"{c.number:2d} {c.name}: {c.summary}")
        return EXIT_OK
    try:
        results = acceptance.run(args.only)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for r in results:
        print(acceptance.format_result(r), flush=True)
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    return EXIT_ACCEPTANCE if n_fail else EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaplesswalk", description="Three-step quantum walk topology and criticality scans.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--resolution", type=int, help="grid size (cells per axis, theta steps, k samples or fit points)")
        s.add_argument("--k-grid", dest="k_grid", type=int, help="k samples per winding integral")
        s.add_argument("--line", choices=LINE_NAMES)
        s.add_argument("--theta1-range", dest="theta1_range", help="'lo,hi' in radians; 'pi' multiples accepted")
        s.add_argument("--delta", type=float, help="excluded half-width around gap closings")
        s.add_argument("--angles", help="'theta1,theta2' for velocity and winding-trace")
        s.add_argument("--offsets", help="comma-separated distances from the multicritical angle (wannier)")
        s.add_argument("--xi-source", dest="xi_source", choices=("fit", "leading_order"))
        s.add_argument("--output", help="output path; the extension is replaced by --format")
        s.add_argument("--format", choices=("csv", "json"))
        s.add_argument("--jobs", type=int, help="worker processes")
        s.add_argument("--config", help="key = value config file; flags override it")
    a = sub.add_parser("acceptance")
    a.add_argument("--list", action="store_true", help="list criteria without running them")
    a.add_argument("--only", nargs="+", help="criterion names or numbers")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_CONFIG
    if args.command == "acceptance":
        return cmd_acceptance(args)
    try:
        cfg = _resolve(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _Writer(cfg["output"], cfg["format"])
    t0 = time.perf_counter()
    try:
        extra = _COMMANDS[args.command](cfg, out)
        status, code = "ok", EXIT_OK
    except (FitRejectedError, PoorFitError) as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        extra, status, code = {"error": str(exc)}, "fit_failure", EXIT_FIT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out.manifest(args.command, cfg, status, time.perf_counter() - t0, extra)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
