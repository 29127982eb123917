"""Command-line front end: every operation writes a CSV table and a JSON sidecar.

Exit codes: 0 success, 2 domain error, 3 accuracy error, 64 usage error.
The default output directory is taken from ``QESDISORDER_OUTPUT_DIR``
(falling back to the working directory).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import coupled as cp
from . import fock, husimi, qes, sampler
from . import specfun as sf
from .errors import (AccuracyError, CapabilityError, DomainError, IntegrityError, QESError,
                     ResolutionError, SingularRatioError, WindowError)

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_ACCURACY = 3
EXIT_USAGE = 64
OUTPUT_ENV = "QESDISORDER_OUTPUT_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures raised instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def format_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.16e}"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


class Table:
    """Column names, rows and free-form metadata produced by a command."""

    def __init__(self, columns, rows=None, meta=None):
        self.columns = list(columns)
        self.rows = [list(r) for r in (rows or [])]
        self.meta = dict(meta or {})

    def add(self, *row):
        self.rows.append(list(row))


def write_table(table: Table, stem: Path, fmt: str):
    stem.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path = stem.with_suffix(".csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(table.columns) + "\n")
            for r in table.rows:
                fh.write(",".join(format_cell(v) for v in r) + "\n")
    else:
        path = stem.with_suffix(".data.json")
        payload = {"columns": table.columns, "rows": _jsonable(table.rows)}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
    return path


def read_csv(path):
    """Columns and rows of a CSV written by this module (numbers parsed where possible)."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    cols = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        row = []
        for cell in ln.split(","):
            try:
                row.append(int(cell))
            except ValueError:
                try:
                    row.append(float(cell))
                except ValueError:
                    row.append(cell)
        rows.append(row)
    return cols, rows


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

def parse_orders(text):
    """``"4:16"`` (even orders inclusive), ``"4:16:4"`` or ``"2,4,8"``."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                lo, hi, step = parts[0], parts[1], 2
            elif len(parts) == 3:
                lo, hi, step = parts
            else:
                raise ValueError
            if step <= 0:
                raise ValueError
            return list(range(lo, hi + 1, step))
        return [int(p) for p in text.split(",") if p]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad order list {text!r}") from None


def parse_floats(text):
    """Comma list of floats or ``start:stop:count`` (inclusive linspace)."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            return [float(v) for v in np.linspace(float(lo), float(hi), int(n))]
        return [float(p) for p in text.split(",") if p]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def parse_angle(text):
    """Float radians, or ``pi/4``-style fractions of pi."""
    t = text.strip().lower().replace(" ", "")
    try:
        if "pi" in t:
            num, _, den = t.partition("/")
            num = num.replace("*", "").replace("pi", "")
            factor = {"": 1.0, "+": 1.0, "-": -1.0}.get(num)
            if factor is None:
                factor = float(num)
            return factor * math.pi / (float(den) if den else 1.0)
        return float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad angle {text!r}") from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_potential(a):
    t = Table(["c", "y", "V", "well_class"])
    ys = np.linspace(a.y_min, a.y_max, a.points)
    extrema = {}
    if a.unscaled:
        p = qes.SexticParams(a.a, a.b, a.n, a.k)
        cs = [p.c]
        vals = {p.c: qes.potential_unscaled(ys, p)}
    else:
        cs = a.c or [5.0, -1.0, -5.0]
        vals = {c: qes.potential(ys, c) for c in cs}
    for c in cs:
        wc = qes.classify_well(c).value
        extrema[format_cell(float(c))] = [float(v) for v in qes.count_extrema(c)]
        for y, v in zip(ys, vals[c]):
            t.add(float(c), float(y), float(v), wc)
    t.meta["extrema"] = extrema
    return t


def cmd_moments(a):
    rep = qes.moment_report(a.c, a.orders, source=a.source)
    t = Table(["c", "order", "raw", "excess", "ratio_next", "source"])
    for o, raw, ex, ratio in rep.rows():
        t.add(rep.c, o, raw, ex, ratio, rep.source)
    t.meta.update(variance=rep.variance, well_class=qes.classify_well(a.c).value)
    return t


def _grid(max_abs, points, symmetric=True):
    lo = -max_abs if symmetric else 0.0
    return np.linspace(lo, max_abs, points)


def cmd_qfunc(a):
    a1 = _grid(a.alpha1_max, a.points)
    a2 = _grid(a.alpha2_max, a.points)
    t = Table(["c", "state", "alpha1", "alpha2", "Q"])
    for c in a.c:
        if a.state == "pure":
            q = husimi.q_pure_grid(c, a1, a2)
        else:
            grid = cp.auto_discretize(cp.identical_pi4_kernel(c), tol=a.tol)
            q = husimi.q_mixed_grid(grid, a1, a2)
        h1, h2 = a1[1] - a1[0], a2[1] - a2[0]
        t.meta.setdefault("grid_mass", {})[format_cell(float(c))] = float(q.sum() * h1 * h2)
        for i, x in enumerate(a1):
            for j, y in enumerate(a2):
                t.add(float(c), a.state, float(x), float(y), float(q[i, j]))
    return t


def cmd_gc_scan(a):
    rep = husimi.scan_zeros(a.c, alpha2_max=a.alpha2_max, initial_step=a.step, tol=a.tol)
    t = Table(["c", "index", "alpha2_zero"])
    for i, z in enumerate(rep.zeros):
        t.add(float(a.c), i, float(z))
    t.meta.update(count=rep.count, density_estimate=rep.density_estimate, window=rep.window,
                  max_abs_gc=rep.max_abs_gc, g0=rep.g0, final_step=rep.step,
                  counts_by_step=rep.counts_by_step)
    return t


def _state_kernel(state, c):
    if state == "pure":
        return cp.pure_state_kernel(c)
    return cp.identical_pi4_kernel(c)


def cmd_fock(a):
    grid = cp.auto_discretize(_state_kernel(a.state, a.c), tol=a.tol)
    st = fock.number_populations(grid, a.omega, a.n_max)
    t = Table(["c", "state", "n", "p_n"])
    for n, p in enumerate(st.populations):
        t.add(float(a.c), a.state, n, float(p))
    t.meta.update(omega=st.omega, n_max=st.n_max, tail_mass=st.tail_mass, mean_n=st.mean(),
                  window=st.window, n_nodes=st.n_nodes, convergence=st.convergence,
                  even_minima=fock.local_minima(st.populations, parity=0))
    return t


def cmd_harmonic(a):
    if a.coupled is not None:
        pair = cp.harmonic_from_coupled(*a.coupled)
    else:
        pair = cp.HarmonicPair(a.omega1p, a.omega2p, a.theta)
    res = cp.harmonic_reduced(pair)
    pr = res.params
    w1, w2, lam = cp.harmonic_coupled_coeffs(pair)
    th = fock.thermal_params(pr.gamma, pr.beta, a.convention)
    t = Table(["omega1p", "omega2p", "theta", "omega1_sq", "omega2_sq", "lambda", "tau1", "tau2",
               "gamma", "beta", "variance", "purity", "omega_t", "temperature", "mean_n", "xi"])
    t.add(pair.omega1p, pair.omega2p, pair.theta, w1, w2, lam, pr.tau1, pr.tau2, pr.gamma, pr.beta,
          res.variance, res.purity, th.omega_t, th.temperature, th.mean_n, th.xi)
    t.meta.update(thermal_convention=th.convention, thermal_alternatives=th.alternatives,
                  variance_gamma_beta_form=res.variance_gamma_beta_form)
    return t


def cmd_coupled(a):
    pair = cp.AnharmonicPair(a.c1, a.c2, a.theta)
    t = Table(["c1", "c2", "theta", "which", "order", "moment", "moment_exact", "excess",
               "approx_moment", "approx_flag"])
    for which in (1, 2):
        var = cp.reduced_moment(2, pair, which, method=a.method)
        for o in a.orders:
            m = cp.reduced_moment(o, pair, which, method=a.method)
            ex = cp.reduced_moment_exact(o, pair, which)
            nu = m / var ** (o // 2) - sf.double_factorial(o - 1) if o >= 4 else math.nan
            ap, flag = cp.approx_moments_nonid(o, pair, which)
            t.add(pair.c1, pair.c2, pair.theta, which, o, m, ex, nu, ap, flag)
    vr = cp.variance_relation(pair, method=a.method)
    t.meta["variance_relation"] = vr.__dict__
    if a.purity:
        if pair.is_identical_pi4:
            kern = cp.identical_pi4_kernel(pair.c1)
            grid = cp.auto_discretize(kern, tol=a.tol)
        else:
            grid = cp.reduced_numeric(pair, N=a.nodes)
        t.meta["purity"] = cp.purity(grid)
    # unit sextic strength, so b equals c for each oscillator
    coeffs = cp.expand_coupled_hamiltonian(1.0, 1.0, pair.c1, pair.c2, pair.theta)
    t.meta["hamiltonian"] = {f"{i},{j}": v for (i, j), v in sorted(coeffs.lambda_ij.items())}
    t.meta["hamiltonian_constant"] = coeffs.constant
    return t


def cmd_sample(a):
    spec = sampler.DisorderSpec(a.kind, tuple(a.params), a.observable, a.count, a.seed, a.stream,
                                a.omega)
    ss = sampler.sample(spec)
    t = Table(["value"])
    if spec.observable == "number":
        t.rows = [[int(v)] for v in ss.values]
    else:
        t.rows = [[float(v)] for v in ss.values]
    t.meta.update(ss.metadata())
    t.meta["within_5_sigma"] = ss.within(5.0)
    return t


# ---------------------------------------------------------------------------
# figure data
# ---------------------------------------------------------------------------

def _fig_potential_shapes(a):
    ns = argparse.Namespace(unscaled=False, c=[5.0, -1.0, -5.0], y_min=-2.5, y_max=2.5, points=501)
    return cmd_potential(ns)


def _fig_variance(a):
    t = Table(["c", "variance"])
    for c in np.linspace(-10.0, 10.0, 201):
        t.add(float(c), qes.variance(float(c)))
    return t


def _fig_excess(a):
    t = Table(["c", "order", "excess", "scaled_excess"])
    for c in np.linspace(-10.0, 10.0, 201):
        rep = qes.moment_report(float(c), range(4, 18, 2))
        for o in range(4, 18, 2):
            bound = abs(1.0 - sf.double_factorial(o - 1))
            t.add(float(c), o, rep.excess[o], rep.excess[o] / bound)
    return t


def _fig_ratios(a):
    t = Table(["c", "two_n", "ratio", "two_n_plus_1"])
    for c in (-10.0, -5.0, -2.0, -1.0, 1.0, 2.0, 5.0, 10.0):
        rep = qes.moment_report(c, range(4, 32, 2))
        for o, r in sorted(rep.ratios.items()):
            # R_{n+1} = nu_{2n+2} / nu_{2n} with 2n = o
            t.add(c, o, r, o + 1)
    return t


def _fig_qfunc_pure(a):
    ns = argparse.Namespace(c=[10.0, 1.0, -2.0, -10.0], state="pure", alpha1_max=3.0,
                            alpha2_max=6.0, points=121, tol=1e-9)
    return cmd_qfunc(ns)


def _fig_gc_axis(a):
    t = Table(["c", "alpha2", "abs_gc_over_max", "gc_scaled"])
    a2 = np.linspace(0.0, 12.0, 2401)
    for c in (-10.0, -2.0, 1.0, 10.0):
        rule = husimi.GcPanelRule(c, 12.0)
        g = rule.re_axis(a2)
        g0 = abs(g[0])
        t.meta.setdefault("g0", {})[format_cell(c)] = g0 * math.exp(rule.log_scale)
        for x, v in zip(a2, g):
            t.add(c, float(x), abs(v) / g0, float(v))
    return t


def _fock_rows(t, label, c, kern):
    grid = cp.auto_discretize(kern, tol=1e-9)
    st = fock.number_populations(grid)
    for n, p in enumerate(st.populations):
        t.add(label, c, n, float(p))
    t.meta.setdefault("omega", {})[f"{label}:{format_cell(c)}"] = st.omega


def _fig_fock_pure(a):
    t = Table(["state", "c", "n", "p_n"])
    for c in (1.0, -1.0):
        _fock_rows(t, "pure", c, cp.pure_state_kernel(c))
    return t


def _fig_fock_mixed(a):
    t = Table(["state", "c", "n", "p_n"])
    for c in (1.0, -1.0):
        _fock_rows(t, "pure", c, cp.pure_state_kernel(c))
        _fock_rows(t, "mixed_pi4", c, cp.identical_pi4_kernel(c))
    return t


def _fig_purity_harmonic(a):
    t = Table(["omega1", "omega2", "lambda", "lambda_over_max", "purity", "variance"])
    for w1, w2 in ((1.0, 1.0), (1.0, 2.0)):
        lam_max = 2.0 * w1 * w2
        for f in np.linspace(0.0, 0.999, 200):
            pair = cp.harmonic_from_coupled(w1 * w1, w2 * w2, f * lam_max)
            res = cp.harmonic_reduced(pair)
            t.add(w1, w2, float(f * lam_max), float(f), res.purity, res.variance)
    return t


def _fig_purity_pi4(a):
    t = Table(["c", "purity", "nodes", "error_estimate"])
    for c in np.linspace(-20.0, 20.0, 81):
        grid = cp.auto_discretize(cp.identical_pi4_kernel(float(c)), tol=1e-9)
        t.add(float(c), cp.purity(grid), grid.n, grid.error_estimate)
    return t


def _fig_pi4_moments(a):
    t = Table(["c", "order", "excess_mixed", "scaled_excess_mixed", "excess_pure", "ratio_mixed_pure"])
    for c in np.linspace(-10.0, 10.0, 81):
        c = float(c)
        pair = cp.AnharmonicPair(c, c, math.pi / 4)
        var = cp.reduced_moment_exact(2, pair)
        for o in range(4, 18, 2):
            nu = cp.reduced_moment_exact(o, pair) / var ** (o // 2) - sf.double_factorial(o - 1)
            nu_p = qes.excess_moment(o, c)
            bound = abs(1.0 - sf.double_factorial(o - 1))
            t.add(c, o, nu, nu / bound, nu_p, nu / nu_p if nu_p != 0 else math.nan)
    return t


def _fig_qfunc_mixed(a):
    t = Table(["c", "state", "alpha1", "alpha2", "Q"])
    for state in ("mixed_pi4", "pure"):
        ns = argparse.Namespace(c=[-5.0], state="pure" if state == "pure" else "pi4",
                                alpha1_max=3.0, alpha2_max=3.0, points=81, tol=1e-9)
        sub = cmd_qfunc(ns)
        for r in sub.rows:
            r[1] = state
        t.rows.extend(sub.rows)
    return t


def _fig_variance_nonid(a):
    t = Table(["c1", "c2", "theta", "var_ratio"])
    c2s = np.linspace(-10.0, 10.0, 201)
    for c1 in (-5.0, 0.0, 5.0):
        ratios = cp.variance_ratio_sweep(c1, c2s)
        for c2, r in zip(c2s, ratios):
            t.add(c1, float(c2), math.pi / 4, float(r))
    return t


def _fig_variance_theta(a):
    t = Table(["c1", "c2", "theta", "var_x1", "var_x2", "piecewise_x1", "piecewise_x2"])
    for th in np.linspace(0.0, math.pi / 2, 91):
        pair = cp.AnharmonicPair(-1.0, -5.0, float(th))
        v1 = cp.reduced_moment_exact(2, pair, 1)
        v2 = cp.reduced_moment_exact(2, pair, 2)
        pw = cp._piecewise(qes.variance(-1.0), qes.variance(-5.0), float(th))
        t.add(-1.0, -5.0, float(th), v1, v2, pw[0], pw[1])
    return t


def _fig_kurtosis_c2(a):
    t = Table(["c1", "c2", "theta", "nu4_x1", "nu4_scaled", "nu4_parent1", "nu4_parent2"])
    c2s = np.linspace(-10.0, 10.0, 201)
    for c1 in (-5.0, -1.0, 1.0, 5.0):
        grid, p1, p2 = cp.kurtosis_sweep(c1, c2s, [math.pi / 4])
        scale = float(np.max(np.abs(grid)))
        for i, c2 in enumerate(c2s):
            t.add(c1, float(c2), math.pi / 4, grid[i, 0], grid[i, 0] / scale, p1, p2[i])
    return t


def _fig_kurtosis_theta(a):
    t = Table(["c1", "c2", "theta", "nu4_x1", "nu4_parent1", "nu4_parent2"])
    thetas = np.linspace(0.0, math.pi / 2, 91)
    for c1, c2 in ((-1.0, -5.0), (1.0, -5.0), (5.0, -1.0)):
        grid, p1, p2 = cp.kurtosis_sweep(c1, [c2], thetas)
        for j, th in enumerate(thetas):
            t.add(c1, c2, float(th), grid[0, j], p1, p2[0])
    return t


FIGURES = {
    "potential-shapes": _fig_potential_shapes,
    "variance-vs-c": _fig_variance,
    "excess-moments": _fig_excess,
    "moment-ratios": _fig_ratios,
    "qfunc-pure": _fig_qfunc_pure,
    "gc-axis": _fig_gc_axis,
    "fock-pure": _fig_fock_pure,
    "purity-harmonic": _fig_purity_harmonic,
    "purity-pi4": _fig_purity_pi4,
    "pi4-moments": _fig_pi4_moments,
    "fock-mixed": _fig_fock_mixed,
    "qfunc-mixed": _fig_qfunc_mixed,
    "variance-nonid": _fig_variance_nonid,
    "variance-vs-theta": _fig_variance_theta,
    "kurtosis-vs-c2": _fig_kurtosis_c2,
    "kurtosis-vs-theta": _fig_kurtosis_theta,
}


def cmd_figure(a):
    return FIGURES[a.id](a)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

TOLERANCES = {
    "quadrature_rtol": 1e-12,
    "moment_rtol": 1e-11,
    "kernel_tol": 1e-9,
    "zero_bisection": 1e-8,
    "fock_convergence": 1e-8,
}


def build_parser():
    p = _Parser(prog="qesdisorder", description="Sextic ground-state numerics and disorder sampling.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or '.')")
    p.add_argument("--name", help="file stem for outputs (default derived from the command)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("potential", help="rescaled or unrescaled potential on a grid")
    s.add_argument("--c", type=float, action="append")
    s.add_argument("--unscaled", action="store_true", help="use --a --b --n --k instead of --c")
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--b", type=float, default=0.0)
    s.add_argument("--n", type=int, default=0)
    s.add_argument("--k", type=int, default=0)
    s.add_argument("--y-min", type=float, default=-2.5)
    s.add_argument("--y-max", type=float, default=2.5)
    s.add_argument("--points", type=int, default=501)
    s.set_defaults(func=cmd_potential)

    s = sub.add_parser("moments", help="raw, excess and ratio moments")
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--orders", type=parse_orders, default=parse_orders("4:16"))
    s.add_argument("--source", choices=("analytic", "oracle"), default="analytic")
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("qfunc", help="Husimi function on a rectangular grid")
    s.add_argument("--c", type=parse_floats, required=True)
    s.add_argument("--state", choices=("pure", "pi4"), default="pure")
    s.add_argument("--alpha1-max", type=float, default=3.0)
    s.add_argument("--alpha2-max", type=float, default=6.0)
    s.add_argument("--points", type=int, default=121)
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_qfunc)

    s = sub.add_parser("gc-scan", help="zeros of G_c on the imaginary axis")
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--alpha2-max", type=float, default=12.0)
    s.add_argument("--step", type=float, default=0.01)
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_gc_scan)

    s = sub.add_parser("fock", help="number-state populations")
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--state", choices=("pure", "pi4"), default="pure")
    s.add_argument("--omega", type=float, default=None)
    s.add_argument("--n-max", type=int, default=60)
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_fock)

    s = sub.add_parser("harmonic", help="reduced state of a linearly coupled harmonic pair")
    s.add_argument("--omega1p", type=float, default=1.0)
    s.add_argument("--omega2p", type=float, default=1.0)
    s.add_argument("--theta", type=parse_angle, default=0.0)
    s.add_argument("--coupled", type=float, nargs=3, metavar=("W1SQ", "W2SQ", "LAMBDA"),
                   help="give the coupled-frame coefficients instead")
    s.add_argument("--convention", choices=fock.THERMAL_CONVENTIONS,
                   default=fock.DEFAULT_THERMAL_CONVENTION)
    s.set_defaults(func=cmd_harmonic)

    s = sub.add_parser("coupled", help="reduced moments of a sextic pair")
    s.add_argument("--c1", type=float, required=True)
    s.add_argument("--c2", type=float, required=True)
    s.add_argument("--theta", type=parse_angle, default=math.pi / 4)
    s.add_argument("--orders", type=parse_orders, default=parse_orders("2:8"))
    s.add_argument("--method", choices=("quadrature", "exact"), default="quadrature")
    s.add_argument("--purity", action="store_true", help="also trace out and report the purity")
    s.add_argument("--nodes", type=int, default=513)
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_coupled)

    s = sub.add_parser("sample", help="seeded disorder realisations")
    s.add_argument("--kind", choices=sampler.SOURCE_KINDS, required=True)
    s.add_argument("--params", type=float, nargs="+", required=True)
    s.add_argument("--observable", choices=("quadrature", "number"), default="quadrature")
    s.add_argument("--count", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stream", type=int, default=0)
    s.add_argument("--omega", type=float, default=None)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("figure", help="data series behind a figure")
    s.add_argument("--id", required=True, choices=sorted(FIGURES))
    s.set_defaults(func=cmd_figure)
    return p


def _stem(args):
    if args.name:
        return args.name
    if args.command == "figure":
        return f"figure-{args.id}"
    return args.command


def _params(args):
    skip = {"func", "out", "name", "format"}
    return {k: _jsonable(v) for k, v in vars(args).items() if k not in skip}


def _exit_for(exc):
    if isinstance(exc, (AccuracyError, ResolutionError)):
        return EXIT_ACCURACY
    if isinstance(exc, (DomainError, WindowError, IntegrityError, CapabilityError,
                        SingularRatioError, QESError)):
        return EXIT_DOMAIN
    raise exc


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)

    out_dir = Path(args.out or os.environ.get(OUTPUT_ENV) or ".")
    stem = out_dir / _stem(args)
    meta = {
        "command": args.command,
        "argv": argv,
        "parameters": _params(args),
        "tolerances": TOLERANCES,
        "version": __version__,
        "format": args.format,
    }
    t0 = time.perf_counter()
    try:
        table = args.func(args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        code = _exit_for(exc)
        meta.update(status="error", error_type=type(exc).__name__, error=str(exc),
                    wall_time_s=time.perf_counter() - t0)
        if isinstance(exc, AccuracyError):
            meta["achieved_estimate"] = exc.estimate
            meta["achieved_error"] = exc.error
        if isinstance(exc, ResolutionError):
            meta["counts"] = exc.counts
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(stem.with_suffix(".json"), "w", encoding="utf-8") as fh:
            json.dump(_jsonable(meta), fh, indent=2, sort_keys=True)
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    data_path = write_table(table, stem, args.format)
    meta.update(status="ok", columns=table.columns, n_rows=len(table.rows),
                data_file=data_path.name, results=table.meta,
                wall_time_s=time.perf_counter() - t0)
    with open(stem.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(_jsonable(meta), fh, indent=2, sort_keys=True)
    print(data_path)
    return EXIT_OK


def rerun(meta_path, out=None):
    """Re-run the command recorded in a JSON sidecar; returns the exit code."""
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    argv = list(meta["argv"])
    cleaned, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--out":
            skip = True
            continue
        if tok.startswith("--out="):
            continue
        cleaned.append(tok)
    if out is not None:
        cleaned = ["--out", str(out)] + cleaned
    return main(cleaned)
