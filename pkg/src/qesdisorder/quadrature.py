"""Adaptive Gauss-Kronrod integration and Simpson-grid density kernels.

The 1D engine is a globally adaptive GK21 scheme that bisects the intervals
carrying most of the error, in vectorised batches.  The 2D engine is the
tensor product of the same rule on rectangles.  Density kernels
``rho(x, x')`` are discretised on composite-Simpson grids so that traces,
purities and Fock projections reduce to weighted matrix sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import AccuracyError, DomainError

__all__ = [
    "QuadResult",
    "Integrand1D",
    "Integrand2D",
    "integrate_1d",
    "integrate_oscillatory",
    "integrate_2d",
    "truncation_bounds",
    "simpson_weights",
    "DensityKernel",
    "GridKernel",
    "discretize_kernel",
    "ENVELOPE_CUTOFF",
]

ENVELOPE_CUTOFF = 1e-18
_LOG_CUTOFF = math.log(ENVELOPE_CUTOFF)
_EPS = np.finfo(float).eps

# Gauss-Kronrod 21-point abscissae (positive half, descending) and weights;
# every odd-index node is also a 10-point Gauss node.
_XK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
])
_WK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[1:10:2] = _WG
GAUSS_WEIGHTS[11:20:2] = _WG[::-1]


@dataclass(frozen=True)
class QuadResult:
    """Outcome of an adaptive integration.

    Unpacks as ``value, error = result``.
    """

    value: float
    error: float
    n_eval: int
    n_intervals: int
    bounds: tuple = (-math.inf, math.inf)
    abs_integral: float = math.nan

    @property
    def y_max(self):
        """Largest ``|y|`` actually integrated over (truncation radius)."""
        return max(abs(self.bounds[0]), abs(self.bounds[1]))

    def __iter__(self):
        yield self.value
        yield self.error


@dataclass(frozen=True)
class Integrand1D:
    """A vectorised real integrand with its domain and requested tolerance.

    ``log_envelope`` (vectorised) is the log of a positive upper envelope of
    ``|func|``.  When supplied for an infinite domain the domain is truncated
    where the envelope drops below ``ENVELOPE_CUTOFF`` times its peak.
    """

    func: Callable
    a: float = -math.inf
    b: float = math.inf
    rtol: float = 1e-12
    log_envelope: Optional[Callable] = None


@dataclass(frozen=True)
class Integrand2D:
    func: Callable
    xlim: tuple
    ylim: tuple
    rtol: float = 1e-10


def truncation_bounds(log_envelope, a=-math.inf, b=math.inf, cutoff=ENVELOPE_CUTOFF):
    """Finite ``(lo, hi)`` outside which ``exp(log_envelope)`` < cutoff * peak."""
    log_cut = math.log(cutoff)
    radius = 1.0
    while True:
        lo = max(a, -radius)
        hi = min(b, radius)
        y = np.linspace(lo, hi, 4001)
        g = np.asarray(log_envelope(y), dtype=float)
        peak = float(np.max(g))
        below = g < peak + log_cut
        left_ok = math.isfinite(a) or below[0]
        right_ok = math.isfinite(b) or below[-1]
        if left_ok and right_ok:
            break
        radius *= 2.0
        if radius > 1e8:
            raise DomainError("envelope does not decay; cannot truncate")
    level = peak + log_cut

    def h(t):
        return float(log_envelope(np.array([t]))[0]) - level

    above = np.nonzero(~below)[0]
    out_lo, out_hi = lo, hi
    if not math.isfinite(a):
        i = above[0]
        out_lo = brentq(h, y[i - 1], y[i]) if i > 0 else lo
    if not math.isfinite(b):
        i = above[-1]
        out_hi = brentq(h, y[i], y[i + 1]) if i < len(y) - 1 else hi
    return out_lo, out_hi


def _map_infinite(f, a, b):
    """Return ``(g, ta, tb)`` with ``int_a^b f = int_ta^tb g`` on a finite range."""
    if math.isfinite(a) and math.isfinite(b):
        return f, a, b

    def safe(vals, jac):
        with np.errstate(invalid="ignore", over="ignore"):
            out = vals * jac
        return np.where(np.isfinite(out), out, 0.0)

    if not math.isfinite(a) and not math.isfinite(b):
        def g(t):
            x = t / (1.0 - t * t)
            return safe(f(x), (1.0 + t * t) / (1.0 - t * t) ** 2)

        return g, -1.0, 1.0
    if math.isfinite(a):
        def g(t):
            return safe(f(a + t / (1.0 - t)), 1.0 / (1.0 - t) ** 2)

        return g, 0.0, 1.0

    def g(t):
        return safe(f(b - t / (1.0 - t)), 1.0 / (1.0 - t) ** 2)

    return g, 0.0, 1.0


def _gk21(f, lo, hi):
    """Apply GK21 to intervals ``[lo_i, hi_i]``; returns (kronrod, |k-g|, abs)."""
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = center[:, None] + half[:, None] * NODES[None, :]
    fx = np.asarray(f(x), dtype=float)
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape)
    kron = half * (fx @ KRONROD_WEIGHTS)
    gauss = half * (fx @ GAUSS_WEIGHTS)
    resabs = np.abs(half) * (np.abs(fx) @ KRONROD_WEIGHTS)
    if not np.all(np.isfinite(kron)):
        raise AccuracyError("integrand returned non-finite values")
    err = np.maximum(np.abs(kron - gauss), 5.0 * _EPS * resabs)
    return kron, err, resabs


def _adaptive(f, breaks, rtol, atol, envelope_rtol, limit):
    breaks = np.asarray(breaks, dtype=float)
    lo, hi = breaks[:-1].copy(), breaks[1:].copy()
    val, err, rabs = _gk21(f, lo, hi)
    n_eval = 21 * len(lo)
    while True:
        order = np.argsort(lo, kind="stable")
        total = math.fsum(val[order])
        total_err = math.fsum(err[order])
        total_abs = math.fsum(rabs[order])
        tol = max(atol, rtol * abs(total), envelope_rtol * total_abs)
        if total_err <= tol:
            return total, total_err, n_eval, len(lo), total_abs
        if len(lo) >= limit:
            raise AccuracyError(
                f"subdivision limit {limit} reached (error {total_err:.3e} > tolerance {tol:.3e})",
                estimate=total,
                error=total_err,
            )
        width = hi - lo
        splittable = width > 64.0 * _EPS * np.maximum(np.abs(lo), np.abs(hi)) + 1e-300
        cand = np.argsort(-np.where(splittable, err, -1.0), kind="stable")
        cand = cand[splittable[cand]]
        if len(cand) == 0:
            raise AccuracyError(
                "intervals cannot be subdivided further",
                estimate=total,
                error=total_err,
            )
        excess = total_err - 0.5 * tol
        take = int(np.searchsorted(np.cumsum(err[cand]), excess)) + 1
        take = max(1, min(take, 256, len(cand), limit - len(lo)))
        pick = cand[:take]
        mid = 0.5 * (lo[pick] + hi[pick])
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        v2, e2, a2 = _gk21(f, new_lo, new_hi)
        n_eval += 21 * len(new_lo)
        keep = np.ones(len(lo), dtype=bool)
        keep[pick] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        val = np.concatenate([val[keep], v2])
        err = np.concatenate([err[keep], e2])
        rabs = np.concatenate([rabs[keep], a2])


def integrate_1d(f, a=None, b=None, *, rtol=1e-12, atol=0.0, envelope_rtol=0.0,
                 limit=10_000, points=None, log_envelope=None, n_init=1):
    """Adaptive GK21 quadrature of a vectorised integrand.

    Parameters
    ----------
    f : callable or Integrand1D
        Vectorised integrand.  An :class:`Integrand1D` supplies its own domain,
        tolerance and envelope.
    a, b : float
        Limits; either may be infinite.
    rtol, atol : float
        Converged when the summed error estimate is below
        ``max(atol, rtol*|I|, envelope_rtol*int|f|)``.
    limit : int
        Maximum number of subintervals before :class:`AccuracyError`.
    points : sequence of float, optional
        Interior break points (finite domains only).
    log_envelope : callable, optional
        For infinite limits, truncate where the envelope falls below
        ``ENVELOPE_CUTOFF`` of its peak.  The bounds used are reported.

    Returns
    -------
    QuadResult
    """
    if isinstance(f, Integrand1D):
        spec = f
        f = spec.func
        a = spec.a if a is None else a
        b = spec.b if b is None else b
        rtol = spec.rtol
        log_envelope = spec.log_envelope if log_envelope is None else log_envelope
    a = -math.inf if a is None else float(a)
    b = math.inf if b is None else float(b)
    if rtol < 1e-13 and atol == 0.0 and envelope_rtol == 0.0:
        raise DomainError("requested relative tolerance below 1e-13 is not attainable")
    if a == b:
        return QuadResult(0.0, 0.0, 0, 0, (a, b), 0.0)
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    if log_envelope is not None and not (math.isfinite(a) and math.isfinite(b)):
        a, b = truncation_bounds(log_envelope, a, b)
    bounds = (a, b)
    g, ta, tb = _map_infinite(f, a, b)
    if points is not None and math.isfinite(a) and math.isfinite(b):
        inner = sorted(p for p in points if a < p < b)
        breaks = [a] + inner + [b]
    else:
        breaks = list(np.linspace(ta, tb, int(n_init) + 1))
    val, err, n_eval, n_int, absint = _adaptive(g, breaks, rtol, atol, envelope_rtol, limit)
    return QuadResult(sign * val, err, n_eval, n_int, bounds, absint)


def integrate_oscillatory(f, a=None, b=None, half_period=math.inf, *, rtol=1e-12,
                          atol=0.0, envelope_rtol=1e-14, limit=10_000, log_envelope=None):
    """Integrate a product of a smooth envelope and an oscillating factor.

    The (truncated) domain is first cut at every multiple of ``half_period``
    so that each panel has a fixed sign structure, then refined adaptively.
    Convergence is declared at an absolute error of
    ``envelope_rtol * int |f|`` which is what near-total cancellation allows.
    An infinite ``half_period`` (zero frequency) is plain :func:`integrate_1d`.
    """
    if isinstance(f, Integrand1D):
        spec = f
        f = spec.func
        a = spec.a if a is None else a
        b = spec.b if b is None else b
        log_envelope = spec.log_envelope if log_envelope is None else log_envelope
    a = -math.inf if a is None else float(a)
    b = math.inf if b is None else float(b)
    if not half_period > 0.0:
        raise DomainError("half_period must be positive")
    if not math.isfinite(half_period):
        return integrate_1d(f, a, b, rtol=rtol, atol=atol, envelope_rtol=envelope_rtol,
                            limit=limit, log_envelope=log_envelope)
    if not (math.isfinite(a) and math.isfinite(b)):
        if log_envelope is None:
            raise DomainError("infinite oscillatory domains need a log_envelope")
        a, b = truncation_bounds(log_envelope, a, b)
    k0 = math.ceil(a / half_period)
    k1 = math.floor(b / half_period)
    if k1 - k0 > limit // 2:
        raise AccuracyError("too many half periods inside the integration window")
    inner = [k * half_period for k in range(k0, k1 + 1) if a < k * half_period < b]
    breaks = [a] + inner + [b]
    val, err, n_eval, n_int, absint = _adaptive(f, breaks, rtol, atol, envelope_rtol, limit)
    return QuadResult(val, err, n_eval, n_int, (a, b), absint)


def _gk21_2d(f, x0, x1, y0, y1):
    cx, hx = 0.5 * (x0 + x1), 0.5 * (x1 - x0)
    cy, hy = 0.5 * (y0 + y1), 0.5 * (y1 - y0)
    X = (cx[:, None] + hx[:, None] * NODES[None, :])[:, :, None]
    Y = (cy[:, None] + hy[:, None] * NODES[None, :])[:, None, :]
    F = np.broadcast_to(np.asarray(f(X, Y), dtype=float), (len(x0), 21, 21))
    area = hx * hy
    ky = F @ KRONROD_WEIGHTS
    gy = F @ GAUSS_WEIGHTS
    kk = area * (ky @ KRONROD_WEIGHTS)
    gk = area * (ky @ GAUSS_WEIGHTS)
    kg = area * (gy @ KRONROD_WEIGHTS)
    gg = area * (gy @ GAUSS_WEIGHTS)
    rabs = area * ((np.abs(F) @ KRONROD_WEIGHTS) @ KRONROD_WEIGHTS)
    if not np.all(np.isfinite(kk)):
        raise AccuracyError("integrand returned non-finite values")
    err = np.maximum(np.abs(kk - gg), 5.0 * _EPS * rabs)
    ex = np.abs(kk - gk)
    ey = np.abs(kk - kg)
    return kk, err, ex, ey, rabs


def integrate_2d(f, xlim=None, ylim=None, *, rtol=1e-10, atol=0.0, limit=10_000, n_init=(4, 4)):
    """Adaptive tensor-product GK21 cubature over a rectangle.

    ``f(x, y)`` must broadcast over array arguments.  Regions are bisected
    along the direction whose embedded error estimate is larger.
    """
    if isinstance(f, Integrand2D):
        spec = f
        f, xlim, ylim, rtol = spec.func, spec.xlim, spec.ylim, spec.rtol
    (ax, bx), (ay, by) = map(lambda t: (float(t[0]), float(t[1])), (xlim, ylim))
    if not all(math.isfinite(v) for v in (ax, bx, ay, by)):
        raise DomainError("integrate_2d needs a finite rectangle")
    gx = np.linspace(ax, bx, n_init[0] + 1)
    gy = np.linspace(ay, by, n_init[1] + 1)
    X0, Y0 = np.meshgrid(gx[:-1], gy[:-1], indexing="ij")
    X1, Y1 = np.meshgrid(gx[1:], gy[1:], indexing="ij")
    x0, x1, y0, y1 = X0.ravel(), X1.ravel(), Y0.ravel(), Y1.ravel()
    val, err, ex, ey, rabs = _gk21_2d(f, x0, x1, y0, y1)
    n_eval = 441 * len(x0)
    while True:
        order = np.lexsort((y0, x0))
        total = math.fsum(val[order])
        total_err = math.fsum(err[order])
        tol = max(atol, rtol * abs(total))
        if total_err <= tol:
            return QuadResult(total, total_err, n_eval, len(x0), (ax, bx), math.fsum(rabs[order]))
        if len(x0) >= limit:
            raise AccuracyError(
                f"2D subdivision limit {limit} reached (error {total_err:.3e} > tolerance {tol:.3e})",
                estimate=total,
                error=total_err,
            )
        cand = np.argsort(-err, kind="stable")
        excess = total_err - 0.5 * tol
        take = int(np.searchsorted(np.cumsum(err[cand]), excess)) + 1
        take = max(1, min(take, 128, limit - len(x0)))
        pick = cand[:take]
        split_x = ex[pick] >= ey[pick]
        px0, px1, py0, py1 = x0[pick], x1[pick], y0[pick], y1[pick]
        mx = 0.5 * (px0 + px1)
        my = 0.5 * (py0 + py1)
        a_x0 = px0
        a_x1 = np.where(split_x, mx, px1)
        a_y0 = py0
        a_y1 = np.where(split_x, py1, my)
        b_x0 = np.where(split_x, mx, px0)
        b_x1 = px1
        b_y0 = np.where(split_x, py0, my)
        b_y1 = py1
        nx0 = np.concatenate([a_x0, b_x0])
        nx1 = np.concatenate([a_x1, b_x1])
        ny0 = np.concatenate([a_y0, b_y0])
        ny1 = np.concatenate([a_y1, b_y1])
        v2, e2, ex2, ey2, r2 = _gk21_2d(f, nx0, nx1, ny0, ny1)
        n_eval += 441 * len(nx0)
        keep = np.ones(len(x0), dtype=bool)
        keep[pick] = False
        x0 = np.concatenate([x0[keep], nx0])
        x1 = np.concatenate([x1[keep], nx1])
        y0 = np.concatenate([y0[keep], ny0])
        y1 = np.concatenate([y1[keep], ny1])
        val = np.concatenate([val[keep], v2])
        err = np.concatenate([err[keep], e2])
        ex = np.concatenate([ex[keep], ex2])
        ey = np.concatenate([ey[keep], ey2])
        rabs = np.concatenate([rabs[keep], r2])


# --------------------------------------------------------------------------
# Simpson grids and density kernels
# --------------------------------------------------------------------------

def simpson_weights(n, h):
    """Composite Simpson weights for ``n`` (odd) equally spaced nodes."""
    if n < 3 or n % 2 == 0:
        raise DomainError("Simpson rule needs an odd node count >= 3")
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


@dataclass(frozen=True)
class DensityKernel:
    """Analytic two-point kernel ``rho(x, x')``.

    ``func`` must broadcast over array arguments.  ``window`` is a half-width
    outside of which the diagonal density is negligible.
    """

    func: Callable
    window: float
    label: str = ""
    hermitian: bool = True

    def __call__(self, x, xp):
        return self.func(x, xp)

    def discretize(self, N=513, **kwargs):
        return discretize_kernel(self, self.window, N, **kwargs)


@dataclass
class GridKernel:
    """A kernel sampled on a composite-Simpson grid over ``[-L, L]``."""

    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    hermitian: bool = True
    error_estimate: float = 0.0
    raw_trace: float = 1.0
    source: Optional[DensityKernel] = field(default=None, repr=False)

    @property
    def n(self):
        return len(self.nodes)

    @property
    def half_width(self):
        return float(self.nodes[-1])

    def diagonal(self):
        return np.diag(self.values).copy()

    def trace(self):
        return float(np.dot(self.weights, np.diag(self.values)))

    def purity(self):
        """``Tr rho^2 = sum_ij w_i w_j rho_ij rho_ji``."""
        w = self.weights
        return float(w @ (self.values * self.values.T) @ w)

    def moment(self, order):
        """``sum_i w_i x_i^order rho(x_i, x_i)``."""
        return float(np.dot(self.weights, self.nodes ** order * np.diag(self.values)))

    def symmetric_matrix(self):
        """``W^{1/2} rho W^{1/2}``, whose eigenvalues are those of the operator."""
        s = np.sqrt(self.weights)
        return s[:, None] * self.values * s[None, :]

    def asymmetry(self):
        scale = np.max(np.abs(self.values))
        return float(np.max(np.abs(self.values - self.values.T)) / scale) if scale > 0 else 0.0

    def regrid(self, half_width, n):
        """Resample the analytic source on a new window; needs ``source``."""
        if self.source is None:
            raise DomainError("this GridKernel has no analytic source to resample")
        return discretize_kernel(self.source, half_width, n)


def _sample(kernel, L, n, normalize):
    x = np.linspace(-L, L, n)
    w = simpson_weights(n, x[1] - x[0])
    vals = np.asarray(kernel(x[:, None], x[None, :]), dtype=float)
    vals = np.broadcast_to(vals, (n, n)).copy()
    raw = float(np.dot(w, np.diag(vals)))
    if normalize:
        vals /= raw
    return x, w, vals, raw


def discretize_kernel(k, L=None, N=513, *, normalize=True, estimate_error=True):
    """Sample a kernel on a Simpson grid over ``[-L, L]`` with ``N`` nodes.

    The discretisation error estimate compares trace and purity on ``N`` and
    ``2N - 1`` nodes (the finer grid contains the coarser one).
    """
    N = int(N)
    if N < 33 or N % 2 == 0:
        raise DomainError("N must be odd and at least 33")
    if not isinstance(k, DensityKernel):
        if L is None:
            raise DomainError("a bare callable needs an explicit window L")
        k = DensityKernel(k, float(L))
    L = float(k.window if L is None else L)
    if not L > 0.0:
        raise DomainError("window half-width must be positive")
    x, w, vals, raw = _sample(k, L, N, normalize)
    grid = GridKernel(x, w, vals, k.hermitian, 0.0, raw, k)
    if estimate_error:
        x2, w2, v2, raw2 = _sample(k, L, 2 * N - 1, normalize)
        fine = GridKernel(x2, w2, v2, k.hermitian, 0.0, raw2, k)
        d_trace = abs(raw2 - raw) / max(abs(raw2), 1e-300)
        d_purity = abs(fine.purity() - grid.purity())
        grid.error_estimate = max(d_trace, d_purity) + 16.0 * _EPS
    return grid
