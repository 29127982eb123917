"""Husimi Q-functions of the sextic ground state and of grid density kernels.

For the pure ground state the coherent-state overlap reduces to the single
oscillatory integral

    G_c(alpha) = int exp(-y^4/4 - (c+1) y^2/2 + sqrt(2) alpha_1 y) exp(i sqrt(2) alpha_2 y) dy

and ``Q = A(c)^2 / pi^{3/2} * exp(-2 alpha_1^2) * |G_c|^2``.  Zeros of ``Q`` can
only occur on the imaginary axis, where ``G_c`` is real, so the zero scan
samples ``G_c(i alpha_2)`` only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .errors import DomainError, ResolutionError, WindowError
from .qes import log_norm_A
from .quadrature import GridKernel, integrate_oscillatory, truncation_bounds

__all__ = [
    "PhasePoint",
    "QScanReport",
    "gc",
    "gc_log_scaled",
    "GcPanelRule",
    "q_pure",
    "q_pure_grid",
    "q_mixed",
    "q_mixed_grid",
    "coherent_state",
    "scan_zeros",
]

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PhasePoint:
    """Coherent amplitude ``alpha = alpha1 + i alpha2``."""

    alpha1: float
    alpha2: float

    @classmethod
    def of(cls, p):
        if isinstance(p, PhasePoint):
            return p
        if isinstance(p, complex):
            return cls(p.real, p.imag)
        if isinstance(p, (int, float)):
            return cls(float(p), 0.0)
        a1, a2 = p
        return cls(float(a1), float(a2))

    @property
    def complex(self):
        return complex(self.alpha1, self.alpha2)


def _log_peak(c, shift):
    """Maximum over y of ``-y^4/4 - (c+1) y^2/2 + shift*|y|`` (shift >= 0)."""
    # stationary points solve y^3 + (c+1) y - shift = 0 for y >= 0
    roots = np.roots([1.0, 0.0, c + 1.0, -shift])
    cands = [0.0] + [r.real for r in roots if abs(r.imag) < 1e-9 and r.real > 0]
    ys = np.array(cands)
    vals = -0.25 * ys ** 4 - 0.5 * (c + 1.0) * ys ** 2 + shift * ys
    return float(np.max(vals))


def gc_log_scaled(alpha, c, *, rtol=1e-12):
    """``(G_c(alpha) * exp(-s), s)`` with ``s`` the log of the envelope peak.

    The even/odd split is used: the real part integrates
    ``cosh(sqrt2 a1 y) cos(sqrt2 a2 y)`` and the imaginary part
    ``sinh(sqrt2 a1 y) sin(sqrt2 a2 y)``, both over the half line, so that on
    the imaginary axis the imaginary part is exactly zero.
    """
    p = PhasePoint.of(alpha)
    c = float(c)
    shift = SQRT2 * abs(p.alpha1)
    k = SQRT2 * abs(p.alpha2)
    s = _log_peak(c, shift)

    def log_quartic(y):
        y2 = y * y
        return -0.25 * y2 * y2 - 0.5 * (c + 1.0) * y2 - s

    def env(y):
        y = np.asarray(y, dtype=float)
        return log_quartic(y) + shift * np.abs(y)

    half = math.pi / k if k > 0 else math.inf

    def re_f(y):
        lq = log_quartic(y)
        ch = 0.5 * (np.exp(lq + shift * y) + np.exp(lq - shift * y))
        return ch * np.cos(k * y) if k > 0 else ch

    lo, hi = truncation_bounds(env, 0.0, math.inf)
    re_res = integrate_oscillatory(re_f, lo, hi, half, rtol=rtol)
    re = 2.0 * re_res.value
    im = 0.0
    if shift > 0.0 and k > 0.0:
        def im_f(y):
            # sinh via expm1: no cancellation when shift * y is tiny
            return -0.5 * np.exp(log_quartic(y) + shift * y) * np.expm1(-2.0 * shift * y) * np.sin(k * y)

        # accuracy of Im G is judged on the scale of the whole integrand
        im = 2.0 * integrate_oscillatory(im_f, lo, hi, half, rtol=rtol,
                                         atol=1e-14 * re_res.abs_integral).value
        if p.alpha1 * p.alpha2 < 0:
            im = -im
    return complex(re, im), s


def gc(alpha, c, *, rtol=1e-12):
    """``G_c(alpha)`` as a complex number (may overflow for ``c`` below about -50)."""
    val, s = gc_log_scaled(alpha, c, rtol=rtol)
    return val * math.exp(s)


def q_pure(alpha, c, *, rtol=1e-12):
    """Husimi function of the pure ground state."""
    p = PhasePoint.of(alpha)
    val, s = gc_log_scaled(p, c, rtol=rtol)
    mag2 = val.real * val.real + val.imag * val.imag
    if mag2 == 0.0:
        return 0.0
    logq = 2.0 * log_norm_A(c) - 1.5 * math.log(math.pi) - 2.0 * p.alpha1 ** 2 + 2.0 * s + math.log(mag2)
    return math.exp(logq)


class GcPanelRule:
    """Fixed composite Gauss-Legendre rule for bulk evaluation of ``G_c``.

    The truncated half line is split into panels narrow enough to resolve
    frequencies up to ``sqrt2 * alpha2_max`` and the quartic weight is folded
    into the weights once, so each evaluation is a single dot product.
    """

    def __init__(self, c, alpha2_max, alpha1_max=0.0, order=20, panel=None):
        self.c = float(c)
        shift = SQRT2 * abs(alpha1_max)
        self.log_scale = _log_peak(self.c, shift)
        s = self.log_scale

        def env(y):
            y = np.asarray(y, dtype=float)
            return -0.25 * y ** 4 - 0.5 * (self.c + 1.0) * y ** 2 + shift * np.abs(y) - s

        lo, hi = truncation_bounds(env, 0.0, math.inf)
        kmax = SQRT2 * max(abs(alpha2_max), 1e-3)
        width = panel if panel is not None else min(0.1, 0.5 * math.pi / kmax)
        n_pan = max(1, int(math.ceil((hi - lo) / width)))
        edges = np.linspace(lo, hi, n_pan + 1)
        x, w = roots_legendre(order)
        mid = 0.5 * (edges[:-1] + edges[1:])
        hw = 0.5 * (edges[1:] - edges[:-1])
        self.nodes = (mid[:, None] + hw[:, None] * x[None, :]).ravel()
        self.weights = (hw[:, None] * w[None, :]).ravel()
        y2 = self.nodes ** 2
        self.log_weight = -0.25 * y2 * y2 - 0.5 * (self.c + 1.0) * y2 - s

    def re_axis(self, alpha2):
        """Scaled ``Re G_c(i alpha2) * exp(-log_scale)`` for an array of ``alpha2``."""
        a2 = np.atleast_1d(np.asarray(alpha2, dtype=float))
        ew = 2.0 * self.weights * np.exp(self.log_weight)
        out = np.empty(a2.shape)
        step = max(1, 2_000_000 // len(self.nodes))
        for i in range(0, len(a2), step):
            ph = np.cos(SQRT2 * np.outer(a2[i:i + step], self.nodes))
            out[i:i + step] = ph @ ew
        return out

    def grid(self, alpha1, alpha2):
        """Scaled complex ``G_c`` on the outer product of ``alpha1`` and ``alpha2``."""
        a1 = np.asarray(alpha1, dtype=float)
        a2 = np.asarray(alpha2, dtype=float)
        y = np.concatenate([-self.nodes[::-1], self.nodes])
        w = np.concatenate([self.weights[::-1], self.weights])
        lw = np.concatenate([self.log_weight[::-1], self.log_weight])
        shifted = np.exp(lw[None, :] + SQRT2 * np.outer(a1, y)) * w[None, :]
        phase = np.exp(1j * SQRT2 * np.outer(y, a2))
        return shifted @ phase


def q_pure_grid(c, alpha1, alpha2, order=20):
    """Pure-state ``Q`` on a rectangular ``(alpha1, alpha2)`` grid (bulk, fixed rule)."""
    a1 = np.asarray(alpha1, dtype=float)
    a2 = np.asarray(alpha2, dtype=float)
    rule = GcPanelRule(c, np.max(np.abs(a2)), np.max(np.abs(a1)), order=order)
    g = rule.grid(a1, a2)
    logq = (2.0 * log_norm_A(c) - 1.5 * math.log(math.pi) + 2.0 * rule.log_scale
            - 2.0 * a1[:, None] ** 2)
    return np.exp(logq) * np.abs(g) ** 2


def coherent_state(y, alpha):
    """``pi^{-1/4} exp(-(y - sqrt2 a1)^2 / 2) exp(i sqrt2 a2 y)``."""
    p = PhasePoint.of(alpha)
    y = np.asarray(y, dtype=float)
    return math.pi ** -0.25 * np.exp(-0.5 * (y - SQRT2 * p.alpha1) ** 2 + 1j * SQRT2 * p.alpha2 * y)


def q_mixed(alpha, rho: GridKernel):
    """``(1/pi) <alpha| rho |alpha>`` evaluated with the grid quadrature weights.

    Raises :class:`WindowError` when the coherent-state centre lies outside the
    grid window or its phase is not resolved by the grid spacing.
    """
    p = PhasePoint.of(alpha)
    _check_window(p, rho)
    v = coherent_state(rho.nodes, p) * rho.weights
    val = np.conj(v) @ rho.values @ v
    return float(val.real) / math.pi


def q_mixed_grid(rho: GridKernel, alpha1, alpha2):
    """``q_mixed`` on the outer product of ``alpha1`` and ``alpha2`` values."""
    a1 = np.asarray(alpha1, dtype=float)
    a2 = np.asarray(alpha2, dtype=float)
    # validate the extreme corners once
    for x in (a1.min(), a1.max()):
        for y in (a2.min(), a2.max()):
            _check_window(PhasePoint(x, y), rho)
    A1, A2 = np.meshgrid(a1, a2, indexing="ij")
    y = rho.nodes
    env = np.exp(-0.5 * (y[None, :] - SQRT2 * A1.ravel()[:, None]) ** 2)
    ph = np.exp(1j * SQRT2 * A2.ravel()[:, None] * y[None, :])
    V = math.pi ** -0.25 * env * ph * rho.weights[None, :]
    Q = np.einsum("ki,ki->k", np.conj(V), V @ rho.values.T).real / math.pi
    return Q.reshape(A1.shape)


def _check_window(p, rho):
    L = rho.half_width
    h = rho.nodes[1] - rho.nodes[0]
    if abs(SQRT2 * p.alpha1) > L:
        raise WindowError(f"coherent state centred at {SQRT2 * p.alpha1:.3g} lies outside [-{L:.3g}, {L:.3g}]")
    if SQRT2 * abs(p.alpha2) * h > 0.5:
        raise WindowError("grid spacing too coarse for the coherent-state phase at this alpha2")


@dataclass
class QScanReport:
    c: float
    window: tuple
    zeros: list
    count: int
    density_estimate: float
    max_abs_gc: tuple
    step: float = 0.0
    counts_by_step: list = field(default_factory=list)
    g0: float = math.nan

    @property
    def max_location(self):
        return self.max_abs_gc[1]


def _bisect(fun, lo, hi, flo, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _scan_once(rule, amax, step, tol):
    a2 = np.arange(0.0, amax + 0.5 * step, step)
    a2 = a2[a2 <= amax]
    vals = rule.re_axis(a2)
    sgn = np.sign(vals)
    idx = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]

    def f(a):
        return float(rule.re_axis(a)[0])

    zeros = [float(_bisect(f, a2[i], a2[i + 1], vals[i], tol)) for i in idx]
    # samples landing exactly on a root
    exact = np.nonzero(sgn == 0)[0]
    zeros.extend(float(a2[i]) for i in exact if 0 < i < len(a2) - 1 and sgn[i - 1] * sgn[i + 1] < 0)
    return sorted(zeros), a2, vals


def scan_zeros(c, alpha2_max=12.0, initial_step=0.01, *, tol=1e-8, max_halvings=6):
    """Locate zeros of ``Re G_c(i alpha2)`` on ``[0, alpha2_max]``.

    Sign changes on a uniform grid are bisected to ``tol``.  The step is
    halved until the zero count is unchanged between two consecutive
    resolutions; failure after ``max_halvings`` raises
    :class:`ResolutionError`.
    """
    if not alpha2_max > 0.0:
        raise DomainError("alpha2_max must be positive")
    if not initial_step > 0.0:
        raise DomainError("initial_step must be positive")
    rule = GcPanelRule(c, alpha2_max)
    step = float(initial_step)
    zeros, a2, vals = _scan_once(rule, alpha2_max, step, tol)
    counts = [len(zeros)]
    for _ in range(max_halvings):
        step *= 0.5
        zeros, a2, vals = _scan_once(rule, alpha2_max, step, tol)
        counts.append(len(zeros))
        if counts[-1] == counts[-2]:
            break
    else:
        raise ResolutionError(f"zero count did not stabilise for c={c}: {counts}", counts)
    scale = math.exp(rule.log_scale)
    imax = int(np.argmax(np.abs(vals)))
    g0 = abs(vals[0]) * scale
    half = 0.5 * alpha2_max
    density = sum(1 for z in zeros if z >= half) / half
    return QScanReport(
        c=float(c),
        window=(0.0, float(alpha2_max)),
        zeros=zeros,
        count=len(zeros),
        density_estimate=density,
        max_abs_gc=(float(abs(vals[imax]) * scale), float(a2[imax])),
        step=step,
        counts_by_step=counts,
        g0=g0,
    )
