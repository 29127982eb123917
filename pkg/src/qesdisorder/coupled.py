"""Coupled oscillator pairs built from a decoupling rotation.

Two independent oscillators in coordinates ``(y1, y2)`` are viewed in the
rotated frame ``y1 = cos(t) x1 - sin(t) x2``, ``y2 = sin(t) x1 + cos(t) x2``.
The joint ground state is the product state in ``y``; tracing out ``x2``
leaves a mixed state for ``x1``.  This module covers the harmonic pair in
closed form, the sextic pair (closed form for identical oscillators at
``t = pi/4``, numerics otherwise) and the coefficient structure of the
coupled sextic Hamiltonian.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy import special as sc
from scipy.special import roots_legendre

from . import qes
from . import specfun as sf
from .errors import AccuracyError, DomainError
from .quadrature import DensityKernel, GridKernel, discretize_kernel, integrate_2d

__all__ = [
    "HarmonicPair",
    "HarmonicReducedParams",
    "HarmonicReduced",
    "AnharmonicPair",
    "CoupledCoefficients",
    "VarianceRelation",
    "x_to_y",
    "y_to_x",
    "rotate",
    "harmonic_coupled_coeffs",
    "harmonic_from_coupled",
    "harmonic_reduced",
    "harmonic_joint_psi0",
    "gaussian_reduced_kernel",
    "state_window",
    "pure_state_kernel",
    "joint_psi0",
    "pair_window",
    "x2_integral",
    "kernel_factor",
    "reduced_identical_pi4",
    "identical_pi4_kernel",
    "reduced_from_joint",
    "reduced_numeric",
    "auto_discretize",
    "purity",
    "reduced_moment",
    "reduced_moment_exact",
    "reduced_excess",
    "variance_relation",
    "approx_moments_nonid",
    "expand_coupled_hamiltonian",
    "kurtosis_sweep",
    "variance_ratio_sweep",
]

WINDOW_CUTOFF = 1e-16


# ---------------------------------------------------------------------------
# rotation
# ---------------------------------------------------------------------------

def x_to_y(x1, x2, theta):
    c, s = math.cos(theta), math.sin(theta)
    return c * x1 - s * x2, s * x1 + c * x2


def y_to_x(y1, y2, theta):
    c, s = math.cos(theta), math.sin(theta)
    return c * y1 + s * y2, -s * y1 + c * y2


def rotate(point, theta, direction="x_to_y"):
    """Map a coordinate pair between the coupled (x) and decoupled (y) frames."""
    a, b = point
    if direction == "x_to_y":
        return x_to_y(a, b, theta)
    if direction == "y_to_x":
        return y_to_x(a, b, theta)
    raise DomainError("direction must be 'x_to_y' or 'y_to_x'")


# ---------------------------------------------------------------------------
# harmonic pair
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HarmonicPair:
    omega1p: float
    omega2p: float
    theta: float

    def __post_init__(self):
        if not (self.omega1p > 0 and self.omega2p > 0):
            raise DomainError("frequencies must be positive")


@dataclass(frozen=True)
class HarmonicReducedParams:
    tau1: float
    tau2: float
    inv_g: float
    gamma: float
    beta: float

    @property
    def g(self):
        return math.inf if self.inv_g == 0.0 else 1.0 / self.inv_g

    @property
    def mixing(self):
        """``tau1^2 tau2^2 / g^2``."""
        return (self.tau1 * self.tau2 * self.inv_g) ** 2


@dataclass
class HarmonicReduced:
    params: HarmonicReducedParams
    kernel: DensityKernel
    variance: float
    purity: float
    variance_gamma_beta_form: float


def harmonic_coupled_coeffs(p: HarmonicPair):
    """``(omega1^2, omega2^2, lambda)`` of the coupled-frame Hamiltonian."""
    c2, s2 = math.cos(p.theta) ** 2, math.sin(p.theta) ** 2
    w1, w2 = p.omega1p ** 2, p.omega2p ** 2
    o1 = w1 * c2 + w2 * s2
    o2 = w1 * s2 + w2 * c2
    lam = 2.0 * math.cos(p.theta) * math.sin(p.theta) * (w2 - w1)
    if abs(lam) > 2.0 * math.sqrt(o1 * o2) * (1.0 + 1e-12):
        raise AccuracyError("coupling bound |lambda| <= 2 omega1 omega2 violated")
    return o1, o2, lam


def harmonic_from_coupled(omega1sq, omega2sq, lam):
    """Decoupled-frame pair reproducing given coupled-frame coefficients.

    Inverts :func:`harmonic_coupled_coeffs`; needs ``lam^2 < 4 omega1sq omega2sq``.
    """
    if lam * lam >= 4.0 * omega1sq * omega2sq:
        raise DomainError("coupling at or beyond the bound |lambda| < 2 omega1 omega2")
    total = omega1sq + omega2sq
    split = math.hypot(lam, omega1sq - omega2sq)
    theta = 0.5 * math.atan2(lam, omega2sq - omega1sq) if split > 0 else 0.0
    return HarmonicPair(math.sqrt(0.5 * (total - split)), math.sqrt(0.5 * (total + split)), theta)


def gaussian_reduced_kernel(gamma, beta):
    """``sqrt((gamma-beta)/pi) exp(-gamma/2 (x^2+x'^2) + beta x x')``."""
    if not gamma > abs(beta):
        raise DomainError("need gamma > |beta|")
    norm = math.sqrt((gamma - beta) / math.pi)
    var = 0.5 / (gamma - beta)
    window = math.sqrt(2.0 * var * -math.log(WINDOW_CUTOFF))

    def rho(x, xp):
        return norm * np.exp(-0.5 * gamma * (x * x + xp * xp) + beta * x * xp)

    return DensityKernel(rho, window, f"gaussian(gamma={gamma:.6g}, beta={beta:.6g})")


def harmonic_reduced(p: HarmonicPair) -> HarmonicReduced:
    """Closed-form reduced state of one member of a harmonic pair.

    The variance is ``tau1^2 / (1 - tau1^2 tau2^2 / g^2)``, which equals
    ``1 / (2 (gamma - beta))``; the value of ``1/(4(gamma^2 - beta^2))`` is
    kept separately for comparison only.
    """
    c, s = math.cos(p.theta), math.sin(p.theta)
    inv2t1 = p.omega1p * c * c + p.omega2p * s * s
    inv2t2 = p.omega2p * c * c + p.omega1p * s * s
    tau1 = math.sqrt(0.5 / inv2t1)
    tau2 = math.sqrt(0.5 / inv2t2)
    inv_g = 2.0 * (p.omega2p - p.omega1p) * s * c
    beta = tau2 ** 2 * inv_g ** 2 / 4.0
    gamma = inv2t1 - beta
    params = HarmonicReducedParams(tau1, tau2, inv_g, gamma, beta)
    mix = params.mixing
    assert gamma > abs(beta), "reduced Gaussian kernel must be normalisable"
    var = tau1 ** 2 / (1.0 - mix)
    pur = math.sqrt(1.0 - mix)
    alt = 1.0 / (4.0 * (gamma ** 2 - beta ** 2))
    return HarmonicReduced(params, gaussian_reduced_kernel(gamma, beta), var, pur, alt)


def harmonic_joint_psi0(x1, x2, p: HarmonicPair):
    """Product of the two oscillator ground states, written in the x frame."""
    y1, y2 = x_to_y(x1, x2, p.theta)
    norm = (p.omega1p * p.omega2p) ** 0.25 / math.sqrt(math.pi)
    return norm * np.exp(-0.5 * (p.omega1p * y1 * y1 + p.omega2p * y2 * y2))


# ---------------------------------------------------------------------------
# single-oscillator windows and kernels
# ---------------------------------------------------------------------------

def state_window(c, cutoff=WINDOW_CUTOFF):
    """Half-width beyond which ``psi_0(y; c)^2`` is below ``cutoff`` times its peak."""
    peak = 0.5 * c * c if c < 0 else 0.0
    t = -c + math.sqrt(c * c - 2.0 * (peak + math.log(cutoff)))
    return math.sqrt(t)


def pure_state_kernel(c, window=None):
    """``psi_0(x) psi_0(x')`` for the single sextic ground state."""
    la = qes.log_norm_A(c)

    def shape(x):
        x2 = x * x
        return -0.25 * x2 * x2 - 0.5 * c * x2

    def rho(x, xp):
        return np.exp(2.0 * la + shape(x) + shape(xp))

    L = state_window(c) if window is None else window
    return DensityKernel(rho, L, f"pure(c={c:.6g})")


# ---------------------------------------------------------------------------
# sextic pair
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnharmonicPair:
    c1: float
    c2: float
    theta: float
    common_a: float = 1.0

    def __post_init__(self):
        if not self.common_a > 0.0:
            raise DomainError("common sextic strength must be positive")

    @property
    def identical(self):
        return self.c1 == self.c2

    @property
    def is_identical_pi4(self):
        return self.identical and abs(self.theta - math.pi / 4) < 1e-15


def _log_shape(y, c):
    y2 = y * y
    return -0.25 * y2 * y2 - 0.5 * c * y2


def joint_psi0(x1, x2, p: AnharmonicPair, form="general"):
    """Joint ground state in the coupled frame (rescaled units).

    ``form='pi4'`` uses the expanded identical-oscillator exponent
    ``-(c/2)(x1^2+x2^2) - (x1^4 + 6 x1^2 x2^2 + x2^4)/8``.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    la = qes.log_norm_A(p.c1) + qes.log_norm_A(p.c2)
    if form == "pi4":
        if not p.identical:
            raise DomainError("the pi/4 form needs identical oscillators")
        c = p.c1
        a2, b2 = x1 * x1, x2 * x2
        out = np.exp(la - 0.5 * c * (a2 + b2) - 0.125 * (a2 * a2 + 6.0 * a2 * b2 + b2 * b2))
    else:
        y1, y2 = x_to_y(x1, x2, p.theta)
        out = np.exp(la + _log_shape(y1, p.c1) + _log_shape(y2, p.c2))
    return float(out) if out.ndim == 0 else out


def pair_window(p: AnharmonicPair, cutoff=WINDOW_CUTOFF):
    """``(L1, R)``: half-width for ``x1`` and radius enclosing the joint support."""
    Y1, Y2 = state_window(p.c1, cutoff), state_window(p.c2, cutoff)
    c, s = abs(math.cos(p.theta)), abs(math.sin(p.theta))
    return c * Y1 + s * Y2, math.hypot(Y1, Y2)


_SERIES_U = 1e-4


def x2_integral(u):
    """``int exp(-t^4/4 - u t^2/4) dt`` over the real line (equals ``f(u)/2``)."""
    u = np.asarray(u, dtype=float)
    return 0.5 * np.exp(_log_kernel_factor(u))


def _log_kernel_factor(u):
    """``log f(u)`` with ``f`` the piecewise Bessel factor of the pi/4 kernel."""
    u = np.asarray(u, dtype=float)
    out = np.empty(u.shape)
    pos = u > _SERIES_U
    neg = u < -_SERIES_U
    mid = ~(pos | neg)
    if np.any(pos):
        up = u[pos]
        out[pos] = 0.5 * np.log(up) + np.log(sc.kve(0.25, up * up / 32.0))
    if np.any(neg):
        un = u[neg]
        z = un * un / 32.0
        out[neg] = (math.log(math.pi) + 0.5 * np.log(-0.5 * un) + 2.0 * z
                    + np.log(sc.ive(-0.25, z) + sc.ive(0.25, z)))
    if np.any(mid):
        # Taylor series of 2 * int exp(-t^4/4 - u t^2/4) dt around u = 0
        um = u[mid]
        acc = np.zeros_like(um)
        for k in range(8):
            mom = 2.0 * 4.0 ** ((2 * k + 1) / 4.0) / 4.0 * math.gamma((2 * k + 1) / 4.0)
            acc += (-um / 4.0) ** k / math.factorial(k) * mom
        out[mid] = np.log(2.0 * acc)
    return out


def kernel_factor(u):
    """Piecewise Bessel factor ``f(u)``; continuous, ``f(0) = sqrt(2) Gamma(1/4)``."""
    out = np.exp(_log_kernel_factor(u))
    return float(out) if np.ndim(out) == 0 else out


def reduced_identical_pi4(x1, x1p, c):
    """Closed-form reduced kernel of identical sextic oscillators mixed at pi/4.

    ``rho = (1/2) A(c)^4 exp(-c/2 (x^2+x'^2) - (x^4+x'^4)/8) f(u)`` with
    ``u = 4c + 3(x^2 + x'^2)``.
    """
    x1 = np.asarray(x1, dtype=float)
    x1p = np.asarray(x1p, dtype=float)
    s2 = x1 * x1 + x1p * x1p
    s4 = x1 ** 4 + x1p ** 4
    u = 4.0 * c + 3.0 * s2
    logv = 4.0 * qes.log_norm_A(c) - math.log(2.0) - 0.5 * c * s2 - 0.125 * s4 + _log_kernel_factor(u)
    out = np.exp(logv)
    return float(out) if out.ndim == 0 else out


def identical_pi4_kernel(c, window=None):
    p = AnharmonicPair(c, c, math.pi / 4)
    L = pair_window(p)[0] if window is None else window
    return DensityKernel(lambda x, xp: reduced_identical_pi4(x, xp, c), L, f"identical_pi4(c={c:.6g})")


def _x2_rule(R, n_panels, order=16):
    edges = np.linspace(-R, R, n_panels + 1)
    x, w = roots_legendre(order)
    mid = 0.5 * (edges[:-1] + edges[1:])
    hw = 0.5 * (edges[1:] - edges[:-1])
    return (mid[:, None] + hw[:, None] * x).ravel(), (hw[:, None] * w).ravel()


class _JointKernel:
    """Kernel ``int psi(x, t) psi(x', t) dt`` evaluated with a converged fixed rule.

    The ``t`` rule (composite Gauss-Legendre on ``[-R, R]``) is refined by
    doubling the panel count until all sampled entries change by less than
    ``rtol`` of the largest entry; the same rule then serves every entry.
    """

    def __init__(self, psi, R, rtol=1e-10, n_panels=32, max_panels=4096):
        self.psi, self.R, self.rtol = psi, R, rtol
        self.n_panels = n_panels
        self.max_panels = max_panels
        self.converged_change = math.nan

    def _eval(self, xs, n_panels):
        t, w = _x2_rule(self.R, n_panels)
        P = self.psi(xs[:, None], t[None, :])
        return (P * w[None, :]) @ P.T

    def diagonal(self, xs):
        """``rho(x, x)`` only, with the same panel refinement as :meth:`matrix`."""
        xs = np.asarray(xs, dtype=float)
        n_panels = self.n_panels

        def ev(npan):
            t, w = _x2_rule(self.R, npan)
            P = self.psi(xs[:, None], t[None, :])
            return (P * P) @ w

        cur = ev(n_panels)
        while True:
            n_panels *= 2
            if n_panels > self.max_panels:
                raise AccuracyError("trace-out quadrature did not converge")
            nxt = ev(n_panels)
            scale = np.max(np.abs(nxt))
            if scale == 0 or np.max(np.abs(nxt - cur)) <= self.rtol * scale:
                return nxt
            cur = nxt

    def matrix(self, xs):
        n_panels = self.n_panels
        cur = self._eval(xs, n_panels)
        while True:
            n_panels *= 2
            if n_panels > self.max_panels:
                raise AccuracyError("trace-out quadrature did not converge",
                                    estimate=None, error=self.converged_change)
            nxt = self._eval(xs, n_panels)
            scale = np.max(np.abs(nxt))
            change = float(np.max(np.abs(nxt - cur)) / scale) if scale > 0 else 0.0
            cur = nxt
            if change <= self.rtol:
                self.converged_change = change
                self.n_panels = n_panels // 2
                return cur

    def __call__(self, x, xp):
        x = np.asarray(x, dtype=float)
        xp = np.asarray(xp, dtype=float)
        if x.ndim == 1 and x.shape == xp.shape and np.array_equal(x, xp):
            return self.diagonal(x)
        if x.ndim == 2 and xp.ndim == 2 and x.shape[1] == 1 and xp.shape[0] == 1:
            xs, xps = x[:, 0], xp[0]
            if xs.shape == xps.shape and np.array_equal(xs, xps):
                return self.matrix(xs)
        bx, bxp = np.broadcast_arrays(x, xp)
        flat = np.concatenate([bx.ravel(), bxp.ravel()])
        uniq, inv = np.unique(flat, return_inverse=True)
        M = self.matrix(uniq)
        n = bx.size
        return M[inv[:n], inv[n:]].reshape(bx.shape)


def reduced_from_joint(psi, L, R, *, rtol=1e-10, label="joint"):
    """Reduced kernel of a real joint wavefunction ``psi(x1, x2)`` as a :class:`DensityKernel`."""
    return DensityKernel(_JointKernel(psi, R, rtol), L, label)


def reduced_numeric(p: AnharmonicPair, L=None, N=513, *, rtol=1e-10, normalize=True,
                    estimate_error=True) -> GridKernel:
    """Numerically traced-out reduced kernel of a sextic pair on a Simpson grid."""
    L0, R = pair_window(p)
    L = L0 if L is None else L
    kern = reduced_from_joint(lambda a, b: joint_psi0(a, b, p), L, R, rtol=rtol,
                              label=f"numeric(c1={p.c1:.6g}, c2={p.c2:.6g}, theta={p.theta:.6g})")
    return discretize_kernel(kern, L, N, normalize=normalize, estimate_error=estimate_error)


def auto_discretize(kernel: DensityKernel, L=None, N=513, tol=1e-9, N_max=8193):
    """Discretise, doubling the node count until the grid error estimate is below ``tol``."""
    while True:
        grid = discretize_kernel(kernel, L, N)
        if grid.error_estimate <= tol:
            return grid
        if 2 * N - 1 > N_max:
            raise AccuracyError(f"grid error {grid.error_estimate:.2e} above {tol:.1e} at N={N}",
                                estimate=grid.purity(), error=grid.error_estimate)
        N = 2 * N - 1


def purity(rho: GridKernel):
    return rho.purity()


# ---------------------------------------------------------------------------
# moments of the reduced state
# ---------------------------------------------------------------------------

def reduced_moment_exact(order, p: AnharmonicPair, which=1):
    """Reduced raw moment from single-oscillator moments (binomial expansion).

    ``x1 = cos(t) y1 + sin(t) y2`` with independent, even ``y1, y2``, so only
    even powers of each survive.
    """
    if order % 2:
        return 0.0
    n = order // 2
    c, s = math.cos(p.theta), math.sin(p.theta)
    if which == 2:
        c, s = s, c
    total = 0.0
    for k in range(n + 1):
        total += (comb(2 * n, 2 * k) * c ** (2 * k) * s ** (2 * n - 2 * k)
                  * qes.raw_moment(2 * k, p.c1) * qes.raw_moment(2 * n - 2 * k, p.c2))
    return total


def reduced_moment(order, p: AnharmonicPair, which=1, *, method="quadrature", rtol=1e-11):
    """``<x_which^order>`` of the joint ground state.

    ``method='quadrature'`` integrates ``x^order psi_0^2`` with the adaptive
    2D cubature; ``method='exact'`` uses :func:`reduced_moment_exact`.
    """
    if int(order) != order or order < 0 or order % 2 or order > 16:
        raise DomainError("order must be even and at most 16")
    if method == "exact":
        return reduced_moment_exact(order, p, which)
    if method != "quadrature":
        raise DomainError("method must be 'quadrature' or 'exact'")
    _, R = pair_window(p, 1e-20)
    la = 2.0 * (qes.log_norm_A(p.c1) + qes.log_norm_A(p.c2))
    # centre the exponent so the largest density value is O(1)
    shift = sum(0.5 * c * c if c < 0 else 0.0 for c in (p.c1, p.c2))

    def dens(x1, x2):
        y1, y2 = x_to_y(x1, x2, p.theta)
        return np.exp(2.0 * (_log_shape(y1, p.c1) + _log_shape(y2, p.c2)) - shift)

    if which == 1:
        f = lambda a, b: a ** order * dens(a, b)
    else:
        f = lambda a, b: b ** order * dens(a, b)
    res = integrate_2d(f, (-R, R), (-R, R), rtol=rtol, n_init=(8, 8), limit=20_000)
    return res.value * math.exp(la + shift)


def reduced_excess(order, p: AnharmonicPair, which=1, method="quadrature"):
    n = order // 2
    var = reduced_moment(2, p, which, method=method)
    return reduced_moment(order, p, which, method=method) / var ** n - sf.double_factorial(order - 1)


@dataclass
class VarianceRelation:
    var_x1: float
    var_x2: float
    var_y1: float
    var_y2: float
    sum_check: float
    piecewise_prediction: tuple
    deviation: tuple
    exact_prediction: tuple = field(default=(math.nan, math.nan))


def _piecewise(v1, v2, theta):
    lo = min(v1, v2)
    d = abs(v2 - v1)
    return d * math.sin(theta) ** 2 + lo, d * math.cos(theta) ** 2 + lo


def variance_relation(p: AnharmonicPair, method="quadrature"):
    """Reduced variances against the sum identity and the piecewise rule.

    ``piecewise_prediction`` uses ``|V2 - V1| sin^2 + min(V1, V2)`` (and the
    cos^2 analogue for ``x2``); ``exact_prediction`` is
    ``cos^2 V1 + sin^2 V2`` for ``x1``.
    """
    v1, v2 = qes.variance(p.c1), qes.variance(p.c2)
    vx1 = reduced_moment(2, p, 1, method=method)
    vx2 = reduced_moment(2, p, 2, method=method)
    pred = _piecewise(v1, v2, p.theta)
    c2, s2 = math.cos(p.theta) ** 2, math.sin(p.theta) ** 2
    exact = (c2 * v1 + s2 * v2, s2 * v1 + c2 * v2)
    dev = (abs(pred[0] - vx1) / vx1, abs(pred[1] - vx2) / vx2)
    return VarianceRelation(vx1, vx2, v1, v2, abs(vx1 + vx2 - v1 - v2), pred, dev, exact)


def approx_moments_nonid(order, p: AnharmonicPair, which=1, excess=False):
    """Piecewise approximation to reduced moments of a non-identical pair.

    Returns ``(value, flag)`` with ``flag`` either ``'valid'`` or
    ``'degraded'``; the latter when ``|c1 - c2| < 1`` where the rule is
    known to break down.
    """
    if int(order) != order or order < 2 or order % 2:
        raise DomainError("order must be even and >= 2")
    m1, m2 = qes.raw_moment(order, p.c1), qes.raw_moment(order, p.c2)
    theta = p.theta
    mu = _piecewise(m1, m2, theta)[which - 1]
    flag = "degraded" if abs(p.c1 - p.c2) < 1.0 else "valid"
    if not excess:
        return mu, flag
    v = _piecewise(qes.variance(p.c1), qes.variance(p.c2), theta)[which - 1]
    return mu / v ** (order // 2) - sf.double_factorial(order - 1), flag


# ---------------------------------------------------------------------------
# coupled-frame Hamiltonian coefficients
# ---------------------------------------------------------------------------

@dataclass
class CoupledCoefficients:
    """Coefficients of ``x1^i x2^j`` in ``V1(y1) + V2(y2)`` written in the x frame."""

    theta: float
    lambda_ij: dict
    constant: float

    @property
    def p(self):
        return math.cos(self.theta) ** 2

    def coef(self, i, j):
        return self.lambda_ij.get((i, j), 0.0)

    def pair(self, i, j):
        """``(lambda_{ij,1}, lambda_{ij,2})`` = coefficients of ``x1^i x2^j`` and ``x1^j x2^i``."""
        return self.coef(i, j), self.coef(j, i)

    def mixing(self, i, j):
        """``(alpha, beta)`` with ``pair = [[p, 1-p], [1-p, p]] @ (alpha, beta)``.

        Undetermined at ``p = 1/2`` (returns ``None``).
        """
        p = self.p
        det = 2.0 * p - 1.0
        if abs(det) < 1e-12:
            return None
        l1, l2 = self.pair(i, j)
        return (p * l1 - (1 - p) * l2) / det, (p * l2 - (1 - p) * l1) / det

    def mixing_residual(self):
        """Largest violation of the mixing structure over all ``i < j`` pairs."""
        worst = 0.0
        for i in range(7):
            for j in range(i + 1, 7):
                if (i + j) % 2 or i + j > 6:
                    continue
                l1, l2 = self.pair(i, j)
                scale = max(1.0, abs(l1), abs(l2))
                ab = self.mixing(i, j)
                if ab is None:
                    # at p = 1/2 the structure forces equal components
                    worst = max(worst, abs(l1 - l2) / scale)
                    continue
                a, b = ab
                p = self.p
                r1 = p * a + (1 - p) * b - l1
                r2 = (1 - p) * a + p * b - l2
                worst = max(worst, abs(r1) / scale, abs(r2) / scale)
        return worst


def _single_poly(a, b, n=0, k=0):
    """Coefficients ``{power: value}`` of the unrescaled sextic potential."""
    return {6: a * a, 4: 2.0 * a * b, 2: b * b - a * (4 * n + 2 * k + 3), 0: -b * (1 + 2 * k)}


def expand_coupled_hamiltonian(a1, a2, b1, b2, theta, n=0):
    """Expand ``V(y1; a1, b1) + V(y2; a2, b2)`` in powers of ``x1, x2``.

    Each ``(c x1 - s x2)^m`` and ``(s x1 + c x2)^m`` is expanded binomially,
    so the coefficients are exact up to floating-point rounding.
    """
    if not (a1 > 0 and a2 > 0):
        raise DomainError("sextic strengths must be positive")
    c, s = math.cos(theta), math.sin(theta)
    coef = {}
    for (a, b, u, v) in ((a1, b1, c, -s), (a2, b2, s, c)):
        for m, val in _single_poly(a, b, n).items():
            if m == 0:
                continue
            for k in range(m + 1):
                key = (m - k, k)
                coef[key] = coef.get(key, 0.0) + val * comb(m, k) * u ** (m - k) * v ** k
    const = -(b1 + b2)
    return CoupledCoefficients(theta, coef, const)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def kurtosis_sweep(c1, c2_values, thetas):
    """Reduced ``nu_4(x1)`` over a ``(c2, theta)`` grid, plus the parents' values.

    Returns ``(grid, nu4_parent1, nu4_parent2)`` with ``grid[i, j]`` at
    ``c2_values[i], thetas[j]``.
    """
    c2_values = list(c2_values)
    thetas = list(thetas)
    out = np.empty((len(c2_values), len(thetas)))
    for i, c2 in enumerate(c2_values):
        for j, th in enumerate(thetas):
            out[i, j] = reduced_excess(4, AnharmonicPair(c1, c2, th), method="exact")
    parents2 = np.array([qes.excess_moment(4, c2) for c2 in c2_values])
    return out, qes.excess_moment(4, c1), parents2


def variance_ratio_sweep(c1, c2_values, theta=math.pi / 4):
    """``Var(x1) / Var(y1)`` as a function of ``c2`` at fixed angle."""
    v1 = qes.variance(c1)
    return np.array([reduced_moment_exact(2, AnharmonicPair(c1, c2, theta)) / v1 for c2 in c2_values])
