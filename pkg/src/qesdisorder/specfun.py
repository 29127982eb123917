r"""Special functions needed by the sextic-oscillator closed forms.

Everything here works in double precision.  Functions whose natural size
overflows (``exp(c**2/4) * K_{1/4}(c**2/4)`` and friends at ``|c| ~ 50``) are
exposed through scaled or logarithmic variants so that callers never have to
form the raw value.

The modified Bessel functions are delegated to :func:`scipy.special.ive` and
:func:`scipy.special.kve`, which already return exponentially scaled values.
The confluent hypergeometric functions are implemented here because the
library versions overflow long before ``z = c**2/2 = 1250``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .errors import AccuracyError, CapabilityError, DomainError

__all__ = [
    "ScaledBesselValue",
    "gamma",
    "ln_gamma",
    "double_factorial",
    "bessel_i_scaled",
    "bessel_k_scaled",
    "exp_bessel_k_quarter",
    "log_exp_bessel_i_quarter_sum",
    "kummer_1f1",
    "kummer_1f1_scaled",
    "tricomi_u",
    "hermite_normalized",
    "hermite_functions",
    "HERMITE_N_MAX",
]

KUMMER_TERM_LIMIT = 100_000
TRICOMI_SUBDIVISION_LIMIT = 10_000
HERMITE_N_MAX = 128
MAX_BESSEL_ORDER = 2.0

_RESCALE = 1e150


# --------------------------------------------------------------------------
# Gamma and factorial-type helpers
# --------------------------------------------------------------------------

def gamma(x):
    """Gamma function for real ``x`` away from the poles."""
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise DomainError(f"gamma has a pole at {x}")
    return math.gamma(x)


def ln_gamma(x):
    """Natural log of the gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"ln_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def double_factorial(n):
    """``n!!`` for integer ``n >= -1`` (with ``(-1)!! = 0!! = 1``)."""
    n = int(n)
    if n < -1:
        raise DomainError(f"double factorial undefined for n={n}")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


# --------------------------------------------------------------------------
# Modified Bessel functions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaledBesselValue:
    """A Bessel value stored as ``scaled_value * exp(log_scale)``.

    For ``I_nu`` the scaled value is ``exp(-z) I_nu(z)`` and ``log_scale = z``;
    for ``K_nu`` it is ``exp(z) K_nu(z)`` and ``log_scale = -z``.
    """

    nu: float
    z: float
    scaled_value: float
    log_scale: float

    @property
    def log_value(self):
        return math.log(self.scaled_value) + self.log_scale

    @property
    def value(self):
        """The unscaled value; ``inf`` or ``0.0`` when out of range."""
        try:
            return self.scaled_value * math.exp(self.log_scale)
        except OverflowError:
            return math.inf


def _check_order(nu):
    nu = float(nu)
    if abs(nu) > MAX_BESSEL_ORDER:
        raise CapabilityError(f"Bessel order {nu} outside supported range |nu| <= {MAX_BESSEL_ORDER}")
    return nu


def bessel_i_scaled(nu, z):
    """``exp(-z) I_nu(z)`` for ``z >= 0`` packaged as :class:`ScaledBesselValue`."""
    nu = _check_order(nu)
    z = float(z)
    if z < 0.0:
        raise DomainError(f"bessel_i_scaled requires z >= 0, got {z}")
    return ScaledBesselValue(nu, z, float(sc.ive(nu, z)), z)


def bessel_k_scaled(nu, z):
    """``exp(z) K_nu(z)`` for ``z > 0`` packaged as :class:`ScaledBesselValue`."""
    nu = _check_order(nu)
    z = float(z)
    if not z > 0.0:
        raise DomainError(f"bessel_k_scaled requires z > 0, got {z}")
    return ScaledBesselValue(nu, z, float(sc.kve(nu, z)), -z)


def exp_bessel_k_quarter(z):
    """``exp(z) K_{1/4}(z)``; finite for every ``z > 0``. Accepts arrays."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0.0):
        raise DomainError("exp_bessel_k_quarter requires z > 0")
    out = sc.kve(0.25, z)
    return float(out) if out.ndim == 0 else out


def log_exp_bessel_i_quarter_sum(z):
    """``log[exp(z) (I_{-1/4}(z) + I_{1/4}(z))]`` for ``z >= 0``. Accepts arrays.

    The product itself grows like ``exp(2 z)`` so only its logarithm is
    returned.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0.0):
        raise DomainError("log_exp_bessel_i_quarter_sum requires z >= 0")
    with np.errstate(divide="ignore"):
        out = 2.0 * z + np.log(sc.ive(-0.25, z) + sc.ive(0.25, z))
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# Kummer 1F1
# --------------------------------------------------------------------------

def _is_nonpositive_int(x):
    return x <= 0.0 and x == math.floor(x)


def _m_series(a, b, z, max_terms=KUMMER_TERM_LIMIT):
    """Power series for M(a, b, z) as ``(mantissa, log_scale)``.

    Terms are rescaled on the fly so large positive ``z`` never overflows.
    """
    total = 1.0
    term = 1.0
    log_scale = 0.0
    for k in range(max_terms):
        if a + k == 0.0:
            return total, log_scale
        term *= (a + k) * z / ((b + k) * (k + 1))
        total += term
        if abs(term) <= 1e-17 * abs(total) and k > z:
            return total, log_scale
        if abs(total) > _RESCALE:
            total /= _RESCALE
            term /= _RESCALE
            log_scale += math.log(_RESCALE)
    raise AccuracyError(
        f"1F1({a}, {b}, {z}) series did not converge in {max_terms} terms",
        estimate=total * math.exp(min(log_scale, 700.0)),
        error=abs(term) * math.exp(min(log_scale, 700.0)),
    )


def _m_asymptotic(a, b, z):
    """Large positive ``z`` expansion of M(a, b, z) as ``(mantissa, log_scale)``.

    Returns ``None`` when the divergent series cannot reach full precision.
    """
    if _is_nonpositive_int(a):
        return None
    total = 1.0
    term = 1.0
    prev = math.inf
    for k in range(200):
        term *= (b - a + k) * (1.0 - a + k) / ((k + 1) * z)
        if term == 0.0:
            break
        if abs(term) > prev:
            return None
        total += term
        prev = abs(term)
        if abs(term) <= 1e-17 * abs(total):
            break
    else:
        return None
    sign = sc.gammasgn(b) * sc.gammasgn(a)
    log_scale = z + (a - b) * math.log(z) + sc.gammaln(b) - sc.gammaln(a)
    return sign * total, log_scale


def _m_scaled_parts(a, b, z):
    if _is_nonpositive_int(b):
        raise DomainError(f"1F1 undefined for b = {b}")
    if z < 0.0:
        # Kummer transformation keeps every series term positive.
        mant, ls = _m_scaled_parts(b - a, b, -z)
        return mant, ls + z
    if z >= 40.0:
        asym = _m_asymptotic(a, b, z)
        if asym is not None:
            return asym
    return _m_series(a, b, z)


def kummer_1f1(a, b, z):
    """Confluent hypergeometric function M(a, b, z) = 1F1(a; b; z)."""
    mant, ls = _m_scaled_parts(float(a), float(b), float(z))
    try:
        return mant * math.exp(ls)
    except OverflowError:
        return math.copysign(math.inf, mant)


def kummer_1f1_scaled(a, b, z):
    """``exp(-z) * 1F1(a; b; z)`` for ``z >= 0``; finite where 1F1 overflows."""
    z = float(z)
    if z < 0.0:
        raise DomainError("kummer_1f1_scaled is defined for z >= 0")
    mant, ls = _m_scaled_parts(float(a), float(b), z)
    return mant * math.exp(ls - z)


# --------------------------------------------------------------------------
# Tricomi U
# --------------------------------------------------------------------------

def _u_asymptotic(a, b, z):
    total = 1.0
    term = 1.0
    prev = math.inf
    for k in range(200):
        term *= -(a + k) * (a - b + 1.0 + k) / ((k + 1) * z)
        if term == 0.0:
            break
        if abs(term) > prev:
            return None
        total += term
        prev = abs(term)
        if abs(term) <= 1e-17 * abs(total):
            break
    else:
        return None
    return total * z ** (-a)


def _u_connection(a, b, z):
    """U from two Kummer functions; loses ~z/ln(10) digits, so keep z small."""
    if b == math.floor(b):
        raise CapabilityError("connection formula needs non-integer b")
    first = sc.gamma(1.0 - b) * sc.rgamma(a - b + 1.0) * kummer_1f1(a, b, z)
    second = sc.gamma(b - 1.0) * sc.rgamma(a) * z ** (1.0 - b) * kummer_1f1(a - b + 1.0, 2.0 - b, z)
    return first + second


def _u_integral(a, b, z, rtol=1e-13):
    from .quadrature import integrate_1d

    if a < 1.0:
        # t = s**(1/a) removes the t**(a-1) endpoint singularity.
        p = 1.0 / a

        def f(s):
            t = s ** p
            return np.exp(-z * t) * (1.0 + t) ** (b - a - 1.0)

        scale = 1.0 / sc.gamma(a + 1.0)
    else:
        def f(t):
            return np.exp(-z * t) * t ** (a - 1.0) * (1.0 + t) ** (b - a - 1.0)

        scale = 1.0 / sc.gamma(a)
    res = integrate_1d(f, 0.0, math.inf, rtol=rtol, limit=TRICOMI_SUBDIVISION_LIMIT)
    return scale * res.value


def tricomi_u(a, b, z, method="auto"):
    """Tricomi confluent hypergeometric function U(a, b, z) for a > 0, z > 0.

    Parameters
    ----------
    method : {"auto", "integral", "connection", "asymptotic"}
        ``integral`` evaluates the Laplace-type representation
        ``U = Gamma(a)^-1 int_0^inf exp(-z t) t^(a-1) (1+t)^(b-a-1) dt``
        adaptively.  ``auto`` uses the asymptotic series for large ``z`` when it
        converges, the Kummer connection formula for ``z <= 1`` and the integral
        otherwise.
    """
    a, b, z = float(a), float(b), float(z)
    if not a > 0.0:
        raise DomainError(f"tricomi_u requires a > 0, got {a}")
    if not z > 0.0:
        raise DomainError(f"tricomi_u requires z > 0, got {z}")
    if method == "integral":
        return _u_integral(a, b, z)
    if method == "connection":
        return _u_connection(a, b, z)
    if method == "asymptotic":
        out = _u_asymptotic(a, b, z)
        if out is None:
            raise AccuracyError(f"asymptotic U({a}, {b}, {z}) does not reach full precision")
        return out
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if z >= 40.0:
        out = _u_asymptotic(a, b, z)
        if out is not None:
            return out
    if z <= 1.0 and b != math.floor(b):
        return _u_connection(a, b, z)
    return _u_integral(a, b, z)


# --------------------------------------------------------------------------
# Hermite functions
# --------------------------------------------------------------------------

def hermite_functions(n_max, x, omega=1.0):
    r"""Normalised oscillator eigenfunctions ``phi_0 .. phi_{n_max}`` at ``x``.

    ``phi_n(x) = (omega/pi)^{1/4} (2^n n!)^{-1/2} H_n(x sqrt(omega)) exp(-omega x^2/2)``
    evaluated with the orthonormal three-term recurrence.  The Gaussian factor
    is carried as a separate log scale so nothing underflows prematurely.

    Returns
    -------
    ndarray of shape ``(n_max + 1,) + x.shape``
    """
    n_max = int(n_max)
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    if n_max > HERMITE_N_MAX:
        raise CapabilityError(f"n_max={n_max} exceeds supported {HERMITE_N_MAX}")
    if not omega > 0.0:
        raise DomainError("omega must be positive")
    x = np.asarray(x, dtype=float)
    t = x * math.sqrt(omega)
    log_scale = -0.5 * t * t
    out = np.empty((n_max + 1,) + x.shape)
    prev = np.zeros_like(t)
    cur = np.ones_like(t)
    norm0 = (omega / math.pi) ** 0.25
    out[0] = norm0 * np.exp(log_scale)
    for n in range(1, n_max + 1):
        nxt = math.sqrt(2.0 / n) * t * cur - math.sqrt((n - 1) / n) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if np.any(big):
            prev = np.where(big, prev / _RESCALE, prev)
            cur = np.where(big, cur / _RESCALE, cur)
            log_scale = np.where(big, log_scale + math.log(_RESCALE), log_scale)
        out[n] = norm0 * cur * np.exp(log_scale)
    return out


def hermite_normalized(n, x, omega=1.0, n_max=HERMITE_N_MAX):
    """Single normalised oscillator eigenfunction ``phi_n(x)`` at frequency ``omega``."""
    n = int(n)
    if n < 0:
        raise DomainError("n must be non-negative")
    if n > n_max:
        raise CapabilityError(f"n={n} exceeds configured n_max={n_max}")
    vals = hermite_functions(n, x, omega)[n]
    return float(vals) if vals.ndim == 0 else vals
