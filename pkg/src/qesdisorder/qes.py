"""Single sextic oscillator with an exactly known ground state.

The potential family is ``a^2 y^6 + 2ab y^4 + [b^2 - a(4n+2k+3)] y^2 - b(1+2k)``.
After rescaling ``y -> a^{1/4} y`` and ``c = b / sqrt(a)`` the ground state
(``n = k = 0``) is ``psi_0(y) = A(c) exp(-y^4/4 - c y^2/2)`` and every
quantity depends on the single shape parameter ``c``.

All exponentially large Bessel and Kummer factors are carried in scaled
form so that ``|c|`` up to a few hundred stays finite.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sc

from . import specfun as sf
from .errors import AccuracyError, CapabilityError, DomainError, SingularRatioError
from .quadrature import integrate_1d

__all__ = [
    "SexticParams",
    "RescaledC",
    "WellClass",
    "MomentReport",
    "MAX_MOMENT_ORDER",
    "ZERO_C",
    "rescale",
    "unscale_moment",
    "potential",
    "potential_unscaled",
    "potential_derivative",
    "count_extrema",
    "classify_well",
    "norm_A",
    "log_norm_A",
    "ground_psi",
    "ground_density",
    "raw_moment",
    "raw_moment_oracle",
    "variance",
    "excess_moment",
    "excess_moment_closed",
    "moment_ratio",
    "moment_report",
]

MAX_MOMENT_ORDER = 32
ZERO_C = 1e-12
SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class SexticParams:
    """Unrescaled parameters of the sextic family.

    Only ``n = k = 0`` has a closed-form ground state here; other levels are
    accepted for evaluating the potential alone.
    """

    a: float
    b: float
    n: int = 0
    k: int = 0

    def __post_init__(self):
        if not self.a > 0.0:
            raise DomainError("sextic strength a must be positive")
        if self.k not in (0, 1):
            raise DomainError("parity sector k must be 0 or 1")
        if int(self.n) != self.n or self.n < 0:
            raise DomainError("QES level n must be a non-negative integer")

    @property
    def c(self):
        return self.b / math.sqrt(self.a)

    @property
    def is_ground_sector(self):
        return self.n == 0 and self.k == 0


@dataclass(frozen=True)
class RescaledC:
    """Shape parameter ``c`` together with the sextic strength used to reach it."""

    c: float
    a: float = 1.0

    @property
    def length_scale(self):
        """Factor ``a^{1/4}`` with ``y = a^{1/4} * y_tilde``."""
        return self.a ** 0.25

    def to_params(self):
        return SexticParams(self.a, self.c * math.sqrt(self.a))


class WellClass(enum.Enum):
    SingleWell = "single"
    DoubleWell = "double"
    TripleWell = "triple"


def rescale(p: SexticParams) -> RescaledC:
    return RescaledC(p.c, p.a)


def unscale_moment(m, order, a):
    """Convert ``<y^order>`` in rescaled units to ``<y_tilde^order>``."""
    if not a > 0.0:
        raise DomainError("a must be positive")
    return m / a ** (order / 4.0)


def potential(y, c):
    """Rescaled potential ``y^6 + 2c y^4 + (c^2 - 3) y^2 - c``."""
    y2 = np.asarray(y, dtype=float) ** 2
    out = ((y2 + 2.0 * c) * y2 + (c * c - 3.0)) * y2 - c
    return float(out) if np.ndim(out) == 0 else out


def potential_unscaled(yt, p: SexticParams):
    y2 = np.asarray(yt, dtype=float) ** 2
    a, b = p.a, p.b
    quad = b * b - a * (4 * p.n + 2 * p.k + 3)
    out = ((a * a * y2 + 2.0 * a * b) * y2 + quad) * y2 - b * (1 + 2 * p.k)
    return float(out) if np.ndim(out) == 0 else out


def potential_derivative(y, c):
    y = np.asarray(y, dtype=float)
    y2 = y * y
    return 2.0 * y * ((3.0 * y2 + 4.0 * c) * y2 + c * c - 3.0)


def count_extrema(c, n_grid=20001):
    """Number of real extrema of the rescaled potential.

    Sign changes of the analytic derivative are located on a uniform grid
    (odd size, so ``y = 0`` is a node) and each bracket is confirmed by
    bisection.  Returns the sorted extremum locations.
    """
    radius = 2.0 + math.sqrt(abs(c) + 3.0)
    y = np.linspace(-radius, radius, n_grid | 1)
    d = potential_derivative(y, c)
    roots = []
    s = np.sign(d)
    i = 0
    while i < len(y) - 1:
        if s[i] == 0.0:
            left = s[i - 1] if i > 0 else 0.0
            j = i
            while j < len(y) - 1 and s[j] == 0.0:
                j += 1
            if left * s[j] < 0:
                roots.append(float(y[(i + j - 1) // 2]))
            i = j
            continue
        if s[i] * s[i + 1] < 0:
            lo, hi = y[i], y[i + 1]
            flo = d[i]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                fm = float(potential_derivative(mid, c))
                if fm == 0.0:
                    lo = hi = mid
                    break
                if (fm < 0) == (flo < 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
        i += 1
    return roots


def classify_well(c) -> WellClass:
    if c < -SQRT3:
        return WellClass.TripleWell
    if c < SQRT3:
        return WellClass.DoubleWell
    return WellClass.SingleWell


# ---------------------------------------------------------------------------
# normalisation and ground state
# ---------------------------------------------------------------------------

def _is_zero(c):
    return abs(c) < ZERO_C


def log_norm_A(c):
    """``log A(c)``; finite far beyond the range where ``A`` itself underflows."""
    c = float(c)
    if _is_zero(c):
        return 0.375 * math.log(2.0) - 0.5 * math.log(sf.gamma(0.25))
    z = 0.25 * c * c
    if c > 0:
        return 0.25 * math.log(2.0 / c) - 0.5 * math.log(float(sf.exp_bessel_k_quarter(z)))
    # exp(c^2/4) (I_{-1/4} + I_{1/4})(c^2/4) = exp(c^2/2) * (ive sum)
    return 0.25 * math.log(-4.0 / (math.pi ** 2 * c)) - 0.5 * float(sf.log_exp_bessel_i_quarter_sum(z))


def norm_A(c):
    """Ground-state normalisation ``A(c)`` (three-branch closed form)."""
    return math.exp(log_norm_A(c))


def _log_shape(y, c):
    y2 = np.asarray(y, dtype=float) ** 2
    return -0.25 * y2 * y2 - 0.5 * c * y2


def ground_psi(y, c):
    """``A(c) exp(-y^4/4 - c y^2/2)``, evaluated in log space."""
    out = np.exp(log_norm_A(c) + _log_shape(y, c))
    return float(out) if np.ndim(out) == 0 else out


def ground_density(y, c):
    """``psi_0(y)^2``."""
    out = np.exp(2.0 * log_norm_A(c) + 2.0 * _log_shape(y, c))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

def _check_order(order):
    if int(order) != order or order < 0 or order % 2:
        raise DomainError(f"moment order must be a non-negative even integer, got {order}")
    if order > MAX_MOMENT_ORDER:
        raise CapabilityError(f"moment order {order} exceeds supported {MAX_MOMENT_ORDER}")
    return int(order) // 2


def _neg_numerator_scaled(n, c):
    """``exp(-c^2/2)`` times the Kummer combination of the ``c < 0`` branch."""
    z = 0.5 * c * c
    t1 = sf.gamma(0.25 + 0.5 * n) * sf.kummer_1f1_scaled(0.25 + 0.5 * n, 0.5, z)
    t2 = sf.gamma(0.75 + 0.5 * n) * sf.kummer_1f1_scaled(0.75 + 0.5 * n, 1.5, z)
    return t1 - math.sqrt(2.0) * c * t2


def _i_sum_scaled(c):
    z = 0.25 * c * c
    return float(sc.ive(-0.25, z) + sc.ive(0.25, z))


def _pos_numerator(n, c):
    return sf.gamma(0.5 + n) * sf.tricomi_u(0.25 + 0.5 * n, 0.5, 0.5 * c * c)


def raw_moment(order, c):
    """Closed-form ``<y^order>`` for the rescaled ground state.

    Branches: Tricomi ``U`` for ``c > 0``, a Kummer ``1F1`` combination for
    ``c < 0`` and a Gamma ratio at ``c = 0``.  Odd orders vanish by parity.
    """
    if int(order) == order and order % 2 == 1 and 0 < order <= MAX_MOMENT_ORDER:
        return 0.0
    n = _check_order(order)
    if n == 0:
        return 1.0
    c = float(c)
    try:
        if _is_zero(c):
            return 2.0 ** (0.5 * n) * sf.gamma(0.25 + 0.5 * n) / sf.gamma(0.25)
        if c > 0:
            den = 2.0 ** (0.5 * n - 0.25) * math.sqrt(c) * float(sf.exp_bessel_k_quarter(0.25 * c * c))
            return _pos_numerator(n, c) / den
        den = math.pi * math.sqrt(-c) * _i_sum_scaled(c)
        return 2.0 ** (0.5 * n + 0.25) * _neg_numerator_scaled(n, c) / den
    except AccuracyError as exc:
        raise AccuracyError(f"raw_moment(order={order}, c={c}): {exc}", exc.estimate, exc.error) from exc


def variance(c):
    return raw_moment(2, c)


def _density_log_envelope(c):
    # peak of -y^4/2 - c y^2 sits at y^2 = max(0, -c)
    peak = 0.5 * c * c if c < 0 else 0.0

    def env(y):
        y2 = np.asarray(y, dtype=float) ** 2
        return -0.5 * y2 * y2 - c * y2 - peak

    return env


def raw_moment_oracle(order, c, rtol=1e-12):
    """Quadrature value of ``int y^order psi_0^2 / int psi_0^2``.

    Independent of the closed forms: no special functions are used and the
    normalisation is taken from the same quadrature.
    """
    if int(order) != order or order < 0:
        raise DomainError("order must be a non-negative integer")
    c = float(c)
    env = _density_log_envelope(c)
    if order % 2:
        # odd integrand: integrate the half lines separately and difference them
        pos = integrate_1d(lambda y: y ** order * np.exp(env(y)), 0.0, math.inf,
                           rtol=rtol, log_envelope=env).value
        neg = integrate_1d(lambda y: y ** order * np.exp(env(y)), -math.inf, 0.0,
                           rtol=rtol, log_envelope=env).value
        norm = integrate_1d(lambda y: np.exp(env(y)), rtol=rtol, log_envelope=env).value
        return (pos + neg) / norm
    # the moment weight shifts the peak outward; widen the truncation envelope accordingly
    def menv(y):
        y = np.asarray(y, dtype=float)
        return env(y) + order * np.log1p(np.abs(y))

    num = integrate_1d(lambda y: y ** order * np.exp(env(y)), rtol=rtol, log_envelope=menv).value
    norm = integrate_1d(lambda y: np.exp(env(y)), rtol=rtol, log_envelope=env).value
    return num / norm


def excess_moment(order, c, *, raw=None):
    """Excess moment ``mu_{2n} / Var^n - (2n-1)!!``."""
    n = _check_order(order)
    if n < 2:
        raise DomainError("excess moments are defined for order >= 4")
    raw = raw_moment if raw is None else raw
    var = raw(2, c)
    return raw(order, c) / var ** n - sf.double_factorial(2 * n - 1)


def excess_moment_closed(order, c):
    """Excess moment from the prefactor form ``B_pm(n, c) * N_n / N_1^n``.

    Algebraically identical to :func:`excess_moment` but assembled from the
    branch numerators directly, so it serves as a second route.
    """
    n = _check_order(order)
    if n < 2:
        raise DomainError("excess moments are defined for order >= 4")
    c = float(c)
    dfac = sf.double_factorial(2 * n - 1)
    if _is_zero(c):
        return sf.gamma(0.25 + 0.5 * n) * sf.gamma(0.25) ** (n - 1) / sf.gamma(0.75) ** n - dfac
    if c > 0:
        b_plus = (math.sqrt(c) * float(sf.exp_bessel_k_quarter(0.25 * c * c)) / 2.0 ** 0.25) ** (n - 1)
        return b_plus * _pos_numerator(n, c) / _pos_numerator(1, c) ** n - dfac
    # the exp(c^2/2) growth of the I-sum cancels against the scaled numerators
    b_minus = (math.sqrt(-c) * _i_sum_scaled(c) / 2.0 ** 0.25) ** (n - 1)
    return (b_minus * math.pi ** (n - 1) * _neg_numerator_scaled(n, c)
            / _neg_numerator_scaled(1, c) ** n - dfac)


def moment_ratio(n, c, *, raw=None):
    """``R_{n+1} = nu_{2(n+1)} / nu_{2n}``; tends to ``2n + 1`` for large ``n``."""
    if int(n) != n or n < 2:
        raise DomainError("moment_ratio needs integer n >= 2")
    lower = excess_moment(2 * n, c, raw=raw)
    if lower == 0.0:
        raise SingularRatioError(f"nu_{2 * n}(c={c}) vanishes")
    return excess_moment(2 * n + 2, c, raw=raw) / lower


@dataclass
class MomentReport:
    c: float
    orders: list
    raw: dict
    variance: float
    excess: dict
    ratios: dict = field(default_factory=dict)
    source: str = "analytic"

    def rows(self):
        """Table rows ``(order, raw, excess, ratio)``; ratio pairs order with order + 2."""
        out = []
        for o in self.orders:
            out.append((o, self.raw[o], self.excess.get(o, math.nan), self.ratios.get(o, math.nan)))
        return out


def moment_report(c, orders=(4, 6, 8, 10, 12, 14, 16), source="analytic"):
    """Raw, excess and successive-ratio moments at ``c``.

    ``source='oracle'`` replaces every closed form by quadrature.
    """
    if source == "analytic":
        raw = raw_moment
    elif source == "oracle":
        raw = raw_moment_oracle
    else:
        raise DomainError("source must be 'analytic' or 'oracle'")
    orders = [int(o) for o in orders]
    for o in orders:
        _check_order(o)
    cache = {}

    def cached(o, cc):
        if o not in cache:
            cache[o] = raw(o, cc)
        return cache[o]

    var = cached(2, c)
    raws = {o: cached(o, c) for o in orders}
    excess = {}
    for o in orders:
        if o >= 4:
            excess[o] = raws[o] / var ** (o // 2) - sf.double_factorial(o - 1)
    ratios = {}
    for o in orders:
        if o >= 4 and o + 2 in excess and excess[o] != 0.0:
            ratios[o] = excess[o + 2] / excess[o]
    return MomentReport(float(c), orders, raws, var, excess, ratios, source)
