"""Number-operator statistics of density kernels and thermal parameters.

Populations ``p_n = <n|rho|n>`` are computed in the oscillator basis of a
reference frequency ``omega``; by default ``omega = 1/(2 Var)`` from the
state's own variance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, WindowError
from .quadrature import GridKernel
from .specfun import HERMITE_N_MAX, hermite_functions

__all__ = [
    "NumberStats",
    "ThermalCharacterization",
    "THERMAL_CONVENTIONS",
    "DEFAULT_THERMAL_CONVENTION",
    "omega_from_variance",
    "number_populations",
    "thermal_params",
    "diagonalize_kernel",
    "select_thermal_convention",
    "local_minima",
]

# Two readings of the frequency written as "sqrt(Omega_T)/2":
#   "sqrt_half":  sqrt(Omega_T / 2) = sqrt(gamma^2 - beta^2)
#   "half_sqrt":  sqrt(Omega_T) / 2
THERMAL_CONVENTIONS = ("sqrt_half", "half_sqrt")
DEFAULT_THERMAL_CONVENTION = "sqrt_half"


@dataclass
class NumberStats:
    omega: float
    n_max: int
    populations: np.ndarray
    tail_mass: float
    window: float = math.nan
    n_nodes: int = 0
    convergence: float = math.nan

    def mean(self):
        n = np.arange(len(self.populations))
        return float(np.dot(n, self.populations))

    def even(self):
        return self.populations[0::2]

    def odd(self):
        return self.populations[1::2]


@dataclass
class ThermalCharacterization:
    omega_t: float
    temperature: float
    mean_n: float
    convention: str
    frequency: float
    xi: float
    alternatives: dict = field(default_factory=dict)


def omega_from_variance(var):
    """Reference frequency with ``<x^2> = 1/(2 omega)``."""
    if not var > 0.0:
        raise DomainError("variance must be positive")
    return 1.0 / (2.0 * var)


def _populations(rho: GridKernel, omega, n_max):
    phi = hermite_functions(n_max, rho.nodes, omega) * rho.weights[None, :]
    return np.einsum("ni,ni->n", phi @ rho.values, phi)


def number_populations(rho: GridKernel, omega=None, n_max=60, *, tol=1e-8, tail_tol=1e-6,
                       max_refinements=4):
    """Fock populations of a grid kernel.

    When the kernel carries an analytic source the grid is widened and
    refined (``L -> 1.25 L``, ``N -> 2N - 1``) until every population agrees
    to ``tol`` between consecutive grids; ``n_max`` grows to 128 if the tail
    mass exceeds ``tail_tol``.
    """
    if omega is None:
        omega = omega_from_variance(rho.moment(2) / rho.trace())
    if not omega > 0.0:
        raise DomainError("omega must be positive")
    n_max = int(n_max)
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    n_max = min(n_max, HERMITE_N_MAX)
    p = _populations(rho, omega, n_max)
    if n_max < HERMITE_N_MAX and 1.0 - p.sum() > tail_tol:
        n_max = HERMITE_N_MAX
        p = _populations(rho, omega, n_max)
    grid = rho
    delta = math.nan
    if rho.source is not None:
        for _ in range(max_refinements):
            grid = grid.regrid(1.25 * grid.half_width, 2 * grid.n - 1)
            p_new = _populations(grid, omega, n_max)
            delta = float(np.max(np.abs(p_new - p)))
            p = p_new
            if delta <= tol:
                break
        else:
            raise WindowError(f"populations not converged after window growth (change {delta:.2e})")
    p = np.clip(p, 0.0, 1.0)
    return NumberStats(float(omega), n_max, p, float(1.0 - p.sum()), grid.half_width, grid.n, delta)


def _thermal_frequency(gamma, beta, convention):
    omega_t = 2.0 * (gamma * gamma - beta * beta)
    if convention == "sqrt_half":
        return math.sqrt(omega_t / 2.0)
    if convention == "half_sqrt":
        return math.sqrt(omega_t) / 2.0
    raise DomainError(f"unknown thermal convention {convention!r}")


def _thermal_from(gamma, beta, convention):
    w = _thermal_frequency(gamma, beta, convention)
    mean = beta / (gamma - beta + w)
    if beta == 0.0:
        return w, 0.0, 0.0, 0.0
    xi = beta / (gamma + w)
    # difference of logs: the ratio overflows for subnormal beta
    temp = w / (math.log(gamma + w) - math.log(beta))
    return w, temp, mean, xi


def thermal_params(gamma, beta, convention=DEFAULT_THERMAL_CONVENTION):
    """Thermal description of the Gaussian kernel with parameters ``gamma, beta``.

    Both frequency readings are evaluated; the selected one populates the
    main fields and the other is kept in ``alternatives``.
    """
    if not gamma > 0.0:
        raise DomainError("gamma must be positive")
    if beta < 0.0 or beta >= gamma:
        raise DomainError("need 0 <= beta < gamma for a normalisable kernel")
    omega_t = 2.0 * (gamma * gamma - beta * beta)
    alts = {}
    for conv in THERMAL_CONVENTIONS:
        w, temp, mean, xi = _thermal_from(gamma, beta, conv)
        alts[conv] = {"frequency": w, "temperature": temp, "mean_n": mean, "xi": xi}
    sel = alts[convention] if convention in alts else None
    if sel is None:
        raise DomainError(f"unknown thermal convention {convention!r}")
    return ThermalCharacterization(omega_t, sel["temperature"], sel["mean_n"], convention,
                                   sel["frequency"], sel["xi"], alts)


def diagonalize_kernel(rho: GridKernel):
    """Eigenvalues (descending), von Neumann entropy and purity of a grid kernel."""
    sym = rho.symmetric_matrix()
    sym = 0.5 * (sym + sym.T)
    lam = np.linalg.eigvalsh(sym)[::-1]
    pos = lam[lam > 0.0]
    entropy = float(-np.sum(pos * np.log(pos)))
    return lam, entropy, float(np.sum(lam * lam))


def select_thermal_convention(gamma, beta, n_check=6):
    """Pick the frequency reading that reproduces the exact kernel spectrum.

    The Gaussian kernel is discretised, diagonalised, and its leading
    eigenvalue ratio ``xi`` and mean occupation ``xi/(1-xi)`` are compared
    with both readings.  Returns ``(convention, report)``.
    """
    from .coupled import gaussian_reduced_kernel

    k = gaussian_reduced_kernel(gamma, beta)
    grid = k.discretize(N=1025, estimate_error=False)
    lam, _, _ = diagonalize_kernel(grid)
    ratios = lam[1:n_check] / lam[:n_check - 1]
    xi = float(ratios[0])
    mean = xi / (1.0 - xi)
    report = {"xi": xi, "ratios": ratios, "mean_n": mean}
    best, best_err = None, math.inf
    for conv in THERMAL_CONVENTIONS:
        _, _, m, _ = _thermal_from(gamma, beta, conv)
        err = abs(m - mean) / max(mean, 1e-300)
        report[conv] = {"mean_n": m, "rel_error": err}
        if err < best_err:
            best, best_err = conv, err
    return best, report


def local_minima(values, parity=None):
    """Indices ``n`` where ``values[n]`` is below both neighbours.

    With ``parity=0`` (or 1) only that sublattice is compared, which is what
    matters for states with a parity selection rule.
    """
    v = np.asarray(values, dtype=float)
    idx = np.arange(len(v))
    if parity is not None:
        idx = idx[parity::2]
    sub = v[idx]
    return [int(idx[i]) for i in range(1, len(sub) - 1) if sub[i] < sub[i - 1] and sub[i] < sub[i + 1]]
