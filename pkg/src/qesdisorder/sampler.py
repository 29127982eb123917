"""Seeded disorder realisations drawn from measurement statistics.

Quadrature outcomes are drawn by inverse-CDF sampling of the diagonal
density ``rho(x, x)`` (monotone cubic interpolation of the cumulative
table); photon-number outcomes by Walker/Vose alias sampling of ``p_n``.

Randomness comes from the counter-based Philox4x64-10 generator keyed by
``(seed, stream)``, so a spec fully determines its sample stream and
independent streams never share state.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import coupled as cp
from . import fock, qes
from .errors import DomainError, IntegrityError

__all__ = [
    "CDFTable",
    "DisorderSpec",
    "SampleSet",
    "SOURCE_KINDS",
    "build_cdf",
    "make_generator",
    "AliasTable",
    "source_kernel",
    "source_diagonal",
    "analytic_moments",
    "sample",
    "ks_distance",
    "ks_distance_discrete",
    "ks_threshold",
    "write_samples",
]

SOURCE_KINDS = ("pure", "mixed_identical_pi4", "mixed_general", "harmonic")
_PARAM_COUNT = {"pure": 1, "mixed_identical_pi4": 1, "mixed_general": 3, "harmonic": 3}
CDF_NODES = 20001
UINT64_MAX = 2 ** 64 - 1


@dataclass(frozen=True)
class CDFTable:
    x: np.ndarray
    cdf: np.ndarray

    def __call__(self, v):
        return np.interp(v, self.x, self.cdf, left=0.0, right=1.0)


def build_cdf(x, density, *, tol=1e-9) -> CDFTable:
    """Cumulative trapezoid table of a non-negative density on nodes ``x``.

    The density is renormalised, flat runs (where it underflows) are removed
    so the table is strictly increasing, and the endpoints are exactly 0
    and 1.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(density, dtype=float)
    if x.shape != d.shape or x.ndim != 1 or len(x) < 2:
        raise DomainError("x and density must be 1D arrays of equal length >= 2")
    if np.any(np.diff(x) <= 0):
        raise DomainError("nodes must be strictly increasing")
    peak = float(np.max(np.abs(d))) if len(d) else 0.0
    if np.any(d < -tol * max(peak, 1.0)):
        raise IntegrityError(f"density has negative values down to {float(np.min(d)):.3e}")
    d = np.clip(d, 0.0, None)
    inc = 0.5 * (d[1:] + d[:-1]) * np.diff(x)
    cum = np.concatenate([[0.0], np.cumsum(inc)])
    total = cum[-1]
    if not total > 0:
        raise IntegrityError("density integrates to zero")
    cum /= total
    rising = np.diff(cum) > 0
    # keep only nodes that bound a rising step, so the table starts and ends
    # at the support edges instead of spanning empty runs
    keep = np.concatenate([[False], rising]) | np.concatenate([rising, [False]])
    xs, cs = x[keep], cum[keep]
    strict = np.concatenate([[True], np.diff(cs) > 0])
    xs, cs = xs[strict], cs[strict]
    cs[0], cs[-1] = 0.0, 1.0
    return CDFTable(xs, cs)


def make_generator(seed, stream=0) -> np.random.Generator:
    """Philox4x64-10 generator with key ``(seed, stream)`` and counter zero."""
    seed, stream = int(seed), int(stream)
    if not (0 <= seed <= UINT64_MAX and 0 <= stream <= UINT64_MAX):
        raise DomainError("seed and stream must be unsigned 64-bit integers")
    return np.random.Generator(np.random.Philox(key=[seed, stream]))


class AliasTable:
    """Vose alias table for a finite categorical distribution."""

    def __init__(self, probs):
        p = np.asarray(probs, dtype=float)
        if np.any(p < 0):
            raise IntegrityError("negative probability")
        p = p / p.sum()
        n = len(p)
        scaled = p * n
        prob = np.zeros(n)
        alias = np.zeros(n, dtype=np.int64)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = scaled[g] + scaled[s] - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        for i in large + small:
            prob[i] = 1.0
            alias[i] = i
        self.prob, self.alias, self.n = prob, alias, n
        self.probabilities = p

    def draw(self, rng: np.random.Generator, count):
        u = rng.random(count) * self.n
        col = np.minimum(u.astype(np.int64), self.n - 1)
        frac = u - col
        return np.where(frac < self.prob[col], col, self.alias[col])


@dataclass(frozen=True)
class DisorderSpec:
    """What to sample.

    ``kind`` selects the state: ``pure`` (params ``(c,)``),
    ``mixed_identical_pi4`` (``(c,)``), ``mixed_general``
    (``(c1, c2, theta)``) or ``harmonic`` (``(omega1p, omega2p, theta)``).
    ``observable`` is ``quadrature`` or ``number``; for ``number`` the Fock
    frequency defaults to the variance-matched one.
    """

    kind: str
    params: tuple
    observable: str = "quadrature"
    count: int = 100_000
    seed: int = 0
    stream: int = 0
    omega: Optional[float] = None

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise DomainError(f"unknown source kind {self.kind!r}")
        if len(self.params) != _PARAM_COUNT[self.kind]:
            raise DomainError(f"{self.kind} takes {_PARAM_COUNT[self.kind]} parameter(s)")
        if self.observable not in ("quadrature", "number"):
            raise DomainError("observable must be 'quadrature' or 'number'")
        if int(self.count) != self.count or self.count <= 0:
            raise DomainError("count must be a positive integer")
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))

    def to_dict(self):
        d = asdict(self)
        d["params"] = list(self.params)
        return d


@dataclass
class SampleSet:
    spec: DisorderSpec
    values: np.ndarray
    empirical_moments: dict
    analytic_moments: dict
    ks_distance: float
    extra: dict = field(default_factory=dict)

    def within(self, n_sigma=5.0):
        """True when every empirical moment is within ``n_sigma`` standard errors."""
        for key, (val, se) in self.empirical_moments.items():
            target = self.analytic_moments.get(key)
            if target is None:
                continue
            if abs(val - target) > n_sigma * se:
                return False
        return True

    def metadata(self):
        return {
            "spec": self.spec.to_dict(),
            "empirical_moments": {k: {"value": v, "stderr": s} for k, (v, s) in self.empirical_moments.items()},
            "analytic_moments": self.analytic_moments,
            "ks_distance": self.ks_distance,
            "ks_threshold_99": ks_threshold(len(self.values)),
            "generator": "Philox4x64-10 key=(seed, stream)",
            **self.extra,
        }


def source_kernel(spec: DisorderSpec):
    """Density kernel of the state named by ``spec``."""
    k = spec.kind
    if k == "pure":
        return cp.pure_state_kernel(spec.params[0])
    if k == "mixed_identical_pi4":
        return cp.identical_pi4_kernel(spec.params[0])
    if k == "mixed_general":
        c1, c2, th = spec.params
        p = cp.AnharmonicPair(c1, c2, th)
        L, R = cp.pair_window(p)
        return cp.reduced_from_joint(lambda a, b: cp.joint_psi0(a, b, p), L, R)
    w1, w2, th = spec.params
    return cp.harmonic_reduced(cp.HarmonicPair(w1, w2, th)).kernel


def source_diagonal(spec: DisorderSpec, n_nodes=CDF_NODES):
    """Nodes and diagonal density ``rho(x, x)`` on a dense uniform grid."""
    kern = source_kernel(spec)
    x = np.linspace(-kern.window, kern.window, n_nodes)
    return x, np.asarray(kern(x, x), dtype=float)


def analytic_moments(spec: DisorderSpec, populations=None):
    """Targets for ``mu2`` and ``mu4`` of the sampled observable."""
    if spec.observable == "number":
        p = np.asarray(populations)
        n = np.arange(len(p), dtype=float)
        return {"mu2": float(np.dot(n ** 2, p)), "mu4": float(np.dot(n ** 4, p))}
    k = spec.kind
    if k == "pure":
        c = spec.params[0]
        return {"mu2": qes.raw_moment(2, c), "mu4": qes.raw_moment(4, c)}
    if k in ("mixed_identical_pi4", "mixed_general"):
        if k == "mixed_identical_pi4":
            pair = cp.AnharmonicPair(spec.params[0], spec.params[0], math.pi / 4)
        else:
            pair = cp.AnharmonicPair(*spec.params)
        return {"mu2": cp.reduced_moment_exact(2, pair), "mu4": cp.reduced_moment_exact(4, pair)}
    var = cp.harmonic_reduced(cp.HarmonicPair(*spec.params)).variance
    return {"mu2": var, "mu4": 3.0 * var * var}


def ks_threshold(n, level=0.99):
    """Asymptotic Kolmogorov-Smirnov critical value (1.63/sqrt(n) at 99%)."""
    coef = {0.99: 1.63, 0.95: 1.36}[level]
    return coef / math.sqrt(n)


def ks_distance(values, table: CDFTable):
    v = np.sort(np.asarray(values, dtype=float))
    n = len(v)
    F = table(v)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_distance_discrete(values, probs):
    """Largest gap between empirical and exact CDFs of an integer variable."""
    p = np.asarray(probs, dtype=float)
    p = p / p.sum()
    counts = np.bincount(np.asarray(values, dtype=np.int64), minlength=len(p))[: len(p)]
    emp = np.cumsum(counts) / len(values)
    return float(np.max(np.abs(emp - np.cumsum(p))))


def _moments(vals):
    n = len(vals)
    out = {}
    for key, power in (("mu2", 2), ("mu4", 4)):
        xp = vals ** power
        out[key] = (float(np.mean(xp)), float(np.std(xp, ddof=1) / math.sqrt(n)))
    return out


def sample(spec: DisorderSpec, *, n_nodes=CDF_NODES) -> SampleSet:
    """Draw ``spec.count`` i.i.d. outcomes for ``spec``; deterministic in ``(seed, stream)``."""
    rng = make_generator(spec.seed, spec.stream)
    if spec.observable == "quadrature":
        x, dens = source_diagonal(spec, n_nodes)
        table = build_cdf(x, dens)
        inverse = PchipInterpolator(table.cdf, table.x)
        values = inverse(rng.random(spec.count))
        emp = _moments(values)
        ks = ks_distance(values, table)
        return SampleSet(spec, values, emp, analytic_moments(spec), ks,
                         {"cdf_nodes": int(len(table.x))})
    grid = cp.auto_discretize(source_kernel(spec), tol=1e-9)
    omega = spec.omega
    stats = fock.number_populations(grid, omega)
    alias = AliasTable(stats.populations)
    values = alias.draw(rng, spec.count)
    emp = _moments(values.astype(float))
    ks = ks_distance_discrete(values, alias.probabilities)
    extra = {"omega": stats.omega, "n_max": stats.n_max, "tail_mass": stats.tail_mass}
    return SampleSet(spec, values, emp, analytic_moments(spec, alias.probabilities), ks, extra)


def write_samples(ss: SampleSet, csv_path, json_path=None):
    """One value per row under a ``value`` header, plus a JSON sidecar."""
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("value\n")
        if ss.spec.observable == "number":
            fh.writelines(f"{int(v)}\n" for v in ss.values)
        else:
            fh.writelines(f"{v:.16e}\n" for v in ss.values)
    if json_path is None:
        json_path = str(csv_path) + ".json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(ss.metadata(), fh, indent=2, sort_keys=True)
    return csv_path, json_path
