import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qesdisorder import qes, sampler
from qesdisorder.errors import DomainError, IntegrityError
from qesdisorder.quadrature import integrate_1d


def test_philox_known_answer():
    # Philox4x64-10 reference vector with zero key
    bg = np.random.Philox(key=[0, 0])
    assert [int(v) for v in bg.random_raw(4)] == [
        0x2F4BA6408E4D89B, 0x3DD62B0B9CA8C5B2, 0x1C8667A55D902E79, 0x907D7A052FD5B4DC]
    bg = np.random.Philox(counter=[2 ** 64 - 1] * 4, key=[0, 0])
    assert [int(v) for v in bg.random_raw(4)] == [
        0x16554D9ECA36314C, 0xDB20FE9D672D0FDC, 0xD7E772CEE186176B, 0x7E68B68AEC7BA23B]


def test_generator_keyed_by_seed_and_stream():
    a = sampler.make_generator(7, 0).random(5)
    b = sampler.make_generator(7, 0).random(5)
    c = sampler.make_generator(7, 1).random(5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    with pytest.raises(DomainError):
        sampler.make_generator(-1)


def test_build_cdf_properties():
    x = np.linspace(-3, 3, 61)
    t = sampler.build_cdf(x, np.exp(-x * x))
    assert t.cdf[0] == 0.0 and t.cdf[-1] == 1.0
    assert np.all(np.diff(t.cdf) > 0) and np.all(np.diff(t.x) > 0)
    with pytest.raises(IntegrityError):
        sampler.build_cdf(x, np.sin(x))
    with pytest.raises(IntegrityError):
        sampler.build_cdf(x, np.zeros_like(x))
    with pytest.raises(DomainError):
        sampler.build_cdf(x[::-1], np.exp(-x * x))


def test_build_cdf_drops_flat_runs():
    x = np.linspace(-10, 10, 201)
    d = np.where(np.abs(x) < 2, 1.0, 0.0)
    t = sampler.build_cdf(x, d)
    assert np.all(np.diff(t.cdf) > 0)
    assert t.x[0] >= -2.2 and t.x[-1] <= 2.2


@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=30).filter(lambda v: sum(v) > 0))
def test_alias_table_reproduces_probabilities(weights):
    a = sampler.AliasTable(weights)
    p = np.asarray(weights) / sum(weights)
    # exact induced distribution: column i chosen w.p. 1/n, kept w.p. prob[i]
    induced = np.zeros(a.n)
    for i in range(a.n):
        induced[i] += a.prob[i] / a.n
        induced[a.alias[i]] += (1 - a.prob[i]) / a.n
    assert np.max(np.abs(induced - p)) < 1e-12


def test_spec_validation():
    with pytest.raises(DomainError):
        sampler.DisorderSpec("nope", (1.0,))
    with pytest.raises(DomainError):
        sampler.DisorderSpec("pure", (1.0, 2.0))
    with pytest.raises(DomainError):
        sampler.DisorderSpec("pure", (1.0,), observable="energy")
    with pytest.raises(DomainError):
        sampler.DisorderSpec("pure", (1.0,), count=0)


def _independent_cdf(c):
    """CDF of the pure ground density by direct adaptive quadrature."""
    dens = lambda y: qes.ground_density(y, c)
    return lambda v: integrate_1d(dens, -math.inf, float(v), rtol=1e-10).value


@pytest.mark.parametrize("c", [0.0, -4.0])
def test_pure_quadrature_samples_ks_against_independent_cdf(c):
    ss = sampler.sample(sampler.DisorderSpec("pure", (c,), count=20000, seed=3))
    v = np.sort(ss.values)
    F = _independent_cdf(c)
    idx = np.linspace(0, len(v) - 1, 400).astype(int)
    n = len(v)
    d = max(max((i + 1) / n - F(v[i]), F(v[i]) - i / n) for i in idx)
    assert d < sampler.ks_threshold(n)
    assert ss.ks_distance < sampler.ks_threshold(n)
    assert ss.within(5.0)


@pytest.mark.parametrize("spec", [
    sampler.DisorderSpec("harmonic", (1.0, 2.0, 0.6), count=20000, seed=5),
    sampler.DisorderSpec("mixed_general", (-1.0, 1.0, 0.4), count=20000, seed=5),
])
def test_other_sources_match_moments(spec):
    ss = sampler.sample(spec)
    assert ss.within(5.0)
    assert ss.ks_distance < sampler.ks_threshold(spec.count)


def test_number_samples_are_even_and_match():
    ss = sampler.sample(sampler.DisorderSpec("pure", (1.0,), observable="number", count=20000, seed=1))
    assert np.all(ss.values % 2 == 0)
    assert ss.within(5.0)


def test_rerun_is_byte_identical(tmp_path):
    spec = sampler.DisorderSpec("mixed_identical_pi4", (-2.0,), count=2000, seed=11, stream=4)
    p1 = sampler.write_samples(sampler.sample(spec), tmp_path / "a.csv", tmp_path / "a.json")
    p2 = sampler.write_samples(sampler.sample(spec), tmp_path / "b.csv", tmp_path / "b.json")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    text = (tmp_path / "a.csv").read_text().splitlines()
    assert text[0] == "value" and len(text) == 2001
    assert float(text[1]) == sampler.sample(spec).values[0]


def test_ks_distance_discrete_exact_sample():
    p = np.array([0.5, 0.25, 0.25])
    assert sampler.ks_distance_discrete(np.array([0, 0, 1, 2]), p) == 0.0
