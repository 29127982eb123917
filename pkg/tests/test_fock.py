import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qesdisorder import coupled as cp
from qesdisorder import fock
from qesdisorder.errors import DomainError, WindowError


def test_gaussian_ground_state_is_vacuum():
    k = cp.gaussian_reduced_kernel(1.7, 0.0)
    st_ = fock.number_populations(k.discretize(N=513), omega=1.7)
    assert st_.populations[0] == pytest.approx(1.0, abs=1e-12)
    assert np.max(st_.populations[1:]) < 1e-12


@given(st.floats(0.3, 3.0), st.floats(0.05, 0.8))
def test_thermal_kernel_populations_are_geometric(gamma, frac):
    beta = frac * gamma
    th = fock.thermal_params(gamma, beta)
    grid = cp.gaussian_reduced_kernel(gamma, beta).discretize(N=1025)
    pops = fock.number_populations(grid, omega=th.frequency, n_max=40).populations
    expected = (1 - th.xi) * th.xi ** np.arange(41)
    assert np.max(np.abs(pops - expected)) < 1e-8
    assert np.dot(np.arange(41), pops) == pytest.approx(th.mean_n, rel=1e-6, abs=1e-9)


@given(st.floats(0.3, 3.0), st.floats(0.0, 0.95))
def test_thermal_params_identities(gamma, frac):
    beta = frac * gamma
    th = fock.thermal_params(gamma, beta)
    w = th.frequency
    assert w == pytest.approx(math.sqrt(gamma * gamma - beta * beta), rel=1e-14)
    assert th.omega_t == pytest.approx(2 * w * w, rel=1e-13)
    assert th.convention == "sqrt_half"
    assert set(th.alternatives) == set(fock.THERMAL_CONVENTIONS)
    if beta > 0:
        # Bose-Einstein form <N> = 1/(exp(w/T) - 1)
        q = math.exp(-w / th.temperature)
        assert th.mean_n == pytest.approx(q / (1.0 - q), rel=1e-10, abs=1e-300)


def test_thermal_params_domain():
    with pytest.raises(DomainError):
        fock.thermal_params(1.0, 1.0)
    with pytest.raises(DomainError):
        fock.thermal_params(1.0, 0.2, "other")


def test_convention_selection_by_diagonalisation():
    conv, rep = fock.select_thermal_convention(1.3, 0.5)
    assert conv == "sqrt_half"
    assert rep["sqrt_half"]["rel_error"] < 1e-8
    assert rep["half_sqrt"]["rel_error"] > 1e-2
    r = rep["ratios"]
    assert np.max(np.abs(r - r[0])) < 1e-6


@pytest.mark.parametrize("c", [2.0, 1.0, -1.0, -3.0])
def test_pure_state_parity_and_completeness(c):
    grid = cp.auto_discretize(cp.pure_state_kernel(c))
    s = fock.number_populations(grid)
    assert np.max(s.odd()) < 1e-10
    assert abs(s.populations.sum() + s.tail_mass - 1.0) < 1e-12
    if c > -2.0:
        assert s.tail_mass < 1e-6
    else:
        # deep triple wells spill past the supported basis; the loss is reported
        assert s.n_max == 128 and s.tail_mass > 0
    assert s.convergence <= 1e-8


def test_omega_default_is_variance_matched():
    from qesdisorder import qes
    grid = cp.auto_discretize(cp.pure_state_kernel(-1.0))
    s = fock.number_populations(grid)
    assert s.omega == pytest.approx(1.0 / (2 * qes.variance(-1.0)), rel=1e-9)


def test_sourceless_kernel_is_not_refined():
    g = cp.pure_state_kernel(1.0).discretize(N=257)
    bare = type(g)(g.nodes, g.weights, g.values)
    s = fock.number_populations(bare)
    assert s.n_nodes == 257 and math.isnan(s.convergence)


def test_refinement_failure_raises():
    g = cp.pure_state_kernel(1.0).discretize(N=65)
    with pytest.raises(WindowError):
        fock.number_populations(g, tol=1e-30, max_refinements=1)


def test_diagonalize_pure_state():
    g = cp.pure_state_kernel(0.5).discretize(N=257)
    lam, ent, pur = fock.diagonalize_kernel(g)
    assert lam[0] == pytest.approx(1.0, abs=1e-12)
    assert pur == pytest.approx(1.0, abs=1e-12)
    assert abs(ent) < 1e-10


def test_local_minima():
    v = [5, 1, 4, 9, 3, 0.5, 2, 7, 6]
    assert fock.local_minima(v) == [1, 5]
    assert fock.local_minima(v, parity=0) == [6]
