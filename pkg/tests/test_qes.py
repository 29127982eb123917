import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from qesdisorder import qes
from qesdisorder.errors import CapabilityError, DomainError, SingularRatioError

# frozen from an independent 40-digit evaluation of the density integrals
FROZEN_VARIANCE = {
    -5.0: 4.8926507731034,
    -1.0: 0.893464969574237,
    0.0: 0.4779887974861251,
    1.0: 0.289602386319240,
    5.0: 0.0947788253235724,
}


def mp_moment(order, c):
    """<y^order> for the ground density exp(-y^4/2 - c y^2), by mpmath quadrature."""
    c = mp.mpf(c)
    f = lambda y: mp.exp(-y ** 4 / 2 - c * y ** 2)
    pts = [-mp.inf, 0, mp.inf]
    if c < 0:
        r = mp.sqrt(-c)
        pts = [-mp.inf, -r - 1, -r, -r + 1, 0, r - 1, r, r + 1, mp.inf]
    num = mp.quad(lambda y: y ** order * f(y), pts)
    den = mp.quad(f, pts)
    return num / den


def test_potential_and_classification():
    assert qes.potential(0.0, 2.0) == -2.0
    assert qes.potential(1.0, 0.0) == pytest.approx(1 - 3)
    assert [len(qes.count_extrema(c)) for c in (5.0, -1.0, -5.0)] == [1, 3, 5]
    assert qes.classify_well(math.sqrt(3)) is qes.WellClass.SingleWell
    assert qes.classify_well(-math.sqrt(3)) is qes.WellClass.DoubleWell
    assert qes.classify_well(-1.7321) is qes.WellClass.TripleWell


@given(st.floats(0.1, 5.0), st.floats(-8.0, 8.0), st.floats(-3.0, 3.0))
def test_unscaled_potential_is_rescaled_potential(a, c, y):
    p = qes.RescaledC(c, a).to_params()
    yt = y / a ** 0.25
    # a^{-1/2} V(y~) = V(y, c) in the ground sector
    lhs = qes.potential_unscaled(yt, p) / math.sqrt(a)
    assert lhs == pytest.approx(qes.potential(y, c), rel=1e-10, abs=1e-9)


def test_params_validation():
    with pytest.raises(DomainError):
        qes.SexticParams(0.0, 1.0)
    with pytest.raises(DomainError):
        qes.SexticParams(1.0, 1.0, k=2)
    assert not qes.SexticParams(1.0, 1.0, n=1).is_ground_sector


@pytest.mark.parametrize("c", [-50.0, -10.0, -2.0, 0.0, 1e-13, 2.0, 10.0, 50.0])
def test_ground_state_is_normalised(c):
    r = qes.raw_moment_oracle(0, c)
    assert r == pytest.approx(1.0, rel=1e-11)


@pytest.mark.parametrize("c", sorted(FROZEN_VARIANCE))
def test_variance_frozen(c):
    assert qes.variance(c) == pytest.approx(FROZEN_VARIANCE[c], rel=1e-12)


@pytest.mark.parametrize("c", [-20.0, -3.0, -0.5, 0.0, 0.5, 3.0, 20.0])
@pytest.mark.parametrize("order", [2, 8, 16])
def test_raw_moment_vs_mpmath(c, order):
    ref = float(mp_moment(order, c))
    assert qes.raw_moment(order, c) == pytest.approx(ref, rel=1e-11)


@given(st.floats(-30.0, 30.0), st.sampled_from([2, 4, 6, 10, 16]))
def test_raw_moment_vs_quadrature_oracle(c, order):
    assert qes.raw_moment(order, c) == pytest.approx(qes.raw_moment_oracle(order, c), rel=1e-9)


@given(st.floats(-40.0, 40.0), st.sampled_from([4, 6, 8, 12, 16]))
def test_excess_two_routes_agree(c, order):
    a = qes.excess_moment(order, c)
    b = qes.excess_moment_closed(order, c)
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


@given(st.floats(-1e-3, 1e-3))
def test_moments_continuous_through_zero(c):
    assert qes.raw_moment(4, c) == pytest.approx(qes.raw_moment(4, 0.0), rel=5e-3)


@given(st.floats(-30.0, 30.0), st.sampled_from([4, 6, 8, 10]))
def test_excess_below_gaussian_bound(c, order):
    # the density is flatter than Gaussian so nu_{2n} is negative but above 1 - (2n-1)!!
    nu = qes.excess_moment(order, c)
    assert 1 - qes.sf.double_factorial(order - 1) - 1e-9 < nu < 1e-12


def test_odd_and_unsupported_orders():
    assert qes.raw_moment(5, 1.0) == 0.0
    with pytest.raises(CapabilityError):
        qes.raw_moment(34, 1.0)
    with pytest.raises(DomainError):
        qes.excess_moment(2, 1.0)


def test_unscale_moment():
    assert qes.unscale_moment(2.0, 4, 16.0) == pytest.approx(2.0 / 16.0)
    with pytest.raises(DomainError):
        qes.unscale_moment(1.0, 2, -1.0)


def test_singular_ratio_raised():
    with pytest.raises(SingularRatioError):
        qes.moment_ratio(2, 0.0, raw=lambda o, c: 1.0 if o == 2 else float(qes.sf.double_factorial(o - 1)))


def test_moment_report_rows_match_library():
    rep = qes.moment_report(-5.0, range(4, 18, 2))
    for o, raw, ex, ratio in rep.rows():
        assert raw == qes.raw_moment(o, -5.0)
        assert ex == pytest.approx(qes.excess_moment(o, -5.0), rel=1e-14)
        if o < 16:
            assert ratio == pytest.approx(qes.moment_ratio(o // 2, -5.0), rel=1e-13)
    orc = qes.moment_report(-5.0, [4, 6], source="oracle")
    assert orc.raw[4] == pytest.approx(rep.raw[4], rel=1e-10)
