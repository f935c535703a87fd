import math

import pytest
from hypothesis import given, strategies as st

from critmass.errors import DegenerateExponents, InvalidParameters
from critmass.model import (Parameters, Regime, classify_regime, in_region_one_six,
                            scaling_exponents, sphere_area)


def test_sphere_area_low_dimensions():
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi ** 2)


@pytest.mark.parametrize("d", [3, 4, 5, 7])
def test_derived_constants(d):
    p = Parameters(d, 1.2, 1.3)
    assert p.m_star == pytest.approx(2 - 2 / d)
    assert p.m_lower < p.m_star < d / 2
    assert p.c_d * (d - 2) * p.sigma == pytest.approx(1.0, rel=1e-14)


def test_c_d_three_dimensions():
    assert Parameters(3, 1.5, 1.5).c_d == pytest.approx(1 / (4 * math.pi))


def test_c_d_override_is_kept():
    p = Parameters(3, 1.5, 1.5, c_d=0.5)
    assert p.c_d == 0.5
    assert p.newtonian_c_d == pytest.approx(1 / (4 * math.pi))


@pytest.mark.parametrize("args", [(2, 1.5, 1.5), (3, 1.0, 1.5), (3, 1.5, 0.9), (3.5, 1.5, 1.5)])
def test_invalid_parameters(args):
    with pytest.raises(InvalidParameters):
        Parameters(*args)


def test_exponents_at_intersection():
    ex = scaling_exponents(Parameters(3, 4 / 3, 4 / 3))
    assert ex.p == pytest.approx(1.0)
    assert ex.q == pytest.approx(1.0)
    assert ex.r == pytest.approx(10 / 9)


def test_exponents_hand_values():
    ex = scaling_exponents(Parameters(3, 1.5, 1.5))
    assert ex.p == pytest.approx(0.75) and ex.q == pytest.approx(0.75)
    # m2 solving m1 m2 + 2 m1/d = m1 + m2 at m1 = 1.4 is 7/6
    assert scaling_exponents(Parameters(3, 1.4, 7 / 6)).q == pytest.approx(1.0, abs=1e-14)


def test_degenerate_exponents():
    with pytest.raises(DegenerateExponents):
        scaling_exponents(Parameters(3, 2.0, 2.0))


@pytest.mark.parametrize("m1,m2,label", [
    (4 / 3, 4 / 3, Regime.INTERSECTION),
    (1.5, 1.5, Regime.SUBCRITICAL),
    (1.1, 1.1, Regime.SUPERCRITICAL),
    (1.4, 7 / 6, Regime.CRITICAL_L1),
    (7 / 6, 1.4, Regime.CRITICAL_L2),
    (1.3, 1.2, Regime.REGION_ONE_SIX),
])
def test_classify_regime(m1, m2, label):
    assert classify_regime(Parameters(3, m1, m2)).label is label


def test_line_equation_outside_segment_is_not_critical():
    # q = 1 also holds on this branch, but m1 < m* so it is not on the L1 segment
    m1 = 1.2
    m2 = m1 * (1 - 2 / 3) / (m1 - 1)          # solves m1 m2 + 2 m1/3 = m1 + m2
    p = Parameters(3, m1, m2)
    assert scaling_exponents(p).q == pytest.approx(1.0)
    assert classify_regime(p).label not in (Regime.CRITICAL_L1, Regime.CRITICAL_L2)


exps = st.floats(min_value=1.05, max_value=1.45)


@given(exps, exps)
def test_swap_symmetry(m1, m2):
    a = Parameters(3, m1, m2)
    if abs(m1 + m2 - m1 * m2) < 1e-6:
        return
    ea, eb = scaling_exponents(a), scaling_exponents(a.swapped())
    assert ea.p == pytest.approx(eb.q) and ea.q == pytest.approx(eb.p)
    la, lb = classify_regime(a).label, classify_regime(a.swapped()).label
    swap = {Regime.CRITICAL_L1: Regime.CRITICAL_L2, Regime.CRITICAL_L2: Regime.CRITICAL_L1}
    assert lb is swap.get(la, la)


@given(st.floats(min_value=1.01, max_value=1.9))
def test_equal_exponents_depend_on_m_only(m):
    p = Parameters(3, m, m)
    ex = scaling_exponents(p)
    assert ex.p == pytest.approx(ex.q)
    label = classify_regime(p).label
    if abs(m - 4 / 3) < 1e-9:
        assert label is Regime.INTERSECTION
    elif m > 4 / 3:
        assert label is Regime.SUBCRITICAL
    else:
        assert label in (Regime.REGION_ONE_SIX, Regime.SUPERCRITICAL)


@given(exps, exps)
def test_small_perturbation_keeps_label(m1, m2):
    p = Parameters(3, m1, m2)
    ex = scaling_exponents(p)
    if min(abs(ex.p - 1), abs(ex.q - 1), abs(ex.r - 1), abs(m1 - 4 / 3), abs(m2 - 4 / 3)) < 1e-6:
        return
    q = Parameters(3, m1 * (1 + 1e-12), m2)
    assert classify_regime(p).label is classify_regime(q).label


def test_region_membership():
    assert in_region_one_six(Parameters(3, 1.3, 1.2))
    assert not in_region_one_six(Parameters(3, 1.5, 1.25))
