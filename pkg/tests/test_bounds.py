import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kfactor.bounds import (canonical_w_size, divb_bound, expected_ks_count, harvest_moments, nps_exponent,
                            nps_value, p_s, phi)
from kfactor.errors import ParameterError


def test_phi_examples():
    assert phi(3) == Fraction(3, 5)
    assert phi(2) == 1
    assert phi(4) == Fraction(4, 9)
    with pytest.raises(ParameterError):
        phi(1)


def test_phi_strictly_decreasing_and_above_two_over_s():
    vals = [phi(s) for s in range(2, 40)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    for s in range(3, 40):
        assert phi(s) < Fraction(2, s)
        for n in (2, 10, 1000):
            assert n ** -float(phi(s)) > n ** (-2 / s)


def test_p_s_examples():
    assert p_s(1000, 2) == pytest.approx(0.0069078, abs=1e-7)
    assert p_s(1000, 3) == pytest.approx(1000 ** -0.6, rel=1e-12)
    with pytest.raises(ParameterError):
        p_s(2, 3)


def test_nps_identity():
    for s in range(3, 11):
        assert nps_exponent(s) == 0
        for n in (10 ** 2, 10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6):
            assert abs(nps_value(n, s) - 1) < 1e-12


def test_expected_ks_count_examples():
    rep = expected_ks_count(3, 0.4, 3)
    assert rep.mu == pytest.approx(0.4 ** 3)
    rep = expected_ks_count(10, 1.0, 3)
    assert rep.mu == 120
    # ordered pairs of triangles sharing exactly two vertices: 120 * 3 * 7
    assert rep.delta_bar == 2520
    assert rep.exponent_bound > 0
    # binom(200, 3) * p^3 evaluated independently; the ratio mu/n_sub is about 0.80, not above 1
    p = 200 ** (-2 / 3 + 0.1)
    rep = expected_ks_count(200, p, 3)
    assert rep.mu == pytest.approx(1313400 * p ** 3, rel=1e-12)
    assert rep.mu / 200 == pytest.approx(0.8047, abs=1e-4)


@given(st.integers(4, 30), st.floats(0.01, 1.0), st.integers(2, 5))
def test_ks_overlap_sum_matches_pair_enumeration(n, p, s):
    if n < s:
        return
    rep = expected_ks_count(n, p, s)
    e = math.comb(s, 2)
    brute = sum(math.comb(n, s) * math.comb(s, i) * math.comb(n - s, s - i) * p ** (2 * e - math.comb(i, 2))
                for i in range(2, s))
    assert rep.delta_bar == pytest.approx(brute, rel=1e-12)
    assert rep.exponent_bound == pytest.approx(rep.mu ** 2 / (8 * (rep.mu + rep.delta_bar)) if rep.mu else 0.0)


def test_harvest_moments_mu_formula():
    n, g, s, c = 300, 12, 3, 1.5
    rep = harvest_moments(n, g, s, c)
    kappa = canonical_w_size(n, g, s) / (g * n ** s)
    assert rep.mu == pytest.approx(kappa * g * c ** 5, rel=1e-12)
    assert rep.extra["kappa"] == pytest.approx(kappa)
    doubled = harvest_moments(n, g, s, 2 * c)
    assert doubled.mu / rep.mu == pytest.approx(2 ** 5)


def test_harvest_moments_exponents():
    s = 4
    e1 = math.comb(s + 1, 2)
    rep = harvest_moments(1000, 20, s, 1.0)
    for key, term in rep.terms.items():
        i, j = map(int, key.split(","))
        ci = math.comb(i, 2)
        expect = {0: (2, 2 * s - i, 0, 2 * e1 - 2 - ci),
                  1: (1, 2 * s - i + 1, 1, 2 * e1 - 2 - ci),
                  2: (1, 2 * s - i + 1, 0, 2 * e1 - 1 - ci)}[j]
        assert (term["g_exp"], term["n_exp"], term["delta_exp"], term["p_exp"]) == expect
    assert "1,2" not in rep.terms


def test_harvest_moments_f1_bounded_by_g_f2_vanishing():
    for g in (10, 100, 1000):
        ratios = []
        for n in (10 ** 4, 10 ** 6, 10 ** 8):
            rep = harvest_moments(n, g, 3, 1.0)
            assert rep.extra["F1"] <= g
            ratios.append(rep.extra["F2"] / g)
        assert ratios[0] > ratios[1] > ratios[2]


def test_divb_examples():
    assert divb_bound(100, 0.0, 3, 2) == 0
    assert divb_bound(100, 0.2, 3, 2) == pytest.approx(4 * divb_bound(100, 0.1, 3, 2))
    assert divb_bound(100, 0.1, 3, 2) == pytest.approx((1 / 64) * 0.01 * 10000 * (2 * 100 ** -0.6), rel=1e-12)
    with pytest.raises(ParameterError):
        divb_bound(100, 1.5, 3, 2)
