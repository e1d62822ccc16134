import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardycert import criteria as C, weights as W
from hardycert.errors import QOutOfRange

INF = math.inf
# mpmath oracles (30 digits), see the ledger for derivations
GAUSS_BPLUS = 0.478812895037724205939119421147       # sup_t ∫_t^∞ e^{-s²/2} ∫_0^t e^{s²/2}
EXP3_H2_AT_1 = 1.47641877382643277260412985816       # outer part, weights r²e^{-r}, r⁴e^{-r}


def dense_scan_bplus(w1, w2, m, q, t_max, n=100_000):
    """Brute-force oracle: cumulative trapezoid sums on a dense grid."""
    t = np.linspace(m, t_max, n)
    a = np.exp(w1.log(t))
    d = np.exp(w2.log(t) / (1.0 - q))
    tail = np.concatenate([np.cumsum(((a[1:] + a[:-1]) * np.diff(t) / 2)[::-1])[::-1], [0.0]])
    head = np.concatenate([[0.0], np.cumsum((d[1:] + d[:-1]) * np.diff(t) / 2)])
    return float(np.max(tail * head ** (q - 1)))


def test_exp_pair_closed_form():
    e = W.ExpLine()
    res = C.b_plus(e, e, 0.0, 2.0)
    assert res.is_finite and res.at_infinity
    assert res.value == pytest.approx(1.0, abs=1e-6)
    assert C.b_minus(e, e, 0.0, 2.0).value == pytest.approx(1.0, abs=1e-6)


def test_gaussian_bplus_against_oracles():
    g = W.GaussianLine()
    res = C.b_plus(g, g, 0.0, 2.0)
    assert res.value == pytest.approx(GAUSS_BPLUS, rel=1e-8)
    # the tail beyond 12 is below 1e-30, so the dense scan is faithful there
    assert res.value == pytest.approx(dense_scan_bplus(g, g, 0.0, 2.0, 12.0), rel=1e-4)


def test_inner_dual_divergence():
    w1 = W.ExpLine()
    w2 = W.MonomialLine(power=2.0, center=0.5)  # (s - 1/2)^2 vanishes at m
    res = C.b_plus(w1, w2, 0.5, 2.0)
    assert not res.is_finite
    assert C.INNER_DIVERGES in res.cause


def test_left_restricted_mass_gives_zero_bminus():
    w1 = W.ExpLine().restricted(0.0, INF)
    assert C.b_minus(w1, W.ExpLine(), 0.0, 2.0).value == 0.0


def test_muckenhoupt_hm():
    e = W.ExpLine()
    assert C.muckenhoupt_HM(e, e, 2.0).value == pytest.approx(1.0, abs=1e-6)
    one = W.ConstantLine()
    assert not C.muckenhoupt_HM(one, one, 2.0).is_finite
    # the radial pair r²e^{-r}, r⁴e^{-r}: ∫_0^ρ r^{-4} e^{r} diverges, so H_M is infinite
    w1 = W.RadialLine(family=W.Exponential(1.0, dimension=3), extra_power=2.0)
    w2 = W.RadialLine(family=W.Exponential(1.0, dimension=3), extra_power=4.0)
    assert not C.muckenhoupt_HM(w1, w2, 2.0).is_finite


def test_h2_examples():
    assert C.h2(W.PowerType(0, 2, -2, 3), W.median(W.PowerType(0, 2, -2, 3)).median, 2.0).is_finite
    assert not C.h2(W.PowerType(0, 2, -1, 3), 1.0, 2.0).is_finite
    res = C.h2(W.Exponential(1.0, dimension=3), 1.0, 2.0)
    assert res.value == pytest.approx(EXP3_H2_AT_1, rel=1e-8)


def test_factor_formulas():
    assert C.lower_factor(2.0) == pytest.approx((math.sqrt(2) - 1) ** 2 / 2, rel=1e-15)
    assert C.upper_factor(2.0) == pytest.approx(16.0, rel=1e-15)
    assert C.muckenhoupt_upper_factor(2.0) == pytest.approx(4.0, rel=1e-15)


def test_certify_line_examples():
    e = W.ExpLine()
    rep = C.certify_poincare_line(W.WeightPair(e, e, 2.0))
    assert rep.holds
    assert rep.lower_bound == pytest.approx(0.0857864376, rel=1e-6)
    assert rep.upper_bound == pytest.approx(16.0, rel=1e-6)
    bad = C.certify_poincare_line(W.WeightPair(e, W.ExpLine(rate=2.0), 2.0))
    assert not bad.holds and bad.upper_bound == INF
    js = bad.to_json()
    assert js["upper_bound"] == "inf" and js["holds"] is False


def test_certify_hardy_poincare_examples():
    assert C.certify_hardy_poincare(W.PowerType(0, 2, -2, 3), 2.0).holds
    rep = C.certify_hardy_poincare(W.PowerType(0, 2, -1, 3), 2.0)
    assert not rep.holds
    with pytest.raises(QOutOfRange):
        C.certify_hardy_poincare(W.PowerType(0, 2, -2, 3), 3.0)


def test_asymptotic_special_case_from_exponents():
    # gamma=0, beta=p/(p-1), alpha=-1/(2-p) at p=1.4: N + alpha beta = 3 - 5.833 < 0
    p = 1.4
    fam = W.PowerType(0.0, p / (p - 1), -1 / (2 - p), 3)
    assert W.mass_is_finite(fam) is True
    assert C.certify_hardy_poincare(fam, 2.0).holds


@settings(max_examples=20, deadline=None)
@given(c=st.floats(0.1, 10.0), q=st.sampled_from([1.5, 2.0, 3.0]))
def test_scaling_w2_scales_bounds_inversely(c, q):
    e = W.ExpLine()
    base = C.certify_poincare_line(W.WeightPair(e, e, q))
    scaled = C.certify_poincare_line(W.WeightPair(e, e.scaled(c), q))
    assert scaled.upper_bound == pytest.approx(base.upper_bound / c, rel=1e-6)
    assert scaled.lower_bound == pytest.approx(base.lower_bound / c, rel=1e-6)


@settings(max_examples=20, deadline=None)
@given(rate=st.floats(0.3, 3.0), shift=st.floats(-2.0, 2.0), m=st.floats(-1.0, 1.0))
def test_reflection_symmetry(rate, shift, m):
    w1 = W.ExpLine(rate=rate, center=shift)
    w2 = W.GaussianLine(sigma=2.0, center=-shift)
    left = C.b_minus(w1, w2, m, 2.0)
    right = C.b_plus(w1.reflected(), w2.reflected(), -m, 2.0)
    assert left.value == pytest.approx(right.value, rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(q=st.floats(1.2, 4.0))
def test_sandwich_factors_are_ordered(q):
    assert 0 < C.lower_factor(q) < 1 < C.upper_factor(q)
