import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from hardycert import hardy_construct as H
from hardycert.errors import ConditionsViolated
from hardycert.functions import TestFunction


def profile(gamma, beta, alpha, theta=2.0, q=2.0, N=3):
    return H.ThetaLaplaceProfile(H.PowerTypeG(gamma, beta, alpha), theta, q, N)


def fd_theta_laplacian(gamma, beta, alpha, theta, N, r):
    """mpmath oracle: r^{1-N} (r^{N-1} |g'|^{θ-2} g')' from g alone."""
    mp.mp.dps = 40
    g = lambda x: x ** (gamma + 2) * (1 + x**beta) ** alpha  # noqa: E731
    def flux(x):
        d = mp.diff(g, x)
        return x ** (N - 1) * abs(d) ** (theta - 2) * d
    return float(mp.diff(flux, mp.mpf(r)) * mp.mpf(r) ** (1 - N))


def test_laplacian_of_square():
    assert H.theta_laplacian(profile(0, 1, 0), np.array([0.3, 1.0, 7.0])) == pytest.approx(6.0)
    assert H.theta_laplacian(profile(0, 1, 0, theta=3.0), 1.0) == pytest.approx(16.0, rel=1e-12)


def test_laplacian_against_finite_differences():
    got = H.theta_laplacian(profile(0, 2, -1), 1.0)
    assert got == pytest.approx(fd_theta_laplacian(0, 2, -1, 2.0, 3, 1.0), rel=1e-6)


def test_square_derivation_matches_classical_hardy():
    d = H.derive_hardy(profile(0, 1, 0))
    r = np.array([0.5, 2.0])
    np.testing.assert_allclose(d.w1.h(r), 6.0)
    np.testing.assert_allclose(d.w2.h(r), (2 * r) ** 2 / 6.0)
    assert d.c_h == 4.0
    # family form: (q/(alpha beta + gamma + N))^q with alpha=gamma=0
    assert d.c_h_family == pytest.approx((2.0 / 3.0) ** 2, rel=1e-12)


def test_corollary_constant():
    d = H.derive_hardy(H.corollary_profile(1.5, 7))
    assert d.optimal
    assert d.c_h_family == pytest.approx(4.0, rel=1e-12)
    assert H.corollary_constant(1.5, 7) == pytest.approx(4.0, rel=1e-15)


def test_corollary_p_range():
    r7 = H.corollary_p_range(7)
    assert r7.p_minus == r7.p_plus == Fraction(3, 2) and not r7.applicable
    r8 = H.corollary_p_range(8)
    assert (r8.p_minus, r8.p_plus) == (Fraction(4, 3), Fraction(5, 3))
    assert not H.corollary_p_range(5).applicable


def test_war1_violation():
    # sign(alpha beta + gamma + 2) != sign(gamma + 2)
    with pytest.raises(ConditionsViolated):
        H.derive_hardy(profile(0, 2, -1.5, N=7))


def test_zero_test_function():
    d = H.derive_hardy(profile(0, 1, 0))
    zero = TestFunction(np.array([0.0, 1.0, 2.0]), np.zeros(3), radial=True)
    chk = H.verify_hardy_sample(d, zero)
    assert (chk.lhs, chk.rhs, chk.ratio) == (0.0, 0.0, 0.0)


def test_hat_function_ratio():
    d = H.derive_hardy(profile(0, 1, 0))
    assert H.verify_hardy_sample(d, TestFunction.hat(1.0, 3.0, radial=True)).ratio <= 1.0


def test_rescaled_extremal_trend_increases_toward_one():
    d = H.derive_hardy(H.corollary_profile(1.5, 7))
    phi = H.hardy_extremal_profile(d, 1e-2, 1e2)
    trend = H.rescaling_trend(d, phi, [1.0, 0.1, 0.01])
    assert all(b > a for a, b in zip(trend, trend[1:]))
    assert trend[-1] <= 1.0 + 1e-9


# -- closed forms vs brute force on the defining curves -----------------------

def reference_curves(gamma, beta, alpha, N, q, s):
    eta = alpha * beta + gamma
    num = np.abs((s * (eta + 2) * (eta + N) + (gamma + 2) * (gamma + N)) * (s + 1)
                 - s * alpha * beta * (alpha - 1))
    c1_curve = num / (s + 1) ** 2
    f = np.abs(s * (-eta - 2) + (-gamma - 2)) / (1 + s)
    return c1_curve, f**q * c1_curve ** (1 - q)


@st.composite
def optimal_params(draw):
    """Constructive draw of the four conditions plus opt-as, in eta = alpha beta + gamma."""
    N = draw(st.integers(3, 9))
    gamma = draw(st.floats(-N + 0.1, -2.1))
    top = min(gamma, -gamma - 2.0 - N)
    frac = draw(st.floats(0.01, 1.0))
    eta = -N + frac * (top + N)
    beta = draw(st.floats(0.5, 5.0))
    q = draw(st.sampled_from([1.5, 2.0, 3.0]))
    return gamma, beta, (eta - gamma) / beta, N, q


def _closed_form_applies(gamma, beta, alpha, N):
    g = H.PowerTypeG(gamma, beta, alpha)
    return all(H.example_conditions(g, N).values()) and H.optimality_condition(g, N)


@settings(max_examples=40, deadline=None)
@given(optimal_params())
def test_c1_c2_closed_forms_match_brute_force(params):
    gamma, beta, alpha, N, q = params
    assume(_closed_form_applies(gamma, beta, alpha, N))
    eta = alpha * beta + gamma
    assume(eta + N > 1e-3)
    s = np.concatenate([[0.0], np.geomspace(1e-12, 1e12, 100_000 - 1)])
    cur1, cur2 = reference_curves(gamma, beta, alpha, N, q, s)
    c1, c2, closed = H.family_constants(profile(gamma, beta, alpha, q=q, N=N))
    assert closed
    assert c1 == pytest.approx(cur1.min(), rel=1e-6)
    assert c2 == pytest.approx(cur2.max(), rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(g=st.floats(-1.5, 2.0), b=st.floats(0.3, 4.0), a=st.floats(-3.0, 2.0),
       theta=st.sampled_from([1.5, 2.0, 3.0]), N=st.integers(2, 6), r=st.floats(0.05, 20.0))
def test_theta_laplacian_property(g, b, a, theta, N, r):
    prof = profile(g, b, a, theta=theta, N=N)
    lfrac = g + 2 + a * b * r**b / (1 + r**b)
    assume(abs(lfrac) > 1e-3)  # |g'|^(θ-2) is singular where g' vanishes
    got = H.theta_laplacian(prof, r)
    ref = fd_theta_laplacian(g, b, a, theta, N, r)
    assert got == pytest.approx(ref, rel=1e-7, abs=1e-12 * max(1.0, abs(ref)))
