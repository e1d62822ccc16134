import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardycert import quad
from hardycert.errors import NonFiniteSample
from hardycert.quad import QuadratureSpec, cumulative, integrate


def test_exponential_half_line():
    res = integrate(lambda r: np.exp(-r), 0.0, math.inf)
    assert res.converged
    assert res.value == pytest.approx(1.0, rel=1e-8)


def test_rational_power_closed_form():
    # arctan antiderivative gives pi/4
    res = integrate(lambda r: r**2 / (1 + r**2) ** 2, 0.0, math.inf)
    assert res.value == pytest.approx(math.pi / 4, rel=1e-8)


def test_declared_endpoint_singularity():
    res = integrate(lambda r: r**-0.5, 0.0, 1.0, singular=[0.0])
    assert res.value == pytest.approx(2.0, rel=1e-8)


def test_full_line_gaussian():
    res = integrate(lambda s: np.exp(-0.5 * s * s), -math.inf, math.inf)
    assert res.value == pytest.approx(math.sqrt(2 * math.pi), rel=1e-10)


def test_reversed_limits_flip_sign():
    assert integrate(np.cos, 1.0, 0.0).value == pytest.approx(-math.sin(1.0), rel=1e-12)


@pytest.mark.parametrize("f, grid, expected", [
    (lambda r: np.ones_like(r), [0.25, 0.5, 1.0], [0.25, 0.5, 1.0]),
    (lambda r: np.exp(-r), [math.log(2.0)], [0.5]),
    (lambda r: r, [1.0, 2.0], [0.5, 2.0]),
])
def test_cumulative_examples(f, grid, expected):
    np.testing.assert_allclose(cumulative(f, 0.0, grid), expected, rtol=1e-10)


def test_nonfinite_sample_raises():
    with pytest.raises(NonFiniteSample):
        integrate(lambda r: np.where(r > 0.5, np.nan, 1.0), 0.0, 1.0)


def test_spec_rejects_tolerance_below_roundoff():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=1e-17)


def test_segments_sum_to_whole():
    edges = [0.0, 0.3, 1.0, 4.0, math.inf]
    vals, errs, conv, _ = quad.integrate_segments(lambda r: np.exp(-r), edges)
    assert conv.all()
    np.testing.assert_allclose(vals, -np.diff(np.exp(-np.array(edges))), rtol=1e-10)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-5, 5), width=st.floats(0.01, 10), k=st.integers(0, 5))
def test_polynomials_are_exact(a, width, k):
    b = a + width
    exact = (b ** (k + 1) - a ** (k + 1)) / (k + 1)
    got = integrate(lambda x: x**k, a, b).value
    assert got == pytest.approx(exact, rel=1e-10, abs=1e-12 * max(1.0, abs(a), abs(b)) ** (k + 1))


@settings(max_examples=30, deadline=None)
@given(rate=st.floats(0.05, 20), split=st.floats(0.0, 5.0))
def test_additivity_over_breakpoint(rate, split):
    f = lambda r: np.exp(-rate * r)  # noqa: E731
    whole = integrate(f, 0.0, math.inf).value
    parts = integrate(f, 0.0, split).value + integrate(f, split, math.inf).value
    assert whole == pytest.approx(1.0 / rate, rel=1e-8)
    assert parts == pytest.approx(whole, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(exponent=st.floats(-0.9, 2.0))
def test_power_singularity_against_closed_form(exponent):
    got = integrate(lambda r: r**exponent, 0.0, 1.0, singular=[0.0]).value
    assert got == pytest.approx(1.0 / (exponent + 1.0), rel=1e-7)


def test_slow_power_tail_reaches_past_double_resolution():
    # with x = t/(1-t) the mass beyond x ~ 1e16 is unreachable; here it is 4e-4 of the total
    res = integrate(lambda r: r**-1.25, 1.0, math.inf, QuadratureSpec(rel_tol=1e-12))
    assert res.value == pytest.approx(4.0, rel=1e-11)


def test_geometric_map_from_zero():
    res = integrate(lambda r: np.exp(-r), 0.0, math.inf, QuadratureSpec(transform="geometric"))
    assert res.value == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("transform", ["rational", "log", "geometric"])
def test_all_maps_agree_on_exponential_tail(transform):
    res = integrate(lambda r: np.exp(-2 * r), 1.0, math.inf, QuadratureSpec(transform=transform))
    assert res.value == pytest.approx(0.5 * math.exp(-2.0), rel=1e-9)


@pytest.mark.parametrize("a", [10.0, 1e3, 1e6, -1e6])
def test_exponential_tail_far_from_origin(a):
    # the map must keep unit resolution at the anchor wherever it is
    res = integrate(lambda s: np.exp(-(s - a)), a, math.inf)
    assert res.value == pytest.approx(1.0, rel=1e-10)
    res = integrate(lambda s: np.exp(s - a), -math.inf, a)
    assert res.value == pytest.approx(1.0, rel=1e-10)
