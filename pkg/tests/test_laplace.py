import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from tcproc import InversionDisagreement, TransformFunction, invert, make_stable, mittag_leffler
from tcproc.exceptions import DomainError, InversionError
from tcproc.laplace import contour_invert, gaver_stehfest, order_for_sector


def constant_one():
    return TransformFunction(lambda r: 1.0 / r, mp_evaluator=lambda r: 1 / r)


def decaying():
    return TransformFunction(lambda r: 1.0 / (r + 1.0), known_singularity_abscissa=-1.0,
                             mp_evaluator=lambda r: 1 / (r + 1))


def half_density_transform(u):
    return TransformFunction(lambda r: np.sqrt(r) / r * np.exp(-u * np.sqrt(r)),
                             sector=math.pi,
                             mp_evaluator=lambda r: mpmath.sqrt(r) / r * mpmath.exp(-u * mpmath.sqrt(r)))


def half_density(t, u):
    return math.exp(-u * u / (4 * t)) / math.sqrt(math.pi * t)


@pytest.mark.parametrize("method", ["contour", "accelerated-real", "cross-check"])
def test_elementary_transforms(method):
    assert invert(constant_one(), 3.0, method) == pytest.approx(1.0, abs=1e-9)
    assert invert(decaying(), 2.0, method) == pytest.approx(math.exp(-2.0), abs=1e-9)


def test_ml_laplace_transform():
    f = make_stable(0.5)
    gh = TransformFunction(lambda r: f(r) / (r * (1.0 + f(r))),
                           mp_evaluator=lambda r: f(r) / (r * (1 + f(r))))
    expected = mittag_leffler(0.5, -1.0)
    assert invert(gh, 1.0, "cross-check") == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.4275835762, abs=1e-10)


def test_half_density_closed_form_is_certified_by_forward_transform():
    # the closed form must reproduce r^(-1/2) exp(-u sqrt r) under an independent quadrature
    for u in (0.1, 1.0, 3.0):
        for r in (0.3, 1.0, 4.0):
            val, _ = integrate.quad(lambda t: math.exp(-r * t) * half_density(t, u), 0.0, np.inf,
                                    epsabs=0.0, epsrel=1e-12, limit=400)
            assert val == pytest.approx(math.exp(-u * math.sqrt(r)) / math.sqrt(r), rel=1e-9)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("u", [0.1, 1.0, 3.0])
def test_half_density_inversion(t, u):
    got = invert(half_density_transform(u), t, "cross-check")
    assert got == pytest.approx(half_density(t, u), rel=1e-5)
    assert invert(half_density_transform(u), t) == pytest.approx(half_density(t, u), rel=1e-10)


def test_contour_is_vectorised_over_time():
    ts = np.array([0.5, 1.0, 4.0])
    vals = contour_invert(lambda r: 1.0 / (r + 1.0), ts)
    np.testing.assert_allclose(vals, np.exp(-ts), rtol=1e-12)


def test_order_scaling():
    assert order_for_sector(math.pi) <= 40
    assert order_for_sector(math.pi / 2 + 0.1) > order_for_sector(math.pi)


def test_gaver_needs_higher_order_for_peaked_originals():
    gh = half_density_transform(3.0)
    exact = half_density(0.5, 3.0)
    low = abs(gaver_stehfest(gh.mp_evaluator, 0.5, 8) - exact)
    high = abs(gaver_stehfest(gh.mp_evaluator, 0.5, 34) - exact)
    assert high < low


def test_disagreement_is_reported():
    # a unit step at t = 1 is outside both methods' comfort zone right at the jump
    gh = TransformFunction(lambda r: np.exp(-r) / r, mp_evaluator=lambda r: mpmath.exp(-r) / r,
                           sector=math.pi / 2 + 0.05)
    with pytest.raises(InversionDisagreement) as info:
        invert(gh, 1.0, "cross-check")
    assert info.value.contour is not None and info.value.real_axis is not None


def test_errors():
    with pytest.raises(DomainError):
        invert(constant_one(), 0.0)
    with pytest.raises(DomainError):
        invert(constant_one(), 1.0, method="talbot")
    with pytest.raises(DomainError):
        TransformFunction(lambda r: r, sector=1.0)
    real_only = TransformFunction(lambda r: 1.0 / r, supports_complex=False,
                                  mp_evaluator=lambda r: 1 / r)
    with pytest.raises(InversionError):
        invert(real_only, 1.0)
    assert invert(real_only, 1.0, "accelerated-real") == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(InversionError):
        invert(TransformFunction(lambda r: np.full(np.shape(r), np.nan)), 1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-5.0, 5.0).filter(lambda c: abs(c) > 1e-3), st.floats(0.1, 10.0), st.floats(0.1, 3.0))
def test_linearity(c, t, a):
    base = TransformFunction(lambda r: 1.0 / (r + a), known_singularity_abscissa=-a)
    assert invert(base.scaled(c), t) == pytest.approx(c * invert(base, t), rel=1e-10, abs=1e-13)
    assert invert(base, t) == pytest.approx(math.exp(-a * t), rel=1e-9, abs=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.2, 5.0))
def test_positive_abscissa_shift(a, t):
    gh = TransformFunction(lambda r: 1.0 / (r - a), known_singularity_abscissa=a)
    assert invert(gh, t) == pytest.approx(math.exp(a * t), rel=1e-9)
