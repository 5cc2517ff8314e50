import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tcproc import DomainError, bessel_i, mittag_leffler, stirling2
from tcproc.special import SeriesPolicy, upper_gamma


def ml_oracle(alpha, z, dps=60):
    """Power series in extended precision; only used where cancellation fits in ``dps`` digits."""
    with mpmath.workdps(dps):
        z = mpmath.mpf(z)
        return float(mpmath.nsum(lambda n: z ** n / mpmath.gamma(alpha * n + 1), [0, mpmath.inf]))


def ml_half(x):
    with mpmath.workdps(40):
        return float(mpmath.exp(mpmath.mpf(x) ** 2) * mpmath.erfc(x))


def set_partitions(items):
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[head]] + part
        for i in range(len(part)):
            yield part[:i] + [[head] + part[i]] + part[i + 1:]


def test_ml_trivial_values():
    for a in (0.2, 0.5, 0.9, 1.0):
        assert mittag_leffler(a, 0.0) == 1.0
    assert mittag_leffler(1.0, -1.0) == pytest.approx(math.exp(-1), rel=1e-15)


def test_ml_half_erfc_identity():
    assert mittag_leffler(0.5, -1.0) == pytest.approx(ml_half(1.0), abs=1e-14)
    assert mittag_leffler(0.5, -1.0) == pytest.approx(0.4275835762, abs=1e-10)


@pytest.mark.parametrize("x", [0.01, 0.5, 0.99, 1.01, 3.0, 10.0, 25.0, 50.0])
def test_ml_half_over_range(x):
    assert abs(mittag_leffler(0.5, -x) - ml_half(x)) <= 1e-10


@pytest.mark.parametrize("alpha", [0.3, 0.6, 0.8, 0.95])
@pytest.mark.parametrize("x", [0.3, 1.0, 2.0, 5.0])
def test_ml_against_extended_series(alpha, x):
    assert abs(mittag_leffler(alpha, -x) - ml_oracle(alpha, -x)) <= 1e-10


def test_ml_large_argument_asymptotics():
    # E_a(-x) ~ x^-1 / Gamma(1 - a) - x^-2 / Gamma(1 - 2a) as x -> inf
    for a in (0.3, 0.7):
        x = 5e3
        approx = 1 / (x * math.gamma(1 - a)) - 1 / (x * x * math.gamma(1 - 2 * a))
        assert mittag_leffler(a, -x) == pytest.approx(approx, rel=1e-6)


def test_ml_series_and_integral_branches_agree():
    wide = SeriesPolicy(switch_radius=8.0)
    for a in (0.4, 0.8):
        for x in (1.5, 4.0, 7.5):
            assert mittag_leffler(a, -x, wide) == pytest.approx(mittag_leffler(a, -x), abs=1e-11)


def test_ml_domain():
    with pytest.raises(DomainError):
        mittag_leffler(0.5, 0.1)
    with pytest.raises(DomainError):
        mittag_leffler(1.2, -1.0)
    with pytest.raises(DomainError):
        mittag_leffler(0.0, -1.0)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_ml_completely_monotone_samples(alpha):
    x = np.linspace(0.0, 20.0, 201)
    e = mittag_leffler(alpha, -x)
    assert np.all(e > 0)
    assert np.all(np.diff(e) < 0)
    assert np.all(np.diff(e, 2) > -1e-12)


def test_bessel_values():
    assert bessel_i(0, 0.0) == 1.0
    assert bessel_i(1, 0.0) == 0.0
    series30 = sum((1.0) ** (2 * n) / math.factorial(n) ** 2 for n in range(30))
    assert bessel_i(0, 2.0) == pytest.approx(series30, rel=1e-15)
    assert bessel_i(0, 2.0) == pytest.approx(2.2795853023, abs=1e-10)


@pytest.mark.parametrize("k", [0, 1, 3, 10, 40])
@pytest.mark.parametrize("z", [0.1, 5.0, 29.0, 31.0, 100.0, 650.0, 2000.0])
def test_bessel_against_mpmath(k, z):
    ref = float(mpmath.besseli(k, z) * mpmath.exp(-z))
    got = bessel_i(k, z, scaled=True)
    assert got == pytest.approx(ref, rel=1e-11, abs=1e-300)
    if z <= 30:
        assert abs(bessel_i(k, z) - float(mpmath.besseli(k, z))) <= 1e-12 * max(1.0, float(mpmath.besseli(k, z)))


def test_bessel_negative_order_and_overflow():
    assert bessel_i(-3, 4.0) == bessel_i(3, 4.0)
    assert np.isinf(bessel_i(0, 800.0))
    assert np.isfinite(bessel_i(0, 800.0, scaled=True))
    with pytest.raises(DomainError):
        bessel_i(0, -1.0)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 30), st.floats(0.05, 60.0))
def test_bessel_recurrence(k, z):
    lhs = bessel_i(k - 1, z, scaled=True) - bessel_i(k + 1, z, scaled=True)
    rhs = 2 * k / z * bessel_i(k, z, scaled=True)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, bessel_i(k - 1, z, scaled=True))


def test_stirling_values():
    for k in range(1, 12):
        assert stirling2(k, k) == 1
    for k, i in ((3, 2), (5, 2), (6, 3)):
        count = sum(1 for p in set_partitions(list(range(k))) if len(p) == i)
        assert stirling2(k, i) == count
    assert stirling2(3, 2) == 3 and stirling2(5, 2) == 15
    with pytest.raises(DomainError):
        stirling2(3, 4)
    with pytest.raises(DomainError):
        stirling2(3, 0)


def test_stirling_recurrence():
    for k in range(1, 20):
        for i in range(2, k + 1):
            assert stirling2(k + 1, i) == i * stirling2(k, i) + stirling2(k, i - 1)


@pytest.mark.parametrize("a", [-0.9, -0.5, -0.1, 0.3])
@pytest.mark.parametrize("x", [1e-6, 0.05, 0.9, 1.1, 7.0, 60.0])
def test_upper_gamma_against_mpmath(a, x):
    assert upper_gamma(a, x) == pytest.approx(float(mpmath.gammainc(a, x)), rel=1e-12)
