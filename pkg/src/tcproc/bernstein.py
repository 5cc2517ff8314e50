"""Bernstein functions with absolutely continuous Levy measures.

A Bernstein function here is ``f(x) = a + b x + int_0^inf (1 - exp(-x s)) levy_density(s) ds``
carried together with its Levy tail ``nu(s) = a + int_s^inf levy_density``.
The stable and tempered-stable families have closed forms; ``make_custom``
wraps an arbitrary density and evaluates everything by quadrature.
"""
import cmath
import functools
import math

import mpmath
import numpy as np
from scipy import integrate, optimize
from scipy.special import gamma, gammainc

from ._validation import check_scalar
from .exceptions import DomainError, IntegrabilityError
from .special import upper_gamma

__all__ = ["BernsteinFunction", "make_stable", "make_tempered_stable", "make_custom"]


def _is_mp(x):
    return isinstance(x, (mpmath.mpf, mpmath.mpc))


class BernsteinFunction:
    """Triple ``(a, b, levy_density)`` with its Laplace exponent and Levy tail.

    Instances are immutable after construction. ``laplace_exponent`` accepts
    real or complex scalars and arrays (principal branch) and, for the
    closed-form families, mpmath numbers. ``index`` is the exponent
    ``kappa`` of the small-``s`` behaviour ``tail(s) ~ s**-kappa``; it steers
    mesh grading and the contour opening angle used for inversion.
    """

    __slots__ = ("a", "b", "_levy_density", "_tail", "_laplace_exponent",
                 "_integrated_tail", "infinite_activity", "index", "name",
                 "params", "supports_complex", "supports_mp")

    def __init__(self, *, laplace_exponent, levy_density, tail, integrated_tail,
                 a=0.0, b=0.0, infinite_activity=True, index=None, name="custom",
                 params=None, supports_complex=True, supports_mp=False):
        object.__setattr__(self, "a", float(a))
        object.__setattr__(self, "b", float(b))
        object.__setattr__(self, "_laplace_exponent", laplace_exponent)
        object.__setattr__(self, "_levy_density", levy_density)
        object.__setattr__(self, "_tail", tail)
        object.__setattr__(self, "_integrated_tail", integrated_tail)
        object.__setattr__(self, "infinite_activity", bool(infinite_activity))
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "params", dict(params or {}))
        object.__setattr__(self, "supports_complex", supports_complex)
        object.__setattr__(self, "supports_mp", supports_mp)

    def __setattr__(self, key, value):
        raise AttributeError("BernsteinFunction is immutable")

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"BernsteinFunction({self.name}: {args})"

    def __call__(self, x):
        return self.laplace_exponent(x)

    def laplace_exponent(self, x):
        return self._laplace_exponent(x)

    def levy_density(self, s):
        return self._levy_density(s)

    def tail(self, s):
        """Levy tail ``nu(s) = a + int_s^inf levy_density``, ``s > 0``."""
        return self._tail(s)

    def integrated_tail(self, s):
        """``int_0^s nu(r) dr``; finite because ``s * nu(s) -> 0``."""
        return self._integrated_tail(s)

    def reconstruct(self, x):
        """Evaluate ``a + b x + int (1 - e^{-xs}) levy_density(s) ds`` by adaptive quadrature.

        Independent of the closed form; the integral is split at ``s = 1/x``.
        """
        x = check_scalar(x, "x", lo=0.0)
        if x == 0.0:
            return self.a
        return self.a + self.b * x + _levy_integral(self._levy_density, x)

    def inverse(self, y):
        """Real ``x >= 0`` with ``f(x) = y`` (``f`` is increasing)."""
        y = check_scalar(y, "y", lo=self.a)
        if y == self.a:
            return 0.0
        hi = 1.0
        while float(np.real(self(hi))) < y:
            hi *= 2.0
            if hi > 1e300:
                raise DomainError(f"f never reaches {y}")
        return optimize.brentq(lambda x: float(np.real(self(x))) - y, 0.0, hi,
                               xtol=1e-15, rtol=1e-14)


def _levy_integral(density, x):
    """``int_0^inf (1 - exp(-x s)) density(s) ds`` for real ``x > 0``."""
    cut = 1.0 / x

    def g(s):
        return -math.expm1(-x * s) * density(s)

    lo, _ = integrate.quad(g, 0.0, cut, epsabs=0.0, epsrel=1e-12, limit=400)
    hi, _ = integrate.quad(g, cut, np.inf, epsabs=0.0, epsrel=1e-12, limit=400)
    return lo + hi


# ---------------------------------------------------------------- stable

def make_stable(alpha):
    """``f(x) = x**alpha``: the alpha-stable subordinator, ``0 < alpha < 1``."""
    alpha = check_scalar(alpha, "alpha", lo=0.0, hi=1.0, lo_open=True, hi_open=True)
    g1 = gamma(1.0 - alpha)
    g2 = gamma(2.0 - alpha)

    def lap(x):
        if _is_mp(x):
            return x ** alpha
        return np.power(x, alpha)

    def dens(s):
        return alpha * np.power(s, -alpha - 1.0) / g1

    def tail(s):
        return np.power(s, -alpha) / g1

    def itail(s):
        return np.power(s, 1.0 - alpha) / g2

    return BernsteinFunction(laplace_exponent=lap, levy_density=dens, tail=tail,
                             integrated_tail=itail, index=alpha, name="stable",
                             params={"alpha": alpha}, supports_mp=True)


# ---------------------------------------------------------------- tempered stable

def make_tempered_stable(alpha, beta):
    """``f(x) = (x + beta)**alpha - beta**alpha`` with exponentially tempered stable jumps."""
    alpha = check_scalar(alpha, "alpha", lo=0.0, hi=1.0, lo_open=True, hi_open=True)
    beta = check_scalar(beta, "beta", lo=0.0, lo_open=True)
    g1 = gamma(1.0 - alpha)
    ba = beta ** alpha
    c = alpha / g1

    def lap(x):
        if _is_mp(x):
            return mpmath.mpf(ba) * mpmath.expm1(alpha * mpmath.log1p(x / beta))
        x = np.asarray(x)
        # expm1/log1p keep full relative accuracy for |x| << beta
        out = ba * np.expm1(alpha * np.log1p(x / beta))
        return out if out.ndim else out[()]

    def dens(s):
        return c * np.exp(-beta * np.asarray(s)) * np.power(s, -alpha - 1.0)

    def tail(s):
        # int_s^inf c e^{-beta u} u^{-alpha-1} du = c beta^alpha Gamma(-alpha, beta s)
        return c * ba * upper_gamma(-alpha, beta * np.asarray(s, dtype=float))

    def itail(s):
        s = np.asarray(s, dtype=float)
        out = s * tail(s) + c * beta ** (alpha - 1.0) * gammainc(1.0 - alpha, beta * s) * g1
        return out if out.ndim else float(out)

    return BernsteinFunction(laplace_exponent=lap, levy_density=dens, tail=tail,
                             integrated_tail=itail, index=alpha, name="tempered_stable",
                             params={"alpha": alpha, "beta": beta}, supports_mp=True)


# ---------------------------------------------------------------- custom

def _local_slope(fun, s1, s2):
    v1, v2 = float(fun(s1)), float(fun(s2))
    if v1 <= 0 or v2 <= 0:
        return None
    return (math.log(v2) - math.log(v1)) / (math.log(s2) - math.log(s1))


def make_custom(levy_density, b=0.0, domain_hints=None):
    """Bernstein function from a user-supplied Levy density (killing rate 0).

    Parameters
    ----------
    levy_density : callable
        ``s -> density(s) >= 0`` on ``(0, inf)``. It should accept numpy
        arrays; complex arguments are used for evaluation off the real
        axis (see ``domain_hints['complex']``).
    b : float
        Drift.
    domain_hints : dict, optional
        ``index``: small-``s`` exponent ``kappa`` with ``density ~ s**(-1-kappa)``
        (estimated when absent); ``complex``: whether the density is
        analytic and decaying in the open right half-plane and along the
        rays used by contour inversion (default True). Complex
        exponents are then evaluated along a rotated integration ray.

    Raises
    ------
    IntegrabilityError
        If ``int min(s, 1) density(s) ds`` appears to diverge.
    """
    b = check_scalar(b, "b", lo=0.0)
    hints = dict(domain_hints or {})
    zero_density = all(float(levy_density(s)) == 0.0 for s in (1e-9, 1e-3, 1.0, 1e3))

    if zero_density:
        kappa = 0.0
    else:
        kappa = hints.get("index")
        slope0 = _local_slope(levy_density, 1e-10, 1e-8)
        if kappa is None:
            kappa = 0.0 if slope0 is None else -slope0 - 1.0
        # s * density(s) must be integrable at 0: density ~ s^(-1-kappa) with kappa < 1
        if slope0 is not None and -slope0 - 1.0 >= 1.0 - 1e-6:
            raise IntegrabilityError(
                f"int_0^1 s density(s) ds diverges (local exponent {-slope0 - 1.0:.4f} >= 1)")
        slope_inf = _local_slope(levy_density, 1e6, 1e8)
        if slope_inf is not None and slope_inf >= -1.0:
            raise IntegrabilityError(
                f"int_1^inf density(s) ds diverges (decay exponent {slope_inf:.4f} >= -1)")
        kappa = float(kappa)

    infinite = (not zero_density) and kappa > 0.0
    complex_ok = bool(hints.get("complex", True))

    def scalar_density(s):
        return levy_density(s)

    @functools.lru_cache(maxsize=65536)
    def lap_real(x):
        if x == 0.0:
            return 0.0
        if zero_density:
            return b * x
        return b * x + _levy_integral(scalar_density, x)

    @functools.lru_cache(maxsize=65536)
    def lap_complex(re, im):
        z = complex(re, im)
        if im == 0.0 and re >= 0.0:
            return complex(lap_real(re))
        if zero_density:
            return b * z
        if not complex_ok:
            raise DomainError("custom Levy density is not flagged for complex evaluation")
        r, phi = cmath.polar(z)
        rot = cmath.exp(-1j * phi)

        # s = rho * e^{-i phi}: z s = r rho is real, the integrand is not oscillatory
        def part(rho, which):
            val = -math.expm1(-r * rho) * complex(levy_density(rho * rot)) * rot
            return val.real if which == 0 else val.imag

        cut = 1.0 / r
        tot = 0.0
        for which in (0, 1):
            lo, _ = integrate.quad(part, 0.0, cut, args=(which,), epsabs=0.0, epsrel=1e-11, limit=400)
            hi, _ = integrate.quad(part, cut, np.inf, args=(which,), epsabs=0.0, epsrel=1e-11, limit=400)
            tot += (lo + hi) * (1.0 if which == 0 else 1j)
        return b * z + tot

    def lap(x):
        if _is_mp(x):
            return mpmath.mpf(lap_real(float(x)))
        arr = np.asarray(x)
        if np.iscomplexobj(arr):
            out = np.array([lap_complex(float(v.real), float(v.imag)) for v in arr.ravel()])
            out = out.reshape(arr.shape)
        else:
            if np.any(arr < 0):
                raise DomainError("real arguments of a Bernstein function must be >= 0")
            out = np.array([lap_real(float(v)) for v in arr.ravel()]).reshape(arr.shape)
        return out if out.ndim else out[()]

    # Tails are integrated in y = ln s, where power-law densities become
    # smooth exponentials; plain quadrature in s fails for tiny s.
    def log_integral(weight_power, y0, y1):
        def g(y):
            r = math.exp(y)
            return float(scalar_density(r)) * r ** weight_power
        edges = np.arange(y0, y1, 4.0).tolist() + [y1]
        return sum(integrate.quad(g, a, b, epsabs=0.0, epsrel=1e-12, limit=200)[0]
                   for a, b in zip(edges[:-1], edges[1:]))

    @functools.lru_cache(maxsize=65536)
    def tail_scalar(s):
        if zero_density:
            return 0.0
        y0 = math.log(s)
        y1 = max(y0, 0.0) + 60.0
        head = log_integral(1.0, y0, y1)
        rest, _ = integrate.quad(scalar_density, math.exp(y1), np.inf, epsabs=1e-14 * head,
                                 epsrel=1e-10, limit=200)
        return head + rest

    @functools.lru_cache(maxsize=65536)
    def itail_scalar(s):
        if zero_density:
            return 0.0
        y1 = math.log(s)
        # int_0^s r density(r) dr; the part below s e^-60 is negligible when kappa < 1
        return s * tail_scalar(s) + log_integral(2.0, y1 - 60.0, y1)

    def tail(s):
        arr = np.asarray(s, dtype=float)
        out = np.array([tail_scalar(float(v)) for v in arr.ravel()]).reshape(arr.shape)
        return out if out.ndim else float(out)

    def itail(s):
        arr = np.asarray(s, dtype=float)
        out = np.array([itail_scalar(float(v)) for v in arr.ravel()]).reshape(arr.shape)
        return out if out.ndim else float(out)

    return BernsteinFunction(laplace_exponent=lap, levy_density=levy_density, tail=tail,
                             integrated_tail=itail, b=b, infinite_activity=infinite,
                             index=kappa, name="custom", params={"b": b, "index": kappa},
                             supports_complex=complex_ok or zero_density)
