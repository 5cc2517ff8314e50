"""Poisson processes time-changed by an inverse subordinator.

Given ``Y = Y(t)`` independent of a Poisson process ``N`` with intensity
``lambda(.)``, the count ``N(Y)`` and the increment ``N(Y + v) - N(v)`` are
Poisson mixtures over the density of ``Y``. Every mixture here goes
through :meth:`InverseSubordinatorLaw.expect`, so the two sides of each
governing-equation residual share one ``u``-grid and one truncation.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats
from scipy.special import gammainc, gammaln

from ._validation import check_int, check_scalar
from .convderiv import DifferentiableCurve, cd_derivative
from .exceptions import ConditionError, DomainError
from .report import ResidualReport
from .special import stirling2
from .subordinator import InverseSubordinatorLaw, simulate_inverse

__all__ = ["IntensityFunction", "TimeChangedPoissonLaw", "base_pmf", "mgf_general",
           "poisson_cutoff", "CovarianceEstimate"]


class IntensityFunction:
    """Rate ``lambda(t) >= 0`` with cumulative ``Lambda(s, t) = int_s^t lambda``.

    Use :meth:`homogeneous`, :meth:`named` or :meth:`custom`.
    """

    def __init__(self, rate, cumulative=None, constant=None, name="custom"):
        self._rate = rate
        self._cumulative = cumulative
        self.constant = constant
        self.name = name

    @classmethod
    def homogeneous(cls, lam):
        lam = check_scalar(lam, "lam", lo=0.0)
        return cls(lambda t: np.full(np.shape(t), lam), lambda s, t: lam * (np.asarray(t) - np.asarray(s)),
                   constant=lam, name=f"constant({lam})")

    @classmethod
    def named(cls, profile):
        """Built-in non-homogeneous profiles; ``"sin2"`` is ``1 + sin(t)**2``."""
        if profile == "sin2":
            def big(t):
                return 1.5 * t - 0.25 * np.sin(2.0 * t)
            return cls(lambda t: 1.0 + np.sin(t) ** 2,
                       lambda s, t: big(np.asarray(t, dtype=float)) - big(np.asarray(s, dtype=float)),
                       name="sin2")
        raise DomainError(f"unknown intensity profile {profile!r}")

    @classmethod
    def custom(cls, rate, cumulative=None):
        """User rate; without ``cumulative`` it is integrated by adaptive quadrature."""
        return cls(rate, cumulative)

    @classmethod
    def tabulated(cls, times, rates):
        """Piecewise-linear rate through ``(times, rates)``, constant beyond the ends."""
        tt = np.asarray(times, dtype=float)
        rr = np.asarray(rates, dtype=float)
        if tt.ndim != 1 or tt.shape != rr.shape or np.any(np.diff(tt) <= 0) or np.any(rr < 0):
            raise DomainError("tabulated intensity needs increasing times and rates >= 0")
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (rr[1:] + rr[:-1]) * np.diff(tt))])

        def big(t):
            t = np.asarray(t, dtype=float)
            lo = cum[0] - rr[0] * (tt[0] - np.minimum(t, tt[0]))
            hi = cum[-1] + rr[-1] * (np.maximum(t, tt[-1]) - tt[-1])
            r_t = np.interp(t, tt, rr)
            # exact integral of the linear interpolant inside the table
            j = np.clip(np.searchsorted(tt, t) - 1, 0, tt.size - 2)
            dt = np.clip(t - tt[j], 0.0, None)
            inside = cum[j] + 0.5 * (rr[j] + r_t) * dt
            return np.where(t < tt[0], lo, np.where(t > tt[-1], hi, inside))

        return cls(lambda t: np.interp(t, tt, rr), lambda s, t: big(t) - big(s), name="tabulated")

    @property
    def is_homogeneous(self):
        return self.constant is not None

    def rate(self, t):
        return np.asarray(self._rate(np.asarray(t, dtype=float)), dtype=float)

    def cumulative(self, s, t):
        """``Lambda(s, t)``; broadcasts over ``s`` and ``t``."""
        if self._cumulative is not None:
            return np.asarray(self._cumulative(s, t), dtype=float)
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        out = np.empty(s.shape)
        for i in np.ndindex(s.shape):
            out[i] = integrate.quad(lambda x: float(self._rate(x)), s[i], t[i],
                                    epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        return out

    def __call__(self, t):
        """``Lambda(t) = Lambda(0, t)``."""
        return self.cumulative(0.0, t)

    def check_arrival_conditions(self, probe=None):
        """Conditions for arrival laws: increasing, 0 at 0, unbounded."""
        probe = np.geomspace(1e-8, 1e6, 60) if probe is None else probe
        big = self(probe)
        if np.any(np.diff(big) <= 0) or big[0] > 1e-6 or big[-1] < 1e3:
            raise ConditionError("Lambda must increase from 0 to infinity for arrival-time laws")


def base_pmf(intensity, x, t, v=0.0):
    """``P(N(t + v) - N(v) = x)``, Poisson at mean ``Lambda(v, t + v)``; broadcasts over ``t``."""
    if isinstance(x, (int, np.integer)):
        x = check_int(x, "x", lo=0)
    xs = np.asarray(x)
    if np.any(xs < 0):
        raise DomainError("x must be >= 0")
    m = intensity.cumulative(v, np.asarray(t, dtype=float) + v)
    return _poisson(xs, m)


def _poisson(x, m):
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = x * np.log(m) - m - gammaln(x + 1.0)
    out = np.exp(logp)
    return np.where(m == 0, (x == 0).astype(float), out)


def poisson_cutoff(mean, tol=1e-8):
    """Smallest ``X`` with ``P(Poisson(mean) > X) <= tol``."""
    return int(stats.poisson.isf(tol, mean)) if mean > 0 else 0


@dataclass(frozen=True)
class CovarianceEstimate:
    """Covariance with its Monte Carlo half-width (``z = 3``) and a quadrature bound."""
    value: float
    half_width: float
    quadrature_term: float
    cauchy_schwarz_bound: float
    n_paths: int


class TimeChangedPoissonLaw:
    """Law of ``N(Y(t))`` and of its increments."""

    def __init__(self, intensity, law):
        if not isinstance(law, InverseSubordinatorLaw):
            raise DomainError("law must be an InverseSubordinatorLaw")
        if not law.f.infinite_activity:
            raise ConditionError("Condition I fails")
        self.intensity = intensity
        self.law = law

    # ------------------------------------------------------------ pmfs
    def _xs(self, x):
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x))
        if xs.dtype.kind not in "iu":
            if not np.all(np.equal(np.mod(xs, 1), 0)):
                raise DomainError("x must be integer")
            xs = xs.astype(np.int64)
        if np.any(xs < 0):
            raise DomainError("x must be >= 0")
        return scalar, xs

    def base_pmf(self, x, t, v=0.0):
        return base_pmf(self.intensity, x, t, v)

    def pmf(self, x, t, v=0.0, deriv=False):
        """``P(N(Y(t) + v) - N(v) = x) = int p_x(u, v) l(t, u) du``.

        ``x`` may be an array. ``deriv=True`` also returns ``d/dt``.
        ``t = 0`` gives the point mass at ``x = 0``.
        """
        scalar, xs = self._xs(x)
        t = check_scalar(t, "t", lo=0.0)
        v = check_scalar(v, "v", lo=0.0)

        def g(u):
            return _poisson(xs[:, None], self.intensity.cumulative(v, u + v)[None, :])
        res = self.law.expect(t, g, deriv=deriv)
        if deriv:
            val, dval = res
            return (val[0], dval[0]) if scalar else (val, dval)
        return float(res[0]) if scalar else res

    def pmf_curve(self, x, v=0.0):
        """``t -> p_x(t, v)`` with its exact ``t``-derivative; ``x`` may be an array."""
        scalar, xs = self._xs(x)

        def both(ts):
            ts = np.atleast_1d(np.asarray(ts, dtype=float))
            vals = [self.pmf(xs, ti, v, deriv=True) for ti in ts]
            val = np.array([a for a, _ in vals])
            der = np.array([b for _, b in vals])
            return (val[:, 0], der[:, 0]) if scalar else (val, der)

        at0 = (xs == 0).astype(float)
        return DifferentiableCurve(lambda ts: both(ts)[0], lambda ts: both(ts)[1],
                                   at0[0] if scalar else at0)

    def cutoff(self, t, tol=1e-8):
        """``X`` with Poisson tail below ``tol`` at mean ``Lambda(u_max(t))``."""
        return poisson_cutoff(float(self.intensity(self.law.u_max(t))), tol)

    def normalization(self, t, tol=1e-8):
        """Sum of ``pmf`` up to the cutoff, with the truncation certificate."""
        X = self.cutoff(t, tol)
        total = float(np.sum(self.pmf(np.arange(X + 1), t)))
        return {"t": t, "cutoff": X, "sum": total, "x_tail_bound": tol,
                "u_tail_bound": self.law.eps_trunc, "u_max": self.law.u_max(t)}

    # ------------------------------------------------------------ residuals
    def residual_thm1(self, x, t_grid, v=0.0, tolerance=1e-3, q=None):
        """``D_f p_x(t, v)`` against ``int lambda(u+v) [p_{x-1}(u,v) - p_x(u,v)] l(t,u) du``.

        ``x`` may be a sequence; all counts share each mixture evaluation.
        """
        _, xs = self._xs(x)
        v = check_scalar(v, "v", lo=0.0)
        ts = np.atleast_1d(np.asarray(t_grid, dtype=float))
        lhs = cd_derivative(self.pmf_curve(xs, v), self.law.f, ts, q or self.law.quad)

        def g(u):
            m = self.intensity.cumulative(v, u + v)[None, :]
            p = _poisson(xs[:, None], m)
            prev = np.where(xs[:, None] > 0, _poisson(np.maximum(xs - 1, 0)[:, None], m), 0.0)
            return self.intensity.rate(u + v)[None, :] * (prev - p)
        rhs = np.array([self.law.expect(ti, g) for ti in ts])
        tt, xx = np.meshgrid(ts, xs, indexing="ij")
        return ResidualReport("thm1", {"t": tt, "x": xx, "v": np.full(tt.shape, v)},
                              lhs, rhs, tolerance, {"intensity": self.intensity.name})

    def residual_homogeneous(self, x, t_grid, tolerance=1e-4, q=None):
        """``D_f p_x(t)`` against ``-lambda (p_x(t) - p_{x-1}(t))``; ``x`` may be a sequence."""
        if not self.intensity.is_homogeneous:
            raise DomainError("residual_homogeneous needs a constant intensity")
        _, xs = self._xs(x)
        lam = self.intensity.constant
        ts = np.atleast_1d(np.asarray(t_grid, dtype=float))
        lhs = cd_derivative(self.pmf_curve(xs), self.law.f, ts, q or self.law.quad)
        p = np.array([self.pmf(xs, ti) for ti in ts])
        prev = np.array([self.pmf(np.maximum(xs - 1, 0), ti) for ti in ts]) * (xs > 0)
        rhs = -lam * (p - prev)
        tt, xx = np.meshgrid(ts, xs, indexing="ij")
        return ResidualReport("thm3", {"t": tt, "x": xx}, lhs, rhs, tolerance, {"lam": lam})

    # ------------------------------------------------------------ moments
    def _lambda_moments(self, t, k):
        """``E Lambda(Y(t))**i`` for ``i = 1..k``."""
        powers = np.arange(1, k + 1)[:, None]
        return self.law.expect(t, lambda u: self.intensity(u)[None, :] ** powers)

    def moment(self, k, t):
        """``E N(Y(t))**k = sum_i S(k, i) E Lambda(Y(t))**i``."""
        k = check_int(k, "k", lo=1, hi=12)
        t = check_scalar(t, "t", lo=0.0)
        lm = self._lambda_moments(t, k)
        return float(sum(stirling2(k, i) * lm[i - 1] for i in range(1, k + 1)))

    def variance(self, t):
        """``E Lambda(Y) + Var Lambda(Y)``."""
        m1, m2 = self._lambda_moments(t, 2)
        return float(m1 + m2 - m1 * m1)

    def covariance(self, s, t, n_paths=100_000, rng=None, step=None):
        """``E Lambda(0, Y(s ^ t)) + cov(Lambda(Y(s)), Lambda(Y(t)))``.

        The joint law of ``(Y(s), Y(t))`` comes from simulated first-passage
        paths (one path serves both times); the first term and the
        Cauchy-Schwarz bound on the second come from quadrature.
        """
        s = check_scalar(s, "s", lo=0.0, lo_open=True)
        t = check_scalar(t, "t", lo=0.0, lo_open=True)
        lo, hi = min(s, t), max(s, t)
        first = float(self.law.expect(lo, lambda u: self.intensity(u)))
        v_lo, v_hi = (self.variance(x) - float(self.law.expect(x, lambda u: self.intensity(u)))
                      for x in (lo, hi))
        bound = math.sqrt(max(v_lo, 0.0) * max(v_hi, 0.0))
        rng = rng if rng is not None else np.random.default_rng(0)
        cps = [lo] if lo == hi else [lo, hi]
        y = simulate_inverse(self.law.f, cps, step or 1e-2 * hi, rng, n_paths)
        a = self.intensity(y[:, 0])
        b = self.intensity(y[:, -1])
        prod = (a - a.mean()) * (b - b.mean())
        cov = float(prod.sum() / (n_paths - 1))
        hw = 3.0 * float(prod.std(ddof=1)) / math.sqrt(n_paths)
        return CovarianceEstimate(first + cov, hw, first, bound, n_paths)

    # ------------------------------------------------------------ MGF
    def mgf(self, theta, t):
        """``E exp(theta N(Y(t))) = E exp(-lam (1 - e^theta) Y(t))`` (homogeneous).

        ``theta > 0`` makes the argument negative; the law flags this as best-effort.
        """
        if not self.intensity.is_homogeneous:
            raise DomainError("mgf needs a constant intensity")
        theta = check_scalar(theta, "theta")
        return self.law.laplace(t, -self.intensity.constant * math.expm1(theta))

    def mgf_curve(self, theta):
        arg = -self.intensity.constant * math.expm1(theta)
        return DifferentiableCurve(lambda t: self.law.laplace(t, arg),
                                   lambda t: self.law.laplace_dt(t, arg), 1.0)

    def residual_mgf(self, theta, t_grid, tolerance=1e-4, q=None):
        """``D_f M(theta, t)`` against ``lam (e^theta - 1) M(theta, t)``."""
        if not self.intensity.is_homogeneous:
            raise DomainError("mgf needs a constant intensity")
        theta = check_scalar(theta, "theta")
        ts = np.atleast_1d(np.asarray(t_grid, dtype=float))
        lhs = cd_derivative(self.mgf_curve(theta), self.law.f, ts, q or self.law.quad)
        rhs = self.intensity.constant * math.expm1(theta) * np.asarray(self.mgf(theta, ts))
        return ResidualReport("mgf_poisson", {"t": ts, "theta": np.full(ts.shape, theta)},
                              lhs, rhs, tolerance)

    # ------------------------------------------------------------ arrivals
    def arrival_cdf(self, n, t):
        """``P(T_n <= t) = int P(N(u) >= n) l(t, u) du``."""
        n = check_int(n, "n", lo=1)
        t = check_scalar(t, "t", lo=0.0)
        if not self.intensity.is_homogeneous:
            self.intensity.check_arrival_conditions()
        if t == 0.0:
            return 0.0
        return float(self.law.expect(t, lambda u: gammainc(n, self.intensity(u))))

    def arrival_cdf_derivative_form(self, n, t, rel_step=1e-3):
        """``1 - sum_{k<n} (lam^k / k!) (-1)^k d^k/dlam^k E e^{-lam Y(t)}`` (homogeneous).

        Derivatives by central differences of order ``k <= 3`` with one
        Richardson step; ``n <= 4``.
        """
        if not self.intensity.is_homogeneous:
            raise DomainError("derivative form needs a constant intensity")
        n = check_int(n, "n", lo=1, hi=4)
        lam = self.intensity.constant
        h = rel_step * lam
        total = 0.0
        for k in range(n):
            dk = _richardson_derivative(lambda x: self.law.laplace(t, x), lam, k, h)
            total += lam ** k / math.factorial(k) * (-1) ** k * dk
        return 1.0 - total


# central-difference stencils for derivative orders 0..3 (step h)
_STENCILS = {
    0: ([0], [1.0]),
    1: ([-1, 1], [-0.5, 0.5]),
    2: ([-1, 0, 1], [1.0, -2.0, 1.0]),
    3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5]),
}


def _richardson_derivative(fun, x, k, h):
    offs, coef = _STENCILS[k]

    def d(step):
        return sum(c * fun(x + o * step) for o, c in zip(offs, coef)) / step ** k
    if k == 0:
        return d(h)
    return (4.0 * d(0.5 * h) - d(h)) / 3.0


def mgf_general(law, fx_laplace_exponent, theta, t):
    """``E exp(theta X(Y(t))) = E exp(-f_X(-theta) Y(t))`` for a Levy process ``X``.

    ``fx_laplace_exponent(-theta)`` must be finite; negative values are
    admitted as best-effort (see :meth:`InverseSubordinatorLaw.laplace`).
    """
    theta = check_scalar(theta, "theta")
    arg = fx_laplace_exponent(-theta)
    if not np.isfinite(arg):
        raise DomainError(f"f_X(-theta) is not finite at theta={theta}")
    return law.laplace(t, float(arg))
