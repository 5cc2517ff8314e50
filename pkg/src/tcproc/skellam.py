"""Skellam processes ``N1(t) - N2(t)`` time-changed by an inverse subordinator."""
import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_int, check_scalar
from .convderiv import DifferentiableCurve, cd_derivative
from .exceptions import DomainError
from .poisson import poisson_cutoff
from .report import ResidualReport
from .special import bessel_i
from .subordinator import InverseSubordinatorLaw

__all__ = ["SkellamParams", "skellam_pmf", "TimeChangedSkellamLaw"]


@dataclass(frozen=True)
class SkellamParams:
    """Rates of the two independent Poisson components."""
    lambda1: float
    lambda2: float

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            check_scalar(getattr(self, name), name, lo=0.0, lo_open=True)

    def exponent(self, theta):
        """``lambda1 + lambda2 - lambda1 e^theta - lambda2 e^-theta`` (Laplace argument of the MGF)."""
        return -(self.lambda1 * np.expm1(theta) + self.lambda2 * np.expm1(-theta))

    def theta_interval(self):
        """Closed hull of the roots ``0`` and ``ln(lambda2 / lambda1)`` of ``exponent``."""
        r = math.log(self.lambda2 / self.lambda1)
        return min(0.0, r), max(0.0, r)


def skellam_pmf(p, k, t):
    """``exp(-t(l1+l2)) (l1/l2)**(k/2) I_|k|(2 t sqrt(l1 l2))``; broadcasts over ``t``.

    Evaluated as ``exp(-t (sqrt l1 - sqrt l2)**2 + (k/2) ln(l1/l2))`` times
    the exponentially scaled Bessel function, which stays finite for any ``t``.
    """
    k = check_int(k, "k")
    ts = np.asarray(t, dtype=float)
    if np.any(ts < 0):
        raise DomainError("t must be >= 0")
    l1, l2 = p.lambda1, p.lambda2
    z = 2.0 * ts * math.sqrt(l1 * l2)
    scaled = np.asarray(bessel_i(abs(k), z, scaled=True), dtype=float)
    with np.errstate(divide="ignore"):
        logp = -ts * (math.sqrt(l1) - math.sqrt(l2)) ** 2 + 0.5 * k * math.log(l1 / l2) + np.log(scaled)
    out = np.exp(logp)
    return float(out) if out.ndim == 0 else out


class TimeChangedSkellamLaw:
    """Law of ``Z(t) = S(Y(t))`` for a Skellam process ``S``."""

    def __init__(self, params, law):
        if not isinstance(law, InverseSubordinatorLaw):
            raise DomainError("law must be an InverseSubordinatorLaw")
        self.params = params
        self.law = law

    def _ks(self, k):
        scalar = np.ndim(k) == 0
        ks = np.atleast_1d(np.asarray(k))
        if ks.dtype.kind not in "iu":
            if not np.all(np.equal(np.mod(ks, 1), 0)):
                raise DomainError("k must be integer")
            ks = ks.astype(np.int64)
        return scalar, ks

    def _base(self, ks, u):
        return np.array([skellam_pmf(self.params, int(k), u) for k in ks])

    def pmf(self, k, t, deriv=False):
        """``P(Z(t) = k) = int s_k(u) l(t, u) du``; ``k`` may be an array."""
        scalar, ks = self._ks(k)
        t = check_scalar(t, "t", lo=0.0)
        if self.params.lambda1 == self.params.lambda2:
            # symmetric case: evaluate |k| so pmf(k) == pmf(-k) exactly
            ks_eval = np.abs(ks)
        else:
            ks_eval = ks
        res = self.law.expect(t, lambda u: self._base(ks_eval, u), deriv=deriv)
        if deriv:
            val, dval = res
            return (val[0], dval[0]) if scalar else (val, dval)
        return float(res[0]) if scalar else res

    def pmf_curve(self, k):
        scalar, ks = self._ks(k)

        def both(ts):
            ts = np.atleast_1d(np.asarray(ts, dtype=float))
            vals = [self.pmf(ks, ti, deriv=True) for ti in ts]
            val = np.array([a for a, _ in vals])
            der = np.array([b for _, b in vals])
            return (val[:, 0], der[:, 0]) if scalar else (val, der)

        at0 = (ks == 0).astype(float)
        return DifferentiableCurve(lambda ts: both(ts)[0], lambda ts: both(ts)[1],
                                   at0[0] if scalar else at0)

    def cutoff(self, t, tol=1e-8):
        """``K`` with ``P(N1 > K) + P(N2 > K) <= tol`` at means ``lambda_i u_max(t)``."""
        um = self.law.u_max(t)
        return max(poisson_cutoff(self.params.lambda1 * um, 0.5 * tol),
                   poisson_cutoff(self.params.lambda2 * um, 0.5 * tol))

    def normalization(self, t, tol=1e-8):
        K = self.cutoff(t, tol)
        total = float(np.sum(self.pmf(np.arange(-K, K + 1), t)))
        return {"t": t, "cutoff": K, "sum": total, "k_tail_bound": tol,
                "u_tail_bound": self.law.eps_trunc, "u_max": self.law.u_max(t)}

    def residual_governing(self, k, t_grid, tolerance=1e-3, q=None):
        """``D_f r_k`` against ``l1 (r_{k-1} - r_k) - l2 (r_k - r_{k+1})``; ``k`` may be a sequence."""
        _, ks = self._ks(k)
        ts = np.atleast_1d(np.asarray(t_grid, dtype=float))
        lhs = cd_derivative(self.pmf_curve(ks), self.law.f, ts, q or self.law.quad)
        l1, l2 = self.params.lambda1, self.params.lambda2
        rhs = []
        for ti in ts:
            r = self.pmf(np.concatenate([ks - 1, ks, ks + 1]), ti).reshape(3, -1)
            rhs.append(l1 * (r[0] - r[1]) - l2 * (r[1] - r[2]))
        tt, kk = np.meshgrid(ts, ks, indexing="ij")
        return ResidualReport("skellam_system", {"t": tt, "k": kk}, lhs, np.array(rhs), tolerance,
                              {"lambda1": l1, "lambda2": l2})

    # ------------------------------------------------------------ MGF
    def _arg(self, theta):
        theta = check_scalar(theta, "theta")
        lo, hi = self.params.theta_interval()
        if not lo - 1e-12 <= theta <= hi + 1e-12:
            raise DomainError(f"theta={theta} outside the admissible interval [{lo}, {hi}]")
        return max(float(self.params.exponent(theta)), 0.0)

    def mgf(self, theta, t):
        """``E exp(theta Z(t)) = E exp(-(l1 + l2 - l1 e^theta - l2 e^-theta) Y(t))``."""
        return self.law.laplace(t, self._arg(theta))

    def residual_mgf(self, theta, t_grid, tolerance=1e-4, q=None):
        """``D_f L(theta, t)`` against ``[l1 (e^theta - 1) + l2 (e^-theta - 1)] L(theta, t)``."""
        arg = self._arg(theta)
        ts = np.atleast_1d(np.asarray(t_grid, dtype=float))
        curve = DifferentiableCurve(lambda t: self.law.laplace(t, arg),
                                    lambda t: self.law.laplace_dt(t, arg), 1.0)
        lhs = cd_derivative(curve, self.law.f, ts, q or self.law.quad)
        rhs = -arg * np.asarray(self.law.laplace(ts, arg))
        return ResidualReport("skellam_mgf", {"t": ts, "theta": np.full(ts.shape, float(theta))},
                              lhs, rhs, tolerance)

    def default_thetas(self, n=5):
        """``n`` points of the admissible interval shrunk by 10%."""
        lo, hi = self.params.theta_interval()
        mid, half = 0.5 * (lo + hi), 0.45 * (hi - lo)
        return np.linspace(mid - half, mid + half, n)
