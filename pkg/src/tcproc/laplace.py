"""Numerical Laplace inversion with two independent routes.

``contour``
    Trapezoidal rule on a hyperbolic Bromwich contour
    ``z(theta) = sigma + mu (1 + sin(i theta - delta))``. The asymptotic
    angle ``pi/2 + delta`` can be narrowed for transforms such as
    ``exp(-u f(z))`` that grow once ``Re f(z) < 0``; contour parameters
    are optimised for the admissible sector.
``accelerated-real``
    Gaver functionals combined with Salzer (Stehfest) weights, evaluated
    in extended precision with mpmath. It needs the transform only on
    the positive real axis.
"""
import functools
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.optimize import minimize_scalar

from ._validation import check_scalar
from .exceptions import DomainError, InversionDisagreement, InversionError

__all__ = ["TransformFunction", "invert", "contour_invert", "gaver_stehfest",
           "contour_nodes", "order_for_sector", "confirm_real_axis"]

DEFAULT_ORDER = 32
DEFAULT_GAVER_ORDER = 14
_TARGET_EXPONENT = 36.0      # aim for ~exp(-36) discretisation/truncation error


@dataclass(frozen=True)
class TransformFunction:
    """A Laplace transform ``r -> g_hat(r)``.

    ``evaluator`` must accept complex numpy arrays for the contour route
    and, if ``mp_evaluator`` is absent, mpmath reals for the real-axis
    route. ``known_singularity_abscissa`` is the rightmost real part of a
    singularity; ``sector`` is the largest angle ``|arg(z - abscissa)|``
    along which ``g_hat`` stays analytic and bounded (``pi`` when the
    only singularities lie on the negative real axis).
    """
    evaluator: callable
    known_singularity_abscissa: float = 0.0
    sector: float = math.pi
    mp_evaluator: callable = None
    supports_complex: bool = True
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if not (math.pi / 2 < self.sector <= math.pi):
            raise DomainError("sector must lie in (pi/2, pi]")

    def scaled(self, c):
        """Transform of ``c * g``."""
        ev, mp_ev = self.evaluator, self.mp_evaluator
        return TransformFunction(lambda r: c * ev(r), self.known_singularity_abscissa, self.sector,
                                 None if mp_ev is None else (lambda r: c * mp_ev(r)),
                                 self.supports_complex, self.label)

    def times_r(self):
        """Transform of ``g'`` for ``t > 0`` (the ``g(0) delta`` term is invisible there)."""
        ev, mp_ev = self.evaluator, self.mp_evaluator
        return TransformFunction(lambda r: r * ev(r), self.known_singularity_abscissa, self.sector,
                                 None if mp_ev is None else (lambda r: r * mp_ev(r)),
                                 self.supports_complex, self.label + "'")


# ---------------------------------------------------------------- contour

@functools.lru_cache(maxsize=64)
def _contour_params(phi):
    """Optimal (delta, d, a, mu*t, exponent-per-node) for a sector ``pi/2 + phi``.

    The strip of analyticity of the parametrised integrand has half-width
    ``d`` with ``0 < delta - d`` and ``delta + d < phi``. Balancing
    discretisation ``exp(-2 pi d / h + mu t (1 - sin(delta - d)))`` against
    truncation ``exp(-mu t (sin(delta) cosh(a) - 1))`` with ``h = a / N``
    gives an error exponent proportional to ``N``; the returned rate is
    that exponent for ``N = 1``.
    """
    best = None
    for frac in np.linspace(0.05, 0.95, 37):
        d = frac * 0.5 * phi
        delta = phi - d
        if delta - d <= 0:
            continue

        def neg_rate(a):
            den = math.sin(delta) * math.cosh(a) - 1.0
            if den <= 0:
                return 1e9
            return -(2.0 * math.pi * d / (a * (1.0 + (1.0 - math.sin(delta - d)) / den)))

        res = minimize_scalar(neg_rate, bounds=(0.05, 12.0), method="bounded",
                              options={"xatol": 1e-10})
        rate = -res.fun
        if best is None or rate > best[3]:
            best = (delta, d, res.x, rate)
    delta, d, a, rate = best
    mut_per_node = 1.0 / (math.sin(delta) * math.cosh(a) - 1.0)   # mu t = E * this
    return delta, d, a, mut_per_node, rate


def order_for_sector(sector, target=_TARGET_EXPONENT):
    """Number of half-contour nodes reaching ``exp(-target)`` accuracy in ``sector``."""
    phi = 0.98 * min(sector - math.pi / 2, math.pi / 2)
    rate = _contour_params(round(phi, 12))[4]
    return int(math.ceil(target / rate))


@functools.lru_cache(maxsize=256)
def contour_nodes(order, sector=math.pi):
    """Unit-time nodes ``zeta_k`` and weights ``c_k`` with ``g(t) ~ Re sum c_k e^{zeta_k} g_hat(zeta_k / t) / t``.

    Only ``theta >= 0`` is kept; conjugate symmetry of real originals
    doubles the weights of ``theta > 0``.
    """
    phi = 0.98 * min(sector - math.pi / 2, math.pi / 2)
    delta, d, a, mut_per_node, rate = _contour_params(round(phi, 12))
    n = int(order)
    h = a / n
    # mu*t grows with the target exponent and amplifies rounding by
    # exp(mu t (1 - sin delta)); beyond the target, extra nodes only refine h.
    mut = min(rate * n, _TARGET_EXPONENT) * mut_per_node
    theta = np.arange(n + 1) * h
    w = 1j * theta - delta
    zeta = mut * (1.0 + np.sin(w))
    dzeta = mut * 1j * np.cos(w)
    c = h / (2j * np.pi) * dzeta
    c[1:] *= 2.0
    zeta.setflags(write=False)
    c.setflags(write=False)
    return zeta, c


def contour_invert(evaluator, t, order=DEFAULT_ORDER, sector=math.pi, shift=0.0):
    """Vectorised contour inversion at times ``t`` (array); ``evaluator`` gets a 2-D complex array."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    zeta, c = contour_nodes(int(order), float(sector))
    z = shift + zeta[None, :] / t[:, None]
    vals = evaluator(z)
    if not np.all(np.isfinite(vals)):
        raise InversionError("transform is not finite on the inversion contour")
    # e^{z t} = e^{shift t} e^{zeta}
    out = np.real(np.sum(c[None, :] * np.exp(zeta)[None, :] * vals, axis=1)) * np.exp(shift * t) / t
    return out


# ---------------------------------------------------------------- Gaver-Stehfest

@functools.lru_cache(maxsize=32)
def _stehfest_weights(order, dps):
    n = 2 * order
    with mpmath.workdps(dps):
        weights = []
        for k in range(1, n + 1):
            s = mpmath.mpf(0)
            for j in range((k + 1) // 2, min(k, order) + 1):
                s += (mpmath.mpf(j) ** order * mpmath.factorial(2 * j)
                      / (mpmath.factorial(order - j) * mpmath.factorial(j)
                         * mpmath.factorial(j - 1) * mpmath.factorial(k - j)
                         * mpmath.factorial(2 * j - k)))
            weights.append((-1) ** (k + order) * s)
    return tuple(weights)


def gaver_stehfest(mp_evaluator, t, order=DEFAULT_GAVER_ORDER, dps=None):
    """Salzer-accelerated Gaver inversion with ``2*order`` real-axis samples."""
    t = check_scalar(t, "t", lo=0.0, lo_open=True)
    dps = dps or int(math.ceil(2.2 * order)) + 12
    weights = _stehfest_weights(int(order), dps)
    with mpmath.workdps(dps):
        tt = mpmath.mpf(t)
        ln2_t = mpmath.log(2) / tt
        total = mpmath.mpf(0)
        for k, wk in enumerate(weights, start=1):
            total += wk * mpmath.re(mp_evaluator(k * ln2_t))
        return float(ln2_t * total)


CROSS_CHECK_ORDERS = (14, 24, 34, 46, 60)


def confirm_real_axis(value, mp_evaluator, t, rtol=1e-6, atol=1e-12, orders=CROSS_CHECK_ORDERS):
    """Check a contour ``value`` against Gaver-Stehfest at increasing orders.

    Gaver-Stehfest converges slowly for sharply peaked originals, so the
    order is raised until the two routes agree. Returns the agreeing
    real-axis value or raises :class:`InversionDisagreement` with the
    highest-order one.
    """
    ref = None
    for n in orders:
        ref = gaver_stehfest(mp_evaluator, t, n)
        if abs(ref - value) <= rtol * max(abs(value), abs(ref)) + atol:
            return ref
    raise InversionDisagreement(f"contour {value!r} vs accelerated-real {ref!r} at t={t}",
                                contour=value, real_axis=ref)


# ---------------------------------------------------------------- front end

def _mp_eval(gh):
    if gh.mp_evaluator is not None:
        return gh.mp_evaluator
    return gh.evaluator


def invert(gh, t, method="contour", order=None, rtol=1e-6, atol=1e-12):
    """Estimate ``g(t)`` from its transform.

    Parameters
    ----------
    gh : TransformFunction
    t : float > 0
        With a positive ``known_singularity_abscissa`` the contour is
        shifted right of it; the real-axis route then needs ``ln 2 / t``
        beyond the abscissa and is unreliable.
    method : {"contour", "accelerated-real", "cross-check"}
        ``cross-check`` runs both routes and raises
        :class:`InversionDisagreement` if they differ by more than
        ``rtol * |g| + atol`` (the real-axis order is raised from 14 up to
        60 before giving up); the contour value is returned.
    order : int, optional
        Contour nodes (default 32, or enough for the sector) or Gaver order (default 14).
    """
    t = check_scalar(t, "t", lo=0.0, lo_open=True)
    if method not in ("contour", "accelerated-real", "cross-check"):
        raise DomainError(f"unknown inversion method {method!r}")
    sigma = max(0.0, float(gh.known_singularity_abscissa))
    shift = 0.0 if sigma == 0.0 else sigma * 1.25 + 1.0 / t

    def by_contour(n):
        if not gh.supports_complex:
            raise InversionError("transform cannot be evaluated off the real axis")
        n = n or max(DEFAULT_ORDER, order_for_sector(gh.sector))
        return float(contour_invert(gh.evaluator, t, n, gh.sector, shift)[0])

    def by_real(n):
        n = n or DEFAULT_GAVER_ORDER
        return gaver_stehfest(_mp_eval(gh), t, n)

    if method == "contour":
        return by_contour(order)
    if method == "accelerated-real":
        return by_real(order)
    a = by_contour(None)
    confirm_real_axis(a, _mp_eval(gh), t, rtol, atol)
    return a
