"""Law of the inverse subordinator ``Y(t) = inf{s >= 0 : H(s) > t}``.

In ``t`` the density ``l(t, u)`` has Laplace transform
``f(r)/r * exp(-u f(r))`` and ``E exp(-lam Y(t))`` has transform
``f(r) / (r (lam + f(r)))``. Both are inverted numerically; the density is
tabulated per ``t`` on a Gauss-Legendre grid in ``u`` so that every
mixture over ``u`` (pmfs, moments, residual right-hand sides) sees the same
nodes and the same truncation.
"""
import functools
import math
import warnings

import mpmath
import numpy as np
from scipy import optimize
from scipy.special import roots_legendre

from . import _sampling
from ._validation import check_scalar
from .bernstein import BernsteinFunction
from .convderiv import DifferentiableCurve, QuadratureSpec, cd_derivative, rl_derivative
from .exceptions import BestEffortWarning, ConditionError, DomainError, TruncationError
from .laplace import (TransformFunction, confirm_real_axis, contour_invert, contour_nodes,
                      invert, order_for_sector)
from .report import ResidualReport

__all__ = ["InverseSubordinatorLaw", "simulate_inverse", "chernoff_level"]

_UMAX_PER_DECADE = 16


def _growth_index(f):
    """Exponent ``kappa`` with ``|f(z)| ~ |z|**kappa`` at infinity."""
    if f.index is not None:
        return float(f.index)
    x1, x2 = 1e6, 1e8
    k = math.log(float(np.real(f(x2))) / float(np.real(f(x1)))) / math.log(x2 / x1)
    return min(max(k, 0.05), 0.95)


def chernoff_level(f, t, eps):
    """Smallest ``u`` with ``min_eta [eta t - u f(eta)] <= log(eps)``.

    ``P(Y(t) > u) = P(H(u) <= t) <= exp(eta t - u f(eta))`` for every
    ``eta > 0``, so the tail mass beyond the returned level is at most ``eps``.
    """
    target = math.log(eps)

    def bound(u):
        def h(x):
            eta = math.exp(x)
            return eta * t - u * float(np.real(f(eta)))
        res = optimize.minimize_scalar(h, bounds=(-60.0, 60.0), method="bounded",
                                       options={"xatol": 1e-9})
        return min(res.fun, 0.0) - target

    lo, hi = -60.0, 0.0
    while bound(math.exp(hi)) > 0:
        lo, hi = hi, hi + 5.0
        if hi > 300:
            raise TruncationError(f"Chernoff level not found for t={t}")
    x = optimize.brentq(lambda x: bound(math.exp(x)), lo, hi, xtol=1e-6)
    return math.exp(x)


class InverseSubordinatorLaw:
    """Density, Laplace transform and mixtures of ``Y(t)`` for one Bernstein function.

    Parameters
    ----------
    f : BernsteinFunction
        Must have infinite activity (Condition I), no killing and no drift.
    eps_trunc : float
        Tail mass allowed beyond ``u_max(t)`` (Chernoff certificate).
    n_cells, nodes_per_cell : int
        Composite Gauss-Legendre rule on ``[0, u_max(t)]``.
    order : int, optional
        Contour nodes for the density inversion; defaults to the order
        reaching ``exp(-36)`` for the admissible sector.
    quad : QuadratureSpec, optional
        Used by the residual checks.
    """

    def __init__(self, f, eps_trunc=1e-13, n_cells=24, nodes_per_cell=12, order=None, quad=None):
        if not isinstance(f, BernsteinFunction):
            raise DomainError("f must be a BernsteinFunction")
        if not f.infinite_activity:
            raise ConditionError("Condition I fails: the Levy measure has finite mass")
        if f.a != 0.0 or f.b != 0.0:
            raise ConditionError("time changes require a = b = 0")
        self.f = f
        self.eps_trunc = check_scalar(eps_trunc, "eps_trunc", lo=0.0, hi=0.1, lo_open=True)
        self.n_cells = int(n_cells)
        self.nodes_per_cell = int(nodes_per_cell)
        kappa = _growth_index(f)
        # Re f(z) >= 0 needs |arg z| <= pi / (2 kappa)
        self.sector = math.pi / 2 + min(math.pi / 2, math.pi / (2 * kappa) - math.pi / 2)
        self.order = int(order) if order else max(32, order_for_sector(self.sector))
        self.quad = quad or QuadratureSpec()
        x, w = roots_legendre(self.nodes_per_cell)
        self._gl = (x, w)
        self._grid = functools.lru_cache(maxsize=2048)(self._grid_uncached)
        self._umax = functools.lru_cache(maxsize=4096)(self._umax_uncached)

    def __repr__(self):
        return f"InverseSubordinatorLaw({self.f!r}, order={self.order})"

    # ------------------------------------------------------------ transforms
    def density_transform(self, u):
        f = self.f

        def ev(r):
            fr = f(r)
            return fr / r * np.exp(-u * fr)

        def mp_ev(r):
            fr = f(r)
            return fr / r * mpmath.exp(-u * fr)
        return TransformFunction(ev, 0.0, self.sector, mp_ev if f.supports_mp else None,
                                 f.supports_complex, f"density(u={u})")

    def laplace_transform_fn(self, lam):
        f = self.f
        lam = float(lam)
        abscissa = 0.0 if lam >= 0 else f.inverse(-lam)

        def ev(r):
            fr = f(r)
            return fr / (r * (lam + fr))
        return TransformFunction(ev, abscissa, math.pi, ev if f.supports_mp else None,
                                 f.supports_complex, f"laplace(lam={lam})")

    # ------------------------------------------------------------ truncation and grid
    def _umax_uncached(self, key):
        return chernoff_level(self.f, 10.0 ** (key / _UMAX_PER_DECADE), self.eps_trunc)

    def u_max(self, t):
        """Level beyond which ``Y(t)`` has mass ``<= eps_trunc``.

        Evaluated at the next point of a log grid above ``t``; ``Y`` is
        stochastically increasing in ``t``, so this only enlarges the level.
        """
        t = check_scalar(t, "t", lo=0.0, lo_open=True)
        return self._umax(int(math.ceil(_UMAX_PER_DECADE * math.log10(t) - 1e-9)))

    def _grid_uncached(self, t):
        um = self.u_max(t)
        x, w = self._gl
        edges = np.linspace(0.0, um, self.n_cells + 1)
        mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
        u = (mid[:, None] + half[:, None] * x).ravel()
        wu = (half[:, None] * w).ravel()
        dens, dens_dt = self._invert_density(t, u)
        for a in (u, wu, dens, dens_dt):
            a.setflags(write=False)
        return u, wu, dens, dens_dt

    def _invert_density(self, t, u):
        """Contour values of ``l(t, u)`` and ``d/dt l(t, u)`` at one ``t``, many ``u``."""
        zeta, c = contour_nodes(self.order, self.sector)
        z = zeta / t
        fz = self.f(z)
        base = c * np.exp(zeta) * fz / z / t
        e = np.exp(-np.outer(u, fz))
        dens = np.real(e @ base)
        dens_dt = np.real(e @ (base * z))
        return dens, dens_dt

    def grid(self, t):
        """``(u, weights, l(t,u), d/dt l(t,u))`` on the shared mixture grid at time ``t``."""
        t = check_scalar(t, "t", lo=0.0, lo_open=True)
        return self._grid(t)

    # ------------------------------------------------------------ density
    def density(self, t, u, method="cross-check", rtol=1e-6, atol=1e-10):
        """``l(t, u)``; ``u = 0`` returns the boundary value ``tail(t)``.

        ``method="cross-check"`` compares the contour value with the
        real-axis route at each point and raises
        :class:`InversionDisagreement` beyond ``rtol * |l| + atol``. Very
        peaked densities (index near 1, deep tail) can exceed what the
        real-axis route resolves; use ``method="contour"`` there.
        """
        t = check_scalar(t, "t", lo=0.0, lo_open=True)
        us = np.asarray(u, dtype=float)
        if np.any(us < 0) or not np.all(np.isfinite(us)):
            raise DomainError("u must be finite and >= 0")
        flat = us.ravel()
        out = self._invert_density(t, flat)[0]
        zero = flat == 0.0
        if np.any(zero):
            out[zero] = float(self.f.tail(t))
        if method == "cross-check" and self.f.supports_mp:
            for i in np.flatnonzero(~zero):
                confirm_real_axis(out[i], self.density_transform(flat[i]).mp_evaluator, t, rtol, atol)
        elif method not in ("contour", "cross-check"):
            raise DomainError(f"unknown method {method!r}")
        out = out.reshape(us.shape)
        return float(out) if out.ndim == 0 else out

    def density_dt(self, t, u):
        """``d/dt l(t, u)`` from the inversion of ``r`` times the transform."""
        t = check_scalar(t, "t", lo=0.0, lo_open=True)
        us = np.asarray(u, dtype=float)
        out = self._invert_density(t, us.ravel())[1].reshape(us.shape)
        return float(out) if out.ndim == 0 else out

    # ------------------------------------------------------------ Laplace transform in u
    def _check_lam(self, lam):
        lam = check_scalar(lam, "lam")
        if lam < 0:
            warnings.warn("negative Laplace argument: the contour is shifted past the pole "
                          "f(r) = -lam; result is best-effort", BestEffortWarning, stacklevel=3)
        return lam

    def laplace(self, t, lam, method="contour"):
        """``E exp(-lam Y(t))``; equals 1 at ``t = 0`` or ``lam = 0``.

        ``t`` may be an array (contour route only).
        """
        lam = self._check_lam(lam)
        return self._laplace(t, lam, method, deriv=False)

    def laplace_dt(self, t, lam):
        """``d/dt E exp(-lam Y(t))`` for ``t > 0``."""
        lam = self._check_lam(lam)
        return self._laplace(t, lam, "contour", deriv=True)

    def _laplace(self, t, lam, method, deriv):
        ts = np.asarray(t, dtype=float)
        if np.any(ts < 0) or not np.all(np.isfinite(ts)):
            raise DomainError("t must be finite and >= 0")
        flat = ts.ravel()
        out = np.full(flat.shape, 0.0 if deriv else 1.0)
        pos = flat > 0
        if lam != 0.0 and np.any(pos):
            gh = self.laplace_transform_fn(lam)
            if deriv:
                gh = gh.times_r()
            sig = gh.known_singularity_abscissa
            if method != "contour":
                if flat.size != 1:
                    raise DomainError("real-axis and cross-check routes take a scalar t")
                out[0] = invert(gh, float(flat[0]), method=method)
            elif sig == 0.0:
                out[pos] = contour_invert(gh.evaluator, flat[pos], 32, math.pi)
            else:
                for i in np.flatnonzero(pos):
                    shift = 1.25 * sig + 1.0 / flat[i]
                    out[i] = contour_invert(gh.evaluator, flat[i], 32, math.pi, shift)[0]
        out = out.reshape(ts.shape)
        return float(out) if out.ndim == 0 else out

    # ------------------------------------------------------------ mixtures
    def expect(self, t, g, deriv=False):
        """``E g(Y(t))`` (and ``d/dt`` of it if ``deriv``) for vectorised ``g(u) -> (..., n_u)``.

        Uses the shared grid; ``t = 0`` returns ``g(0)`` (point mass).
        """
        t = check_scalar(t, "t", lo=0.0)
        if t == 0.0:
            g0 = np.asarray(g(np.zeros(1)))[..., 0]
            return (g0, np.full_like(g0, np.nan)) if deriv else g0
        u, w, dens, dens_dt = self._grid(t)
        gu = np.asarray(g(u), dtype=float)
        val = gu @ (w * dens)
        if deriv:
            return val, gu @ (w * dens_dt)
        return val

    def mass(self, t):
        """``int_0^{u_max} l(t,u) du`` (normalisation audit)."""
        return float(self.expect(t, np.ones_like))

    def mean(self, t, method="grid"):
        """``E Y(t)``; ``method="transform"`` inverts ``1 / (r f(r))`` instead."""
        t = check_scalar(t, "t", lo=0.0)
        if t == 0.0:
            return 0.0
        if method == "grid":
            return float(self.expect(t, lambda u: u))
        f = self.f
        gh = TransformFunction(lambda r: 1.0 / (r * f(r)), 0.0, math.pi,
                               (lambda r: 1.0 / (r * f(r))) if f.supports_mp else None,
                               f.supports_complex, "mean")
        return invert(gh, t, method="contour" if method == "transform" else method)

    def cdf(self, t, u):
        """``P(Y(t) <= u)`` by inverting ``(1 - exp(-u f(r))) / r``."""
        t = check_scalar(t, "t", lo=0.0)
        us = np.atleast_1d(np.asarray(u, dtype=float))
        if t == 0.0:
            out = (us >= 0).astype(float)
        else:
            f = self.f
            zeta, c = contour_nodes(self.order, self.sector)
            z = zeta / t
            fz = f(z)
            vals = -np.expm1(-np.outer(np.maximum(us, 0.0), fz)) / z
            out = np.real(vals @ (c * np.exp(zeta))) / t
            out = np.where(us <= 0, 0.0, np.clip(out, 0.0, 1.0))
        return float(out[0]) if np.ndim(u) == 0 else out

    # ------------------------------------------------------------ residuals
    def laplace_curve(self, lam):
        """``t -> E exp(-lam Y(t))`` as a curve with its exact ``t``-derivative."""
        return DifferentiableCurve(lambda t: self.laplace(t, lam), lambda t: self.laplace_dt(t, lam), 1.0)

    def eigenfunction_residual(self, lam, t_grid, tolerance=1e-4, q=None):
        """``|D_f E e^{-lam Y(t)} + lam E e^{-lam Y(t)}|`` over ``t_grid``."""
        lam = check_scalar(lam, "lam", lo=0.0)
        ts = np.atleast_1d(np.asarray(t_grid, dtype=float))
        curve = self.laplace_curve(lam)
        lhs = cd_derivative(curve, self.f, ts, q or self.quad)
        rhs = -lam * np.asarray(self.laplace(ts, lam))
        return ResidualReport("eigenfunction", {"t": ts, "lam": np.full(ts.shape, lam)},
                              lhs, rhs, tolerance, {"f": repr(self.f)})

    def density_equation_residual(self, t, u, tolerance=1e-3, q=None, h=None):
        """``|D^RL_f l(., u)(t) + d/du l(t, u)|``; ``d/du`` by Richardson central differences."""
        t = check_scalar(t, "t", lo=0.0, lo_open=True)
        u = check_scalar(u, "u", lo=0.0, lo_open=True)
        curve = DifferentiableCurve(lambda s: self._curve_at(s, u, 0),
                                    lambda s: self._curve_at(s, u, 1), value_at_zero=0.0)
        lhs = rl_derivative(curve, self.f, t, q or self.quad)
        h = h or 1e-3 * max(u, 0.1)
        h = min(h, 0.5 * u)
        d1 = self._central(t, u, h)
        d2 = self._central(t, u, 0.5 * h)
        dudl = (4.0 * d2 - d1) / 3.0
        return ResidualReport("density_equation", {"t": [t], "u": [u]}, [lhs], [-dudl], tolerance)

    def _central(self, t, u, h):
        v = self._invert_density(t, np.array([u + h, u - h]))[0]
        return (v[0] - v[1]) / (2.0 * h)

    def _curve_at(self, s, u, which):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.zeros(s.shape)
        for i, si in enumerate(s):
            if si > 0:
                out[i] = self._invert_density(si, np.array([u]))[which][0]
        return out

    # ------------------------------------------------------------ simulation
    def simulate(self, t, size, rng, step=None):
        return simulate_inverse(self.f, t, step, rng, size)


def simulate_inverse(f, t, step=None, rng_stream=None, size=1):
    """Sample ``Y(t)`` by first passage of ``H`` simulated on the grid ``k * step``.

    ``t`` may be a sorted array of checkpoints, in which case one path
    serves all of them and the result has shape ``(size, len(t))``.
    Default step is ``1e-4 * max(t)``.
    """
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0) or np.any(np.diff(ts) <= 0):
        raise DomainError("checkpoints must be >= 0 and strictly increasing")
    tmax = float(ts[-1])
    if step is None:
        step = 1e-4 * tmax if tmax > 0 else 1.0
    step = check_scalar(step, "step", lo=0.0, lo_open=True)
    if tmax > 0:
        # E H(step) is infinite for stable laws; compare the median-scale increment instead
        typical = float(np.real(f.inverse(1.0 / step))) ** -1 if f.infinite_activity else step
        if typical > 0.1 * tmax:
            warnings.warn(f"step {step} is coarse relative to t={tmax}", BestEffortWarning)
    rng = rng_stream if rng_stream is not None else np.random.default_rng()
    out = _sampling.first_passage(f, ts, step, rng, int(size))
    return out[:, 0] if np.ndim(t) == 0 else out

