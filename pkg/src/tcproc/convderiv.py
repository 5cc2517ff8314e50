"""Convolution-type derivatives with respect to a Bernstein function.

For ``f`` with drift ``b`` and tail ``nu`` the Caputo-Djrbashian form is

    D_f u(t) = b u'(t) + int_0^t u'(t - s) nu(s) ds

and the Riemann-Liouville form adds ``nu(t) u(0)``. The kernel ``nu`` may
blow up like ``s**-alpha`` at the origin and ``u'`` may do the same at
``t = 0`` (Mittag-Leffler type solutions), so the integral is split at
``t/2`` and each half gets a mesh refined towards its singular end.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, roots_jacobi, roots_legendre

from ._validation import check_scalar
from .exceptions import DomainError, IntegrabilityError, TruncationWarning

__all__ = ["DifferentiableCurve", "QuadratureSpec", "cd_derivative", "rl_derivative",
           "caputo_derivative", "laplace_identity_residual"]


class DifferentiableCurve:
    """A function ``u`` on ``[0, T]`` together with ``u'`` and ``u(0)``.

    ``value`` and ``derivative`` must accept numpy arrays. Without an
    analytic derivative a central difference with step ``h_fd`` is used;
    the singular kernel amplifies its noise, so this path is less accurate.
    """

    def __init__(self, value, derivative=None, value_at_zero=None, h_fd=None, horizon=1.0):
        self.value = value
        self.horizon = float(horizon)
        self.h_fd = float(h_fd) if h_fd is not None else max(1e-6, 1e-8 * self.horizon)
        if derivative is None:
            h = self.h_fd

            def derivative(t):
                t = np.asarray(t, dtype=float)
                # one-sided near zero so the stencil never leaves [0, T]
                lo = np.maximum(t - h, 0.0)
                return (value(t + h) - value(lo)) / (t + h - lo)
            self.analytic = False
        else:
            self.analytic = True
        self.derivative = derivative
        if value_at_zero is None:
            value_at_zero = np.asarray(value(np.array([0.0])))[0]
        value_at_zero = np.asarray(value_at_zero, dtype=float)
        self.value_at_zero = float(value_at_zero) if value_at_zero.ndim == 0 else value_at_zero

    def fd_mismatch(self, t, h=None):
        """``|central difference - derivative|`` at ``t`` (consistency probe)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        h = h or 1e-5 * np.maximum(1.0, np.abs(t))
        fd = (self.value(t + h) - self.value(t - h)) / (2.0 * h)
        return np.abs(fd - self.derivative(t))

    def __add__(self, other):
        return DifferentiableCurve(lambda t: self.value(t) + other.value(t),
                                   lambda t: self.derivative(t) + other.derivative(t),
                                   self.value_at_zero + other.value_at_zero)

    def scale(self, c):
        return DifferentiableCurve(lambda t: c * self.value(t), lambda t: c * self.derivative(t),
                                   c * self.value_at_zero)


@dataclass(frozen=True)
class QuadratureSpec:
    """Mesh controls for the singular convolution.

    ``mesh="geometric"`` (default) uses cells shrinking by ``ratio`` towards
    each singular end down to ``abs_tol``-sized cells, with
    ``nodes_per_cell`` Gauss-Legendre points. ``mesh="power"`` uses
    ``n_cells`` cells with endpoints ``(j/n)**grading_exponent`` on each half.
    """
    n_cells: int = 24
    grading_exponent: float = 2.0
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    nodes_per_cell: int = 12
    mesh: str = "geometric"
    ratio: float = 0.25

    def __post_init__(self):
        if self.n_cells < 1:
            raise DomainError("n_cells must be >= 1")
        if self.grading_exponent < 1:
            raise DomainError("grading_exponent must be >= 1")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("tolerances must be > 0")
        if self.nodes_per_cell < 1:
            raise DomainError("nodes_per_cell must be >= 1")
        if self.mesh not in ("geometric", "power"):
            raise DomainError("mesh must be 'geometric' or 'power'")
        if not 0 < self.ratio < 1:
            raise DomainError("ratio must lie in (0, 1)")


DEFAULT_SPEC = QuadratureSpec()


def stable_grading(alpha, cap=8.0):
    """Power-mesh exponent ``2 / (1 - alpha)`` capped at ``cap``."""
    return min(2.0 / (1.0 - alpha), cap)


def _half_mesh(length, spec):
    """Cell edges on ``[0, length]`` clustered at 0, excluding the innermost cell ``[0, e0]``."""
    if spec.mesh == "geometric":
        eps = spec.abs_tol * length
        n = max(1, int(math.ceil(math.log(eps / length) / math.log(spec.ratio))))
        edges = length * spec.ratio ** np.arange(n, -1, -1, dtype=float)
    else:
        j = np.arange(spec.n_cells + 1, dtype=float)
        edges = length * (j / spec.n_cells) ** spec.grading_exponent
        edges = edges[1:]
    return edges


def _nodes(edges, m):
    x, w = roots_legendre(m)
    a, b = edges[:-1, None], edges[1:, None]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return (mid + half * x).ravel(), (half * w).ravel()


def _probe_tail(f):
    s = np.array([1e-10, 1e-8])
    vals = s * np.asarray(f.tail(s), dtype=float)
    # an integrable tail has s * nu(s) decreasing to 0 as s -> 0
    if not np.all(np.isfinite(vals)) or (vals[1] > 0 and vals[0] >= vals[1]):
        raise IntegrabilityError("s * tail(s) does not vanish as s -> 0; the tail is not integrable")


def _conv_plan(t, spec):
    """Nodes, weights and innermost-cell width on one half ``[0, t/2]``.

    The same rule serves both halves: in ``s`` near the kernel singularity
    and in ``w = t - s`` near the curve end.
    """
    edges = _half_mesh(0.5 * t, spec)
    s, ws = _nodes(edges, spec.nodes_per_cell)
    return s, ws, edges[0]


def cd_derivative(u, f, t, q=None):
    """Generalised Caputo-Djrbashian derivative ``b u'(t) + int_0^t u'(t-s) nu(s) ds``.

    ``t`` may be a scalar or an array of positive times; all derivative
    evaluations for all times are batched into one call of
    ``u.derivative``. Curves may be vector-valued: ``value`` and
    ``derivative`` then return shape ``(n, m)`` and so does the result.

    Near ``s = 0`` the innermost cell uses ``u'(t) * int_0^e nu`` and near
    ``s = t`` it uses ``nu(t) * (u(e) - u(0))``, both exact to leading order.
    """
    q = q or DEFAULT_SPEC
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts <= 0) or not np.all(np.isfinite(ts)):
        raise DomainError("cd_derivative requires t > 0")
    _probe_tail(f)
    # half-length mesh on [0, t/2] scales linearly with t
    s1, w1, e1 = _conv_plan(1.0, q)
    S = ts[:, None] * s1[None, :]                   # nodes on [e, t/2]
    W = ts[:, None] * w1[None, :]
    E = ts * e1
    # u' at t - s (kernel side) and at w = t - s' (curve-singular side)
    args = np.concatenate([(ts[:, None] - S).ravel(), S.ravel(), ts, E])
    du = np.asarray(u.derivative(args), dtype=float)
    extra = du.shape[1:]                            # vector-valued curves carry trailing axes
    n, k = S.size, len(ts)
    du_ker = du[:n].reshape(S.shape + extra)
    du_crv = du[n:2 * n].reshape(S.shape + extra)
    du_t = du[2 * n:2 * n + k]
    pad = (slice(None), slice(None)) + (None,) * len(extra)
    nu_ker = np.asarray(f.tail(S), dtype=float)[pad]
    nu_crv = np.asarray(f.tail(ts[:, None] - S), dtype=float)[pad]
    Wp = W[pad]
    col = (slice(None),) + (None,) * len(extra)
    u_e = np.asarray(u.value(E), dtype=float)
    part0 = np.sum(Wp * du_ker * nu_ker, axis=1) + du_t * np.asarray(f.integrated_tail(E), dtype=float)[col]
    part1 = (np.sum(Wp * du_crv * nu_crv, axis=1)
             + np.asarray(f.tail(ts), dtype=float)[col] * (u_e - u.value_at_zero))
    out = part0 + part1
    if f.b:
        out = out + f.b * du_t
    return float(out[0]) if scalar else out


def rl_derivative(u, f, t, q=None):
    """Generalised Riemann-Liouville derivative, via ``D_f u(t) + nu(t) u(0)``."""
    ts = np.asarray(t, dtype=float)
    nu_t = np.asarray(f.tail(np.atleast_1d(ts)), dtype=float)
    if not np.all(np.isfinite(nu_t)):
        raise DomainError("tail(t) is not finite")
    out = np.atleast_1d(cd_derivative(u, f, t, q)) + nu_t * u.value_at_zero
    return float(out[0]) if ts.ndim == 0 else out


def caputo_derivative(u, alpha, t, q=None):
    """Classical Caputo derivative ``(1/Gamma(1-a)) int_0^t u'(s) (t-s)**-a ds``.

    Gauss-Jacobi quadrature absorbs the weight ``(t - s)**-alpha`` exactly,
    so the rule is spectrally accurate for smooth ``u'``. It uses neither
    the tail function nor the split mesh of :func:`cd_derivative`.
    """
    alpha = check_scalar(alpha, "alpha", lo=0.0, hi=1.0, lo_open=True, hi_open=True)
    q = q or DEFAULT_SPEC
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts <= 0):
        raise DomainError("caputo_derivative requires t > 0")
    n = max(40, 4 * q.nodes_per_cell)
    x, w = roots_jacobi(n, -alpha, 0.0)          # weight (1 - x)^-alpha on [-1, 1]
    s = 0.5 * ts[:, None] * (1.0 + x[None, :])
    du = np.asarray(u.derivative(s.ravel()), dtype=float).reshape(s.shape)
    scale = (0.5 * ts) ** (1.0 - alpha) / gamma(1.0 - alpha)
    out = scale * (du @ w)
    return float(out[0]) if scalar else out


def laplace_identity_residual(u, f, s, T_trunc, q=None, growth_bound=1.0, s0=0.0, n_nodes=64):
    """``|L[D_f u](s) - f(s) L[u](s) + f(s) u(0) / s|`` with both transforms truncated at ``T_trunc``.

    ``growth_bound`` and ``s0`` describe ``|u(t)| <= M e^{s0 t}``; they feed
    the truncation estimate ``M e^{-(s - s0) T} / (s - s0)``, and a
    :class:`TruncationWarning` is issued when it exceeds ``q.abs_tol``.
    The time integrals use Gauss-Legendre on a mesh graded towards 0,
    where ``D_f u`` may behave like ``t**-alpha``.
    """
    q = q or DEFAULT_SPEC
    s = check_scalar(s, "s", lo=s0, lo_open=True)
    T_trunc = check_scalar(T_trunc, "T_trunc", lo=0.0, lo_open=True)
    bound = growth_bound * math.exp(-(s - s0) * T_trunc) / (s - s0)
    if bound > q.abs_tol:
        warnings.warn(f"truncation bound {bound:.3g} exceeds abs_tol at T={T_trunc}", TruncationWarning)
    edges = np.concatenate([[0.0], T_trunc * np.geomspace(1e-10, 1.0, 40)])
    tt, wt = _nodes(edges, 8)
    kernel = np.exp(-s * tt) * wt
    lhs = float(kernel @ np.asarray(cd_derivative(u, f, tt, q)))
    lu = float(kernel @ np.asarray(u.value(tt), dtype=float))
    fs = float(np.real(f(s)))
    return abs(lhs - fs * lu + fs / s * u.value_at_zero)

