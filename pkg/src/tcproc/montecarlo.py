"""Path simulation of time-changed Poisson and Skellam counts and goodness of fit.

Paths are processed in fixed-size blocks. Block ``b`` draws from a Philox
generator seeded by ``SeedSequence(master_seed, spawn_key=(b,))``, so the
output depends only on the seed and the block size, never on how blocks
are spread over worker threads.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _sampling
from ._validation import check_int
from .exceptions import DomainError

__all__ = ["SimulationPlan", "EmpiricalLaw", "simulate_poisson_tc", "simulate_skellam_tc",
           "goodness_of_fit", "GofReport", "block_rng"]

DEFAULT_BLOCK = 1 << 15


@dataclass(frozen=True)
class SimulationPlan:
    """Seed, path count, checkpoints and first-passage step.

    ``step=None`` uses ``1e-2 * max(checkpoints)``. ``block_size`` fixes
    the RNG stream layout and therefore the output bits.
    """
    master_seed: int
    n_paths: int
    t_checkpoints: tuple
    step: float = None
    worker_count: int = 1
    block_size: int = DEFAULT_BLOCK

    def __post_init__(self):
        check_int(self.master_seed, "master_seed", lo=0)
        check_int(self.n_paths, "n_paths", lo=1)
        check_int(self.worker_count, "worker_count", lo=1)
        check_int(self.block_size, "block_size", lo=1)
        cps = np.asarray(self.t_checkpoints, dtype=float)
        if cps.ndim != 1 or cps.size == 0 or np.any(cps <= 0) or np.any(np.diff(cps) <= 0):
            raise DomainError("checkpoints must be positive and strictly increasing")
        object.__setattr__(self, "t_checkpoints", tuple(float(c) for c in cps))
        if self.step is not None and not self.step > 0:
            raise DomainError("step must be > 0")

    @property
    def resolved_step(self):
        return self.step if self.step is not None else 1e-2 * self.t_checkpoints[-1]

    def blocks(self):
        n, b = self.n_paths, self.block_size
        return [(i, min(b, n - i * b)) for i in range(math.ceil(n / b))]


def block_rng(master_seed, block):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=(block,))))


@dataclass
class EmpiricalLaw:
    """Integer histograms per checkpoint.

    ``counts[j, i]`` is the number of paths with value ``offset + i`` at
    checkpoint ``j``.
    """
    checkpoints: tuple
    offset: int
    counts: np.ndarray
    n_paths: int

    def __post_init__(self):
        if np.any(self.counts.sum(axis=1) != self.n_paths):
            raise DomainError("histogram mass does not match the path count")

    @property
    def support(self):
        return np.arange(self.offset, self.offset + self.counts.shape[1])

    def pmf(self, j=0):
        return self.counts[j] / self.n_paths

    def half_widths(self, j=0, z=1.96):
        p = self.pmf(j)
        return z * np.sqrt(p * (1.0 - p) / self.n_paths)

    def mean(self, j=0):
        return float(self.pmf(j) @ self.support)

    def variance(self, j=0):
        m = self.mean(j)
        return float(self.pmf(j) @ (self.support - m) ** 2)

    def skewness(self, j=0):
        m, v = self.mean(j), self.variance(j)
        return float(self.pmf(j) @ (self.support - m) ** 3) / v ** 1.5 if v > 0 else 0.0

    def mean_half_width(self, j=0, z=3.0):
        return z * math.sqrt(self.variance(j) / self.n_paths)

    def table(self):
        """Rows ``(t, value, count, probability, half_width)``."""
        for j, t in enumerate(self.checkpoints):
            hw = self.half_widths(j)
            for i, x in enumerate(self.support):
                if self.counts[j, i]:
                    yield t, int(x), int(self.counts[j, i]), self.counts[j, i] / self.n_paths, hw[i]


def _run(plan, draw_block):
    blocks = plan.blocks()
    if plan.worker_count > 1:
        with ThreadPoolExecutor(plan.worker_count) as ex:
            parts = list(ex.map(draw_block, blocks))
    else:
        parts = [draw_block(b) for b in blocks]
    # merge in block order
    lo = min(int(p.min()) for p in parts)
    hi = max(int(p.max()) for p in parts)
    n_cp = len(plan.t_checkpoints)
    counts = np.zeros((n_cp, hi - lo + 1), dtype=np.int64)
    for p in parts:
        for j in range(n_cp):
            counts[j] += np.bincount(p[:, j] - lo, minlength=hi - lo + 1)
    return EmpiricalLaw(plan.t_checkpoints, lo, counts, plan.n_paths)


def simulate_poisson_tc(lawP, plan):
    """Histogram of ``N(Y(t_j))``: one subordinator path per sample, Poisson counts at ``Lambda(Y)``.

    Counts at successive checkpoints are drawn as independent Poisson
    increments over ``[Lambda(Y(t_{j-1})), Lambda(Y(t_j))]`` so each row is
    one path of the counting process.
    """
    f, step = lawP.law.f, plan.resolved_step

    def draw(block):
        b, n = block
        rng = block_rng(plan.master_seed, b)
        y = _sampling.first_passage(f, plan.t_checkpoints, step, rng, n)
        m = lawP.intensity(y)
        inc = np.diff(np.concatenate([np.zeros((n, 1)), m], axis=1), axis=1)
        return np.cumsum(rng.poisson(inc), axis=1)
    return _run(plan, draw)


def simulate_skellam_tc(p, law, plan):
    """Histogram of ``N1(Y(t_j)) - N2(Y(t_j))`` with conditionally independent components."""
    f, step = law.f, plan.resolved_step

    def draw(block):
        b, n = block
        rng = block_rng(plan.master_seed, b)
        y = _sampling.first_passage(f, plan.t_checkpoints, step, rng, n)
        dy = np.diff(np.concatenate([np.zeros((n, 1)), y], axis=1), axis=1)
        n1 = np.cumsum(rng.poisson(p.lambda1 * dy), axis=1)
        n2 = np.cumsum(rng.poisson(p.lambda2 * dy), axis=1)
        return n1 - n2
    return _run(plan, draw)


@dataclass(frozen=True)
class GofReport:
    chi2: float
    dof: int
    p_value: float
    tv_distance: float
    n_bins: int
    n_paths: int

    def to_dict(self):
        return dict(self.__dict__)


def goodness_of_fit(emp, pmf, j=0, min_expected=5.0, support=None):
    """Chi-square test (tails merged until every bin expects ``>= min_expected``) and TV distance.

    ``pmf`` maps an integer array to probabilities. ``support=(lo, hi)``
    widens the comparison range beyond the observed values; analytic mass
    left outside the range is folded into the end bins and counted as
    unmatched in the TV distance.
    """
    if emp.n_paths <= 0 or emp.counts[j].sum() == 0:
        raise DomainError("empty sample")
    x = emp.support
    obs = emp.counts[j].astype(float)
    if support is not None:
        lo, hi = min(int(support[0]), x[0]), max(int(support[1]), x[-1])
        full = np.zeros(hi - lo + 1)
        full[x - lo] = obs
        x, obs = np.arange(lo, hi + 1), full
    prob = np.asarray(pmf(x), dtype=float)
    outside = max(0.0, 1.0 - prob.sum())
    tv = 0.5 * (np.abs(obs / emp.n_paths - prob).sum() + outside)
    expected = prob * emp.n_paths
    expected[0] += 0.5 * outside * emp.n_paths
    expected[-1] += 0.5 * outside * emp.n_paths
    # greedy left-to-right merge; the remainder joins the last bin
    bins_o, bins_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            bins_o.append(acc_o)
            bins_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if bins_e:
            bins_o[-1] += acc_o
            bins_e[-1] += acc_e
        else:
            bins_o.append(acc_o)
            bins_e.append(acc_e)
    if len(bins_e) < 2:
        raise DomainError("fewer than two bins after merging; the test is degenerate")
    bo, be = np.array(bins_o), np.array(bins_e)
    chi2 = float(np.sum((bo - be) ** 2 / be))
    dof = len(be) - 1
    return GofReport(chi2, dof, float(stats.chi2.sf(chi2, dof)), float(tv), len(be), emp.n_paths)
