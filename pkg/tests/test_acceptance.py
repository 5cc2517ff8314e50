"""Acceptance suite: one verdict line per criterion, listed in the session summary."""
import json
import math

import mpmath
import numpy as np
import pytest
import yaml
from scipy import integrate

from tcproc import (DifferentiableCurve, IntensityFunction, SimulationPlan, SkellamParams,
                    TimeChangedPoissonLaw, TimeChangedSkellamLaw, caputo_derivative, cd_derivative,
                    goodness_of_fit, make_stable, simulate_poisson_tc, simulate_skellam_tc, skellam_pmf)
from tcproc.cli import main

from conftest import law_for, record

FAMILIES = [("stable", 0.3, None), ("stable", 0.5, None), ("stable", 0.8, None), ("tempered_stable", 0.5, 1.0)]
T_LATTICE = np.linspace(0.2, 3.0, 5)


def _curves():
    a = lambda t: np.asarray(t, float)
    return {
        "t": DifferentiableCurve(a, lambda t: np.ones_like(a(t)), 0.0),
        "t2": DifferentiableCurve(lambda t: a(t) ** 2, lambda t: 2 * a(t), 0.0),
        "exp": DifferentiableCurve(lambda t: np.exp(-a(t)), lambda t: -np.exp(-a(t)), 1.0),
        "sin": DifferentiableCurve(np.sin, np.cos, 0.0),
    }


def ml_oracle(alpha, z):
    with mpmath.workdps(60):
        return float(mpmath.nsum(lambda n: mpmath.mpf(z) ** n / mpmath.gamma(alpha * n + 1), [0, mpmath.inf]))


def half_density(t, u):
    return math.exp(-u * u / (4 * t)) / math.sqrt(math.pi * t)


def test_criterion_01_stable_reduction():
    worst = 0.0
    ts = np.array([0.25, 1.0, 4.0])
    for alpha in (0.3, 0.5, 0.7, 0.9):
        f = make_stable(alpha)
        for u in _curves().values():
            worst = max(worst, float(np.max(np.abs(cd_derivative(u, f, ts) - caputo_derivative(u, alpha, ts)))))
    assert record(1, "stable-case derivative equals Caputo", worst, 1e-6)


def test_criterion_02_eigenfunction():
    ts = np.linspace(0.1, 5.0, 12)
    stable = max(law_for("stable", a).eigenfunction_residual(lam, ts).max_residual
                 for a in (0.3, 0.5, 0.8) for lam in (0.5, 1.0, 2.0))
    tempered = max(law_for("tempered_stable", 0.5, 1.0).eigenfunction_residual(lam, ts, tolerance=1e-3).max_residual
                   for lam in (0.5, 1.0, 2.0))
    ok = stable <= 1e-4 and tempered <= 1e-3
    assert record(2, "eigenfunction residual (stable)", stable, 1e-4, ok,
                  f"; tempered {tempered:.3e} (tol 1.0e-03)")


def test_criterion_03_mittag_leffler():
    worst = 0.0
    ts, lams = [0.1, 0.5, 1.0, 2.0, 5.0], [0.1, 0.5, 1.0, 2.0, 5.0]
    for alpha in (0.3, 0.5, 0.8):
        law = law_for("stable", alpha)
        for t in ts:
            for lam in lams:
                worst = max(worst, abs(law.laplace(t, lam) - ml_oracle(alpha, -lam * t ** alpha)))
    assert record(3, "Laplace transform equals Mittag-Leffler", worst, 1e-6)


def test_criterion_04_half_density():
    # certify the closed form through its forward transform first
    cert = 0.0
    for u in (0.1, 1.0, 3.0):
        for r in (0.3, 1.0, 4.0):
            val, _ = integrate.quad(lambda t: math.exp(-r * t) * half_density(t, u), 0.0, np.inf,
                                    epsabs=0.0, epsrel=1e-12, limit=400)
            cert = max(cert, abs(val * math.sqrt(r) * math.exp(u * math.sqrt(r)) - 1.0))
    law = law_for("stable", 0.5)
    worst = 0.0
    for t in np.linspace(0.5, 2.0, 4):
        us = np.linspace(0.1, 3.0, 7)
        got = law.density(t, us, method="cross-check")
        ref = np.array([half_density(t, u) for u in us])
        worst = max(worst, float(np.max(np.abs(got / ref - 1.0))))
    ok = cert <= 1e-9 and worst <= 1e-5
    assert record(4, "alpha=1/2 density relative error", worst, 1e-5, ok, f"; forward certificate {cert:.1e}")


def test_criterion_05_poisson_equations():
    worst = 0.0
    for fam in FAMILIES:
        law = law_for(*fam)
        for lam in (0.5, 1.0, 2.0):
            lp = TimeChangedPoissonLaw(IntensityFunction.homogeneous(lam), law)
            worst = max(worst, lp.residual_homogeneous([0, 1, 2, 3], T_LATTICE).max_residual)
    lp = TimeChangedPoissonLaw(IntensityFunction.named("sin2"), law_for("stable", 0.5))
    thm1 = lp.residual_thm1([0, 1, 2], T_LATTICE).max_residual
    ok = worst <= 1e-4 and thm1 <= 1e-3
    assert record(5, "homogeneous count equation residual", worst, 1e-4, ok,
                  f"; variable-rate residual {thm1:.3e} (tol 1.0e-03)")


def test_criterion_06_skellam_equations():
    sym = TimeChangedSkellamLaw(SkellamParams(1.0, 1.0), law_for("stable", 0.5))
    system = sym.residual_governing(range(-2, 3), T_LATTICE).max_residual
    mgf = 0.0
    for fam in (("stable", 0.5, None), ("tempered_stable", 0.5, 1.0)):
        sk = TimeChangedSkellamLaw(SkellamParams(0.5, 2.0), law_for(*fam))
        system = max(system, sk.residual_governing(range(-2, 3), T_LATTICE).max_residual)
        for th in sk.default_thetas():
            mgf = max(mgf, sk.residual_mgf(th, T_LATTICE).max_residual)
    law = law_for("stable", 0.5)
    deg = TimeChangedSkellamLaw(SkellamParams(1.0, 1e-8), law)
    lp = TimeChangedPoissonLaw(IntensityFunction.homogeneous(1.0), law)
    a = deg.residual_governing([0, 1, 2], T_LATTICE)
    b = lp.residual_homogeneous([0, 1, 2], T_LATTICE)
    limit = max(np.max(np.abs(a.lhs - b.lhs)), np.max(np.abs(a.rhs - b.rhs)),
                max(np.max(np.abs(deg.pmf(np.arange(6), t) - lp.pmf(np.arange(6), t))) for t in T_LATTICE))
    ok = system <= 1e-3 and mgf <= 1e-3 and limit <= 1e-5
    assert record(6, "Skellam system residual", system, 1e-3, ok,
                  f"; MGF residual {mgf:.3e} (tol 1.0e-03); degenerate limit {limit:.3e} (tol 1.0e-05)")


def test_criterion_07_normalization():
    worst = 0.0
    for fam in FAMILIES:
        law = law_for(*fam)
        for model in (TimeChangedPoissonLaw(IntensityFunction.homogeneous(1.0), law),
                      TimeChangedPoissonLaw(IntensityFunction.named("sin2"), law),
                      TimeChangedSkellamLaw(SkellamParams(1.0, 2.0), law)):
            for t in (0.5, 1.0, 2.0):
                worst = max(worst, abs(model.normalization(t)["sum"] - 1.0))
    base = 0.0
    for l1, l2, t in ((1.0, 1.0, 1.0), (2.0, 0.5, 3.0), (0.3, 1.7, 10.0)):
        ks = range(-200, 201)
        base = max(base, abs(sum(skellam_pmf(SkellamParams(l1, l2), k, t) for k in ks) - 1.0))
    ok = worst <= 1e-5 and base <= 1e-10
    assert record(7, "pmf lattice normalization", worst, 1e-5, ok, f"; base Skellam {base:.3e} (tol 1.0e-10)")


def test_criterion_08_moments():
    worst = 0.0
    for fam in FAMILIES:
        law = law_for(*fam)
        for lam in (IntensityFunction.homogeneous(2.0), IntensityFunction.named("sin2")):
            lp = TimeChangedPoissonLaw(lam, law)
            for t in (0.5, 2.0):
                xs = np.arange(lp.cutoff(t, 1e-14) + 1)
                p = lp.pmf(xs, t)
                for k in (1, 2):
                    worst = max(worst, abs(lp.moment(k, t) - float(np.sum(xs.astype(float) ** k * p))))
                mean_lambda = float(law.expect(t, lambda u: lam(u)))
                worst = max(worst, abs(lp.moment(1, t) - mean_lambda))
    stable = 0.0
    for alpha in (0.3, 0.5, 0.8):
        lp = TimeChangedPoissonLaw(IntensityFunction.homogeneous(1.5), law_for("stable", alpha))
        for t in (0.5, 1.0, 3.0):
            stable = max(stable, abs(lp.moment(1, t) - 1.5 * t ** alpha / math.gamma(1 + alpha)))
    ok = worst <= 1e-5 and stable <= 1e-6
    assert record(8, "moment identities", worst, 1e-5, ok, f"; stable mean {stable:.3e} (tol 1.0e-06)")


def test_criterion_09_duality():
    worst = 0.0
    for fam in FAMILIES:
        for lam in (IntensityFunction.homogeneous(1.0), IntensityFunction.named("sin2")):
            lp = TimeChangedPoissonLaw(lam, law_for(*fam))
            for t in (0.5, 1.0, 2.0):
                for n in (1, 2, 3):
                    tail = 1.0 - float(np.sum(lp.pmf(np.arange(n), t)))
                    worst = max(worst, abs(lp.arrival_cdf(n, t) - tail))
    assert record(9, "arrival/count duality", worst, 1e-5)


@pytest.mark.slow
def test_criterion_10_monte_carlo():
    t = 1.0
    tv_worst, p_worst = 0.0, 1.0
    lp = TimeChangedPoissonLaw(IntensityFunction.homogeneous(1.0), law_for("stable", 0.5))
    emp = simulate_poisson_tc(lp, SimulationPlan(20240601, 1_000_000, (t,), worker_count=4))
    rep = goodness_of_fit(emp, lambda x: lp.pmf(x, t), support=(0, lp.cutoff(t)))
    tv_worst, p_worst = max(tv_worst, rep.tv_distance), min(p_worst, rep.p_value)
    # the first-passage step is a discretization; halving it must not move the law
    half = simulate_poisson_tc(lp, SimulationPlan(20240601, 1_000_000, (t,), step=5e-3, worker_count=4))
    rep_half = goodness_of_fit(half, lambda x: lp.pmf(x, t), support=(0, lp.cutoff(t)))
    tv_worst, p_worst = max(tv_worst, rep_half.tv_distance), min(p_worst, rep_half.p_value)
    sk = TimeChangedSkellamLaw(SkellamParams(1.0, 0.5), law_for("tempered_stable", 0.5, 1.0))
    emp = simulate_skellam_tc(sk.params, sk.law, SimulationPlan(20240601, 1_000_000, (t,), worker_count=4))
    K = sk.cutoff(t)
    rep = goodness_of_fit(emp, lambda k: sk.pmf(k, t), support=(-K, K))
    tv_worst, p_worst = max(tv_worst, rep.tv_distance), min(p_worst, rep.p_value)
    # power: data from alpha = 0.5, model with alpha = 0.7
    wrong = TimeChangedPoissonLaw(IntensityFunction.homogeneous(1.0), law_for("stable", 0.7))
    small = simulate_poisson_tc(lp, SimulationPlan(20240603, 100_000, (t,)))
    power = goodness_of_fit(small, lambda x: wrong.pmf(x, t), support=(0, wrong.cutoff(t))).p_value
    ok = tv_worst <= 0.01 and p_worst >= 0.01 and power <= 1e-3
    assert record(10, "Monte Carlo TV distance", tv_worst, 0.01, ok,
                  f"; min chi-square p {p_worst:.3f} (>= 0.01); wrong-alpha p {power:.1e} (<= 1e-3)")


def test_criterion_11_reproducibility(tmp_path):
    lp = TimeChangedPoissonLaw(IntensityFunction.homogeneous(1.0), law_for("tempered_stable", 0.5, 1.0))
    plan = dict(master_seed=5, n_paths=20_000, t_checkpoints=(0.5, 1.0), block_size=4096, worker_count=2)
    a = simulate_poisson_tc(lp, SimulationPlan(**plan)).counts
    b = simulate_poisson_tc(lp, SimulationPlan(**plan)).counts
    same_api = np.array_equal(a, b)
    cfg = {"bernstein": {"family": "stable", "alpha": 0.5}, "t_grid": [0.5, 1.0], "seed": 3,
           "simulate": {"n_paths": 5000, "block_size": 2048}}
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump(cfg))
    outs = []
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(path), "--out", str(tmp_path / d), "--threads", "2"]) == 0
        outs.append((tmp_path / d / "tcproc_simulate.csv").read_bytes())
    # the embedded config alone regenerates the table
    echo = json.loads(outs[0].decode().splitlines()[1][len("# config "):])
    (tmp_path / "echo.yaml").write_text(yaml.safe_dump(echo))
    assert main(["simulate", "--config", str(tmp_path / "echo.yaml"), "--out", str(tmp_path / "c"),
                 "--threads", "2"]) == 0
    outs.append((tmp_path / "c" / "tcproc_simulate.csv").read_bytes())
    mismatches = int(not same_api) + sum(o != outs[0] for o in outs[1:])
    assert record(11, "reproducibility mismatches", mismatches, 0)
