"""Acceptance criteria, one test (or a pair) per criterion at the stated tolerance.

Each test asserts its runtime budget too.  ``conftest.py`` prints one
PASS/FAIL line per criterion at the end of the session.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate, stats

from riskrobust.distributions import Discrete, Normal, point_mass
from riskrobust.experiments import AR1, IID, TailMix, consistency_run, dispersion_run, non_delta2_demo, robustness_run, skorohod_check
from riskrobust.metrics import prohorov, prohorov_bruteforce
from riskrobust.orlicz import AbsPowerWeight, Exponential, Power, luxemburg_norm
from riskrobust.risk_measures import (
    AVaR,
    AVaRDistortion,
    Distortion,
    Entropic,
    MinMaxVar,
    NegExpectation,
    OneSidedMoment,
    PowerDistortion,
    VaR,
    distortion_eval_cdf,
    distortion_eval_spectral,
    risk_functional,
)
from riskrobust.robustness import distortion_profile, dual_norm_check, robustness_profile

criterion = pytest.mark.criterion


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f} s, budget {self.seconds} s"


def random_discrete(rng, max_atoms=30):
    n = int(rng.integers(1, max_atoms + 1))
    return Discrete(rng.normal(0, 2, n), rng.dirichlet(np.ones(n)))


@criterion(1, "iqr closed-form table, tail-regression within 0.02")
def test_criterion_1_iqr_table():
    with Budget(1.0):
        closed = [(AVaR(a), 1.0) for a in (0.01, 0.05, 0.25)]
        closed += [(Distortion(PowerDistortion(1.0, b)), b) for b in (0.25, 0.5, 0.75)]
        closed += [(Distortion(MinMaxVar(lam, g)), 1 / (1 + lam)) for lam in (0.5, 1, 3) for g in (0, 1)]
        closed += [(OneSidedMoment(p, 0.5), 1 / p) for p in (1, 2, 4)]
        closed += [(NegExpectation(), 1.0), (Entropic(0.5), 0.0), (Entropic(2.0), 0.0)]
        for rho, expected in closed:
            prof = robustness_profile(rho, "closed-form")
            assert prof.iqr == expected, rho.spec
        for rho, expected in closed:
            if isinstance(rho, (AVaR, Distortion)):
                g = AVaRDistortion(rho.alpha) if isinstance(rho, AVaR) else rho.g
                prof = distortion_profile(g, "regression")
                assert prof.method == "tail-regression"
                assert abs(prof.iqr - expected) <= 0.02, rho.spec


@criterion(2, "distortion cdf form and L-statistic form agree within 1e-8")
def test_criterion_2_dual_formulas():
    rng = np.random.default_rng(20)
    with Budget(5.0):
        for _ in range(200):
            d = random_discrete(rng)
            families = [
                AVaRDistortion(float(rng.uniform(0.01, 1))),
                PowerDistortion(float(rng.uniform(0.1, 1)), float(rng.uniform(0.05, 1))),
                MinMaxVar(float(rng.uniform(0.1, 5)), float(rng.uniform(0, 3))),
            ]
            for g in families:
                a, b = distortion_eval_cdf(d, g), distortion_eval_spectral(d, g)
                assert abs(a - b) <= 1e-8, (g, d.atoms, d.weights)


@criterion(3, "flow-based Prohorov matches subset brute force within 1e-6")
def test_criterion_3_prohorov_oracle():
    rng = np.random.default_rng(30)
    with Budget(30.0):
        for _ in range(100):
            mu, nu = random_discrete(rng, 7), random_discrete(rng, 7)
            assert abs(prohorov(mu, nu).value - prohorov_bruteforce(mu, nu)) <= 1e-6


@criterion(4, "AV@R(0.05) plug-in within 0.02 of the quadrature reference, IID and AR1")
def test_criterion_4_consistency():
    with Budget(120.0):
        # reference by quadrature of the quantile representation, independent of the library
        ref, _ = integrate.quad(lambda u: -stats.norm.ppf(u), 0.0, 0.05, epsabs=1e-13, limit=200)
        ref /= 0.05
        assert ref == pytest.approx(2.0627, abs=5e-5)
        assert risk_functional(AVaR(0.05), Normal()) == pytest.approx(ref, abs=1e-9)
        rho = AVaR(0.05)
        iid = consistency_run(rho, IID(Normal()), [100_000], 20, 0)
        assert abs(iid.column("median_estimate")[0] - ref) <= 0.02
        ar = consistency_run(rho, AR1(0.5, 1.0), [100_000], 20, 0)
        assert abs(ar.column("median_estimate")[0] - ref * math.sqrt(4 / 3)) <= 0.02


THETAS = [0.0, 0.001, 0.0025, 0.005, 0.01, 0.02, 0.05, 0.1]


@criterion(5, "robustness dichotomy: AV@R trend to noise floor; OSM(2) IQR grows, VaR within 2x")
def test_criterion_5a_avar_trends_to_noise_floor():
    with Budget(600.0):
        rep = robustness_run(AVaR(0.05), TailMix(Normal(), 3.0), AbsPowerWeight(1), THETAS, 10_000, 500, 0)
    floor = rep.metadata["noise_floor"]
    assert floor == pytest.approx(3 / math.sqrt(500))
    d_laws, d_psi = np.array(rep.column("d_prohorov_laws")), np.array(rep.column("d_psi"))
    assert np.all(d_laws >= 0) and np.all(d_psi >= 0)
    # trend, not constants: distances rank with theta and the small-theta end sits under the floor
    assert stats.spearmanr(THETAS, d_laws).statistic >= 0.9
    assert stats.spearmanr(THETAS, d_psi).statistic >= 0.9
    assert d_laws[0] <= floor and d_laws[1] <= floor


@criterion(5, "robustness dichotomy: AV@R trend to noise floor; OSM(2) IQR grows, VaR within 2x")
def test_criterion_5b_infinite_variance_contamination():
    osm, var = OneSidedMoment(2, 1.0), VaR(0.05)
    with Budget(600.0):
        rep = dispersion_run([osm, var], TailMix(Normal(), 1.8), 0.1, [1_000, 10_000, 100_000], 500, 0)
    rows = {(r[0], r[1]): r for r in rep.rows}
    k_iqr, k_iqr0 = rep.columns.index("iqr"), rep.columns.index("iqr_at_0")
    for n in (1_000, 10_000, 100_000):
        row = rows[(var.spec, n)]
        assert row[k_iqr] <= 2.0 * row[k_iqr0], f"VaR IQR at n={n}"
    osm_iqr = [rows[(osm.spec, n)][k_iqr] for n in (1_000, 10_000, 100_000)]
    assert osm_iqr[0] < osm_iqr[1] < osm_iqr[2], f"OSM(2) IQR across n: {osm_iqr}"


def _widening(n):
    return Discrete([-1 - 1 / n, 1 + 1 / n])


def _escape(n):
    return Discrete([0.0, float(n)], [1 - 1 / n, 1 / n])


@criterion(6, "Skorohod norms vanish exactly when psi-weak convergence holds")
def test_criterion_6_skorohod_equivalence():
    ns = (2, 10, 100, 1000)
    limit2 = Discrete([-1.0, 0.5, 2.0], [0.2, 0.3, 0.5])
    sequences = [
        ([_widening(n) for n in ns], Discrete([-1.0, 1.0]), True),
        ([limit2] * len(ns), limit2, True),
        ([_escape(n) for n in ns], point_mass(0.0), False),
    ]
    with Budget(10.0):
        for p in (1, 2):
            for laws, limit, expected in sequences:
                vanish, weak, _ = skorohod_check(laws, limit, Power(p))
                assert vanish == weak == expected, (p, expected)


@criterion(7, "non-Delta2 truncations: E[Psi(X_n)] decreasing and E[Psi(4 X_n)] >= n up to n >= 5")
def test_criterion_7_non_delta2():
    with Budget(30.0):
        rep = non_delta2_demo(0, Exponential())
    ns = rep.column("n")
    assert len(ns) >= 5 and ns == list(range(1, len(ns) + 1))
    e1, e4 = rep.column("E_psi_X"), rep.column("E_psi_4X")
    assert all(a > b for a, b in zip(e1, e1[1:]))
    assert all(v >= n for v, n in zip(e4, ns))


@criterion(8, "Luxemburg norm of Power(p) equals p^(-1/p) times the p-norm within 1e-8")
def test_criterion_8_norm_identity():
    rng = np.random.default_rng(80)
    for _ in range(100):
        d = random_discrete(rng)
        for p in (1, 2, 3):
            pnorm = float(np.dot(d.weights, np.abs(d.atoms) ** p)) ** (1 / p)
            assert abs(luxemburg_norm(d, Power(p)) - p ** (-1 / p) * pnorm) <= 1e-8


BETAS = (0.25, 0.5, 0.75)
PS = (1.1, 1.2, 1.6, 2.5, 3.0, 6.0)


@criterion(9, "dual norm finite/infinite pattern matches 1/p > 1 - beta")
def test_criterion_9_boundary_coherence():
    for b in BETAS:
        for p in PS:
            assert abs(1 / p - (1 - b)) >= 0.05
    with Budget(30.0):
        got = {(b, p): dual_norm_check(PowerDistortion(1.0, b), Power(p)).finite for b in BETAS for p in PS}
    predicted = {(b, p): 1 / p > 1 - b for b in BETAS for p in PS}
    mismatches = sorted(k for k in got if got[k] != predicted[k])
    assert not mismatches, f"pattern differs from the predicate at (beta, p) = {mismatches}"
