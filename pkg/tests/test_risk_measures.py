import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from riskrobust.distributions import Affine, Discrete, Lognormal, Normal, Pareto, Uniform, point_mass
from riskrobust.errors import DivergenceError, DomainError, UnsupportedEssentialSupremumError
from riskrobust.orlicz import ExpLoss, PowerLoss
from riskrobust.risk_measures import (
    AVaR,
    AVaRDistortion,
    Distortion,
    Entropic,
    MinMaxVar,
    NegExpectation,
    OneSidedMoment,
    PowerDistortion,
    Shortfall,
    Tabulated,
    VaR,
    avar,
    concavity_violation,
    distortion_eval_cdf,
    distortion_eval_spectral,
    entropic_eval,
    one_sided_moment_eval,
    plug_in_estimate,
    risk_functional,
    shortfall_eval,
    var,
)

FOUR = Discrete([-4, -2, 0, 2])
TWO = Discrete([-1, 0])

DISTORTIONS = [
    AVaRDistortion(0.05),
    AVaRDistortion(0.5),
    PowerDistortion(0.5, 0.25),
    PowerDistortion(1.0, 0.75),
    MinMaxVar(1, 1),
    MinMaxVar(3, 0),
    MinMaxVar(0.5, 2),
]

CONVEX_MEASURES = [
    NegExpectation(),
    AVaR(0.1),
    Distortion(PowerDistortion(0.5, 0.5)),
    Distortion(MinMaxVar(1, 1)),
    Entropic(0.7),
    Shortfall(ExpLoss(1.0), 1.0),
    Shortfall(PowerLoss(2.0), 0.5),
    OneSidedMoment(2, 0.5),
    OneSidedMoment(1, 1.0),
]


@st.composite
def discrete_laws(draw, max_atoms=30, lo=-10, hi=10):
    xs = draw(st.lists(st.floats(lo, hi, allow_nan=False), min_size=1, max_size=max_atoms))
    ws = draw(st.lists(st.floats(0.01, 1.0), min_size=len(xs), max_size=len(xs)))
    return Discrete(xs, np.array(ws) / sum(ws))


# distortion functions --------------------------------------------------------------------


@pytest.mark.parametrize("g", DISTORTIONS + [Tabulated([0, 0.2, 1], [0, 0.6, 1])], ids=repr)
def test_distortion_shape(g):
    assert g(0.0) == 0.0
    assert g(1.0) == pytest.approx(1.0, abs=1e-15)
    t = np.linspace(0, 1, 1001)
    assert np.all(np.diff(np.asarray(g(t))) >= -1e-15)
    assert concavity_violation(g) <= 1e-6


@pytest.mark.parametrize("g", DISTORTIONS, ids=repr)
def test_derivative_matches_difference_quotient(g):
    # central differences with a step proportional to t; AV@R is kinked at alpha
    t = np.array([1e-4, 0.01, 0.2, 0.6, 0.9])
    t = t[np.abs(t - g.support_end) > 1e-3]
    h = 1e-6 * t
    fd = (np.asarray(g(t + h)) - np.asarray(g(t - h))) / (2 * h)
    assert np.allclose(g.g_prime(t), fd, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("g", DISTORTIONS, ids=repr)
def test_dual_matches_definition(g):
    s = np.array([0.01, 0.3, 0.7])
    assert np.allclose(g.dual(s), 1 - np.asarray(g(1 - s)), atol=1e-14)


def test_minmaxvar_accurate_for_tiny_levels():
    g = MinMaxVar(1, 1)
    t = 1e-30
    # g(t) ~ (1 + gamma) t^(1/(1+lam)) as t -> 0
    assert g(t) == pytest.approx(2 * math.sqrt(t), rel=1e-10)


def test_tabulated_validation():
    with pytest.raises(DomainError):
        Tabulated([0, 0.5, 1], [0, 0.2, 1])  # convex
    with pytest.raises(DomainError):
        Tabulated([0, 1], [0, 0.9])
    with pytest.raises(DomainError):
        Tabulated([0.1, 1], [0, 1])


def test_tabulated_derivative_is_forward_difference():
    g = Tabulated([0, 0.2, 1], [0, 0.6, 1])
    assert g.g_prime(0.1) == pytest.approx(3.0)
    assert g.g_prime(0.2) == pytest.approx(0.5)


# value at risk and AV@R ---------------------------------------------------------------------


def test_var_examples():
    assert var(point_mass(3.0), 0.4) == -3.0
    assert var(FOUR, 0.3) == 2.0
    assert var(Normal(), 0.05) == pytest.approx(1.6449, abs=1e-4)


def test_var_level_validation():
    with pytest.raises(DomainError):
        var(FOUR, 0.0)
    with pytest.raises(DomainError):
        VaR(1.0)


def test_avar_examples():
    assert avar(FOUR, 0.5) == pytest.approx(3.0)
    assert avar(point_mass(2.5), 0.2) == pytest.approx(-2.5)
    assert avar(Normal(), 0.05) == pytest.approx(2.0627, abs=1e-3)


def test_avar_normal_closed_form():
    z = stats.norm.ppf(0.05)
    assert avar(Normal(), 0.05) == pytest.approx(stats.norm.pdf(z) / 0.05, rel=1e-9)


def test_avar_normal_by_direct_quadrature():
    # independent oracle: (1/alpha) int_0^alpha -Phi^{-1}(t) dt
    ref, _ = integrate.quad(lambda t: -stats.norm.ppf(t), 0, 0.05, epsabs=1e-13, limit=200)
    assert avar(Normal(), 0.05) == pytest.approx(ref / 0.05, abs=1e-9)


def test_avar_divergent_mean():
    with pytest.raises(DivergenceError):
        avar(Pareto(0.8), 0.05)


@settings(max_examples=100, deadline=None)
@given(discrete_laws(), st.floats(0.01, 0.99))
def test_avar_is_tail_average_of_var(d, alpha):
    # (1/alpha) int_0^alpha VaR_t dt by exact integration of the step function
    cum = np.concatenate(([0.0], d.cumulative_weights))
    total = 0.0
    for k, x in enumerate(d.atoms):
        lo, hi = cum[k], min(cum[k + 1], alpha)
        if hi > lo:
            total += -x * (hi - lo)
    assert avar(d, alpha) == pytest.approx(total / alpha, abs=1e-9)


# distortion measures ------------------------------------------------------------------------


def test_distortion_cdf_examples():
    g = AVaRDistortion(0.5)
    assert distortion_eval_cdf(FOUR, g) == pytest.approx(3.0)
    assert distortion_eval_cdf(point_mass(0.0), MinMaxVar(1, 1)) == 0.0
    assert distortion_eval_cdf(point_mass(-1.0), MinMaxVar(1, 1)) == pytest.approx(1.0)


def test_distortion_spectral_examples():
    assert distortion_eval_spectral(FOUR, AVaRDistortion(0.5)) == pytest.approx(3.0)
    for c in (-2.0, 0.0, 3.5):
        assert distortion_eval_spectral(point_mass(c), MinMaxVar(1, 1)) == pytest.approx(-c)


def test_minmaxvar_two_point_value():
    # the L-statistic on {-1, 0} is g(1/2); for lam = gamma = 1 that is
    # 1 - (1 - sqrt(1/2))^2 = 0.9142135...
    g = MinMaxVar(1, 1)
    exact = 1 - (1 - math.sqrt(0.5)) ** 2
    assert distortion_eval_spectral(TWO, g) == pytest.approx(exact, abs=1e-12)
    assert distortion_eval_cdf(TWO, g) == pytest.approx(exact, abs=1e-12)


@pytest.mark.parametrize("g", DISTORTIONS, ids=repr)
def test_dual_formulas_agree_on_parametric_laws(g):
    for law in (Normal(0.3, 1.2), Uniform(-2, 1), Lognormal(0, 0.5)):
        a = distortion_eval_cdf(law, g)
        b = distortion_eval_spectral(law, g)
        assert a == pytest.approx(b, abs=1e-9)


def test_singular_distortion_on_lognormal_against_oracle():
    # 30-digit mpmath quadrature of the spectral integral after t = u^4
    ref = -0.433755676596473191
    g = PowerDistortion(0.5, 0.25)
    assert distortion_eval_cdf(Lognormal(0, 0.5), g) == pytest.approx(ref, abs=1e-10)
    assert distortion_eval_spectral(Lognormal(0, 0.5), g) == pytest.approx(ref, abs=1e-10)


def test_avar_routes_agree_on_normal():
    g = AVaRDistortion(0.05)
    ref = avar(Normal(), 0.05)
    assert distortion_eval_cdf(Normal(), g) == pytest.approx(ref, abs=1e-8)
    assert distortion_eval_spectral(Normal(), g) == pytest.approx(ref, abs=1e-8)


def test_essential_supremum_term():
    g = Tabulated([0, 0.5, 1], [0.2, 0.7, 1])
    d = Discrete([-3, 1])
    # 0.2 * 3 from the jump plus 0.5 * 3 from the slope on [0, 1/2]; minus 0.3 * 1
    assert distortion_eval_spectral(d, g) == pytest.approx(0.2 * 3 + 0.5 * 3 - 0.3 * 1)
    assert distortion_eval_cdf(d, g) == pytest.approx(distortion_eval_spectral(d, g))
    with pytest.raises(UnsupportedEssentialSupremumError):
        distortion_eval_spectral(Normal(), g)


@settings(max_examples=200, deadline=None)
@given(discrete_laws(max_atoms=50), st.sampled_from(DISTORTIONS))
def test_dual_formulas_agree_on_discrete_laws(d, g):
    assert distortion_eval_cdf(d, g) == pytest.approx(distortion_eval_spectral(d, g), abs=1e-8)


# entropic, shortfall, one-sided moments ------------------------------------------------------


def test_entropic_examples():
    assert entropic_eval(point_mass(1.5), 2.0) == pytest.approx(-1.5)
    assert entropic_eval(Discrete([0, -1]), 1.0) == pytest.approx(math.log((1 + math.e) / 2), abs=1e-12)
    assert entropic_eval(Normal(1, 2), 1.0) == pytest.approx(-1 + 2.0, abs=1e-6)
    assert entropic_eval(Normal(-0.5, 0.3), 3.0) == pytest.approx(0.5 + 3 * 0.09 / 2, abs=1e-6)


def test_entropic_divergent_exponential_moment():
    with pytest.raises(DivergenceError):
        entropic_eval(Affine(Pareto(3.0), 0.0, -1.0), 1.0)


def test_shortfall_examples():
    assert shortfall_eval(Discrete([0, -1]), ExpLoss(1.0), 1.0) == pytest.approx(0.62011, abs=1e-5)
    assert shortfall_eval(point_mass(4.0), ExpLoss(1.0), 1.0) == pytest.approx(-4.0, abs=1e-8)
    assert shortfall_eval(point_mass(0.0), PowerLoss(1.0), 0.5) == pytest.approx(0.5, abs=1e-8)


def test_shortfall_threshold_validation():
    with pytest.raises(DomainError):
        Shortfall(ExpLoss(1.0), 0.0)


@settings(max_examples=50, deadline=None)
@given(discrete_laws(max_atoms=20), st.floats(0.2, 3.0))
def test_shortfall_with_exponential_loss_is_entropic(d, beta):
    assert shortfall_eval(d, ExpLoss(beta), 1.0) == pytest.approx(entropic_eval(d, beta), abs=1e-7)


def test_shortfall_parametric_normal():
    assert shortfall_eval(Normal(1, 2), ExpLoss(1.0), 1.0) == pytest.approx(1.0, abs=1e-7)


def test_one_sided_moment_examples():
    assert one_sided_moment_eval(Discrete([-1, 1]), 2, 1) == pytest.approx(math.sqrt(0.5))
    assert one_sided_moment_eval(point_mass(2.0), 3, 0.7) == pytest.approx(-2.0)
    assert one_sided_moment_eval(FOUR, 2, 0.0) == pytest.approx(1.0)


def test_one_sided_moment_normal():
    # E[(X^-)^2] = 1/2 for a standard normal
    assert one_sided_moment_eval(Normal(), 2, 1.0) == pytest.approx(math.sqrt(0.5), abs=1e-8)
    with pytest.raises(DivergenceError):
        one_sided_moment_eval(Affine(Pareto(1.8), 0.0, -1.0), 2, 1.0)
    # the lower deviations of a Pareto law are bounded, so this one is finite
    assert math.isfinite(one_sided_moment_eval(Pareto(1.8), 2, 1.0))


# dispatch and estimators ----------------------------------------------------------------------


def test_risk_functional_examples():
    assert risk_functional(NegExpectation(), Discrete([1, 2, 3])) == pytest.approx(-2.0)
    assert risk_functional(AVaR(0.5), FOUR) == pytest.approx(3.0)
    assert risk_functional(Entropic(1.0), point_mass(5.0)) == pytest.approx(-5.0)


def test_plug_in_examples():
    assert plug_in_estimate(NegExpectation(), [1, 3]) == pytest.approx(-2.0)
    assert plug_in_estimate(VaR(0.3), [-4, -2, 0, 2]) == 2.0
    assert plug_in_estimate(AVaR(0.5), [-4, -2, 0, 2]) == pytest.approx(3.0)


def test_measures_are_callable():
    assert AVaR(0.5)(FOUR) == pytest.approx(3.0)


def test_spec_strings():
    assert AVaR(0.05).spec == "avar:a=0.05"
    assert Distortion(MinMaxVar(1, 1)).spec == "distortion:minmaxvar:l=1,g=1"
    assert Shortfall(ExpLoss(1), 1).spec == "shortfall:exp:b=1,x0=1"
    assert OneSidedMoment(2, 0.5).spec == "osm:p=2,a=0.5"


# axioms ---------------------------------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(discrete_laws(max_atoms=20, lo=-5, hi=5), st.floats(0.01, 3), st.sampled_from(CONVEX_MEASURES + [VaR(0.2)]))
def test_monotonicity(d, delta, rho):
    assert risk_functional(rho, d.affine(delta, 1.0)) <= risk_functional(rho, d) + 1e-9


@settings(max_examples=100, deadline=None)
@given(discrete_laws(max_atoms=20, lo=-5, hi=5), st.floats(-5, 5), st.sampled_from(CONVEX_MEASURES))
def test_cash_additivity(d, m, rho):
    assert risk_functional(rho, d.affine(m, 1.0)) == pytest.approx(risk_functional(rho, d) - m, abs=1e-8)


def test_var_cash_additivity_away_from_jumps():
    rho = VaR(0.3)
    d = Discrete([-4, -2, 0, 2])
    for m in (-1.7, 0.4, 3.0):
        assert risk_functional(rho, d.affine(m, 1.0)) == pytest.approx(risk_functional(rho, d) - m)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=8, max_size=8),
    st.lists(st.floats(-5, 5), min_size=8, max_size=8),
    st.floats(0, 1),
    st.sampled_from(CONVEX_MEASURES),
)
def test_convexity_on_comonotone_mixtures(xs, ys, lam, rho):
    # equal weights on a shared grid: the comonotone mixture has sorted
    # atoms lam * x_(k) + (1 - lam) * y_(k)
    x, y = np.sort(xs), np.sort(ys)
    mix = Discrete(lam * x + (1 - lam) * y)
    lhs = risk_functional(rho, mix)
    rhs = lam * risk_functional(rho, Discrete(x)) + (1 - lam) * risk_functional(rho, Discrete(y))
    assert lhs <= rhs + 1e-8
