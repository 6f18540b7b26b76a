"""Index of qualitative robustness and related finiteness diagnostics.

For a distortion ``g`` with ``g'_+(t) ~ c t^(-r)`` near 0, the critical
exponent is ``q* = 1/r`` and the index is ``iqr = 1 - 1/q* = 1 - r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import _integrate_unit, tail_weight
from .errors import DivergenceError, DomainError, SingularityError
from .orlicz import ExpLoss, Power, PowerLoss, YoungFunction
from .risk_measures import (
    AVaR,
    AVaRDistortion,
    Distortion,
    DistortionFunction,
    Entropic,
    NegExpectation,
    OneSidedMoment,
    RiskMeasure,
    Shortfall,
    Tabulated,
    VaR,
)

REGRESSION_WINDOW = (1e-8, 1e-3)
REGRESSION_POINTS = 200
_NORM_RTOL = 1e-10
_NORM_GUARD = 1e12


@dataclass(frozen=True)
class RobustnessProfile:
    iqr: float
    q_star: float
    r: float | None
    method: str
    low_confidence: bool = False

    def to_dict(self):
        return {
            "iqr": self.iqr,
            "q_star": "inf" if math.isinf(self.q_star) else self.q_star,
            "r": self.r,
            "method": self.method,
        }


@dataclass(frozen=True)
class NotApplicable:
    """The index is undefined for this risk measure."""

    reason: str

    def __bool__(self):
        return False

    def to_dict(self):
        return {"iqr": None, "q_star": None, "r": None, "method": "not-applicable", "reason": self.reason}


def _profile_from_exponent(r, method, low_confidence=False):
    q_star = math.inf if r == 0 else 1.0 / r
    return RobustnessProfile(1.0 - r, q_star, r, method, low_confidence)


def _profile_from_iqr(iqr, method):
    q_star = math.inf if iqr >= 1.0 else 1.0 / (1.0 - iqr)
    return RobustnessProfile(iqr, q_star, None, method)


def regression_exponent(g: DistortionFunction, window=REGRESSION_WINDOW, n_points=REGRESSION_POINTS):
    """Least-squares slope of ``log g'_+(t)`` against ``-log t``, clamped to [0, 1)."""
    t = np.geomspace(window[0], window[1], n_points)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.asarray(g.g_prime(t), dtype=float)
        y = np.log(d)
    if not np.all(np.isfinite(y)):
        raise SingularityError("g'_+ is not finite and positive on the regression window")
    slope = float(np.polyfit(-np.log(t), y, 1)[0])
    return min(max(slope, 0.0), np.nextafter(1.0, 0.0))


def tail_exponent(g: DistortionFunction, method="auto"):
    """Exponent ``r`` of the singularity of ``g'_+`` at 0."""
    if method not in ("auto", "closed-form", "regression"):
        raise DomainError(f"unknown method {method!r}")
    closed = g.closed_form_exponent
    if method == "closed-form" or (method == "auto" and closed is not None):
        if closed is None:
            raise DomainError(f"{g!r} has no closed-form exponent")
        return float(closed)
    return regression_exponent(g)


def distortion_profile(g: DistortionFunction, method="auto") -> RobustnessProfile:
    if method not in ("auto", "closed-form", "regression"):
        raise DomainError(f"unknown method {method!r}")
    closed = g.closed_form_exponent
    use_closed = method == "closed-form" or (method == "auto" and closed is not None)
    if use_closed:
        if closed is None:
            raise DomainError(f"{g!r} has no closed-form exponent")
        r = float(closed)
        return RobustnessProfile(g.closed_form_iqr, math.inf if r == 0 else 1.0 / r, r, "closed-form")
    r = regression_exponent(g)
    low = isinstance(g, Tabulated) and (g.ts.size < 2 or g.ts[1] > REGRESSION_WINDOW[0])
    return _profile_from_exponent(r, "tail-regression", low)


def qstar(g: DistortionFunction, method="auto") -> float:
    r = tail_exponent(g, method)
    return math.inf if r == 0 else 1.0 / r


def _pow(x, q):
    try:
        return x**q
    except OverflowError:
        return math.inf


def power_integral(g: DistortionFunction, q: float) -> float:
    """``int_0^1 g'_+(t)**q dt``; raises DivergenceError when infinite."""
    end = g.support_end
    f = lambda t: _pow(float(g.g_prime(t)), q)
    return _integrate_unit(
        f, f, lambda s: _pow(float(g.g_prime(1.0 - s)), q), 0.0, end, moment=f"integral of g'^{q:g}"
    )


def qstar_verify(g: DistortionFunction, q: float) -> bool:
    """Whether ``int_0^1 g'_+(t)**q dt`` is finite."""
    try:
        power_integral(g, q)
    except DivergenceError:
        return False
    return True


def iqr_distortion(g: DistortionFunction, method="auto") -> float:
    return distortion_profile(g, method).iqr


def robustness_profile(rho: RiskMeasure, method="auto"):
    """Profile of a risk measure, or :class:`NotApplicable`."""
    if isinstance(rho, VaR):
        return NotApplicable("VaR is not convex, so the index is undefined")
    if isinstance(rho, NegExpectation):
        return _profile_from_iqr(1.0, "closed-form")
    if isinstance(rho, AVaR):
        return distortion_profile(AVaRDistortion(rho.alpha), method)
    if isinstance(rho, Distortion):
        return distortion_profile(rho.g, method)
    if isinstance(rho, OneSidedMoment):
        if rho.a == 0:
            return _profile_from_iqr(1.0, "closed-form")
        return _profile_from_iqr(1.0 / rho.p, "closed-form")
    if isinstance(rho, Entropic):
        return _profile_from_iqr(0.0, "closed-form")
    if isinstance(rho, Shortfall):
        if isinstance(rho.loss, ExpLoss):
            return _profile_from_iqr(0.0, "closed-form")
        if isinstance(rho.loss, PowerLoss):
            return _profile_from_iqr(1.0 / rho.loss.p, "closed-form")
    return NotApplicable(f"no finiteness domain known for {rho!r}")


def iqr_closed_form(rho: RiskMeasure):
    """The index as a number, or a :class:`NotApplicable` marker."""
    prof = robustness_profile(rho)
    return prof.iqr if isinstance(prof, RobustnessProfile) else prof


@dataclass(frozen=True)
class Comparison:
    at_least_as_robust: bool
    strictly_more: bool
    comparable: bool
    basis: str


def compare_robustness(rho1: RiskMeasure, rho2: RiskMeasure) -> Comparison:
    """Order two measures by their index, i.e. on the power-weight scale only."""
    i1, i2 = iqr_closed_form(rho1), iqr_closed_form(rho2)
    if isinstance(i1, NotApplicable) or isinstance(i2, NotApplicable):
        return Comparison(False, False, False, "not comparable: index undefined")
    basis = f"power-weight scale (index {i1:g} vs {i2:g}); finer Young-function orderings are not decided"
    tol = 1e-12
    return Comparison(i1 >= i2 - tol, i1 > i2 + tol, True, basis)


@dataclass(frozen=True)
class UniformIntegrability:
    M_epsilon: float | None
    diverges: bool
    m_grid: tuple
    sup_tail: tuple


def default_m_grid():
    return tuple(2.0 ** (k / 4.0) for k in range(25))


def uniformly_psi_integrating(family, psi, eps, m_grid=None) -> UniformIntegrability:
    """Smallest grid ``M`` with ``sup_nu int_{psi >= M} psi dnu <= eps``."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    family = list(family)
    if not family:
        raise DomainError("family must be nonempty")
    grid = tuple(sorted(m_grid)) if m_grid is not None else default_m_grid()
    sups = []
    for M in grid:
        sup = max(tail_weight(nu, psi, M) for nu in family)
        sups.append(sup)
        if sup <= eps:
            return UniformIntegrability(M, False, grid[: len(sups)], tuple(sups))
    return UniformIntegrability(None, True, grid, tuple(sups))


@dataclass(frozen=True)
class DualNorm:
    finite: bool
    norm: float


def _conjugate_modular(g, psi, lam):
    end = g.support_end

    def f(t):
        y = float(g.g_prime(t)) / lam
        return float(psi.conjugate(y)) if math.isfinite(y) else math.inf

    hi = lambda s: f(1.0 - s)
    try:
        val = _integrate_unit(f, f, hi, 0.0, end, moment="conjugate modular")
    except DivergenceError:
        return math.inf
    return val if math.isfinite(val) else math.inf


def dual_norm_check(g: DistortionFunction, psi: YoungFunction) -> DualNorm:
    """Luxemburg norm of ``g'_+`` under the uniform law on [0, 1] w.r.t. ``psi*``."""
    if isinstance(psi, Power) and psi.p == 1:
        # psi* is 0 on [0, 1] and infinite beyond: the norm is ess sup g'
        top = float(g.g_prime(0.0))
        return DualNorm(math.isfinite(top), top)
    lam = 1.0
    while _conjugate_modular(g, psi, lam) > 1.0:
        lam *= 1e3
        if lam > _NORM_GUARD:
            return DualNorm(False, math.inf)
    hi, lo = lam, lam / 2.0
    while _conjugate_modular(g, psi, lo) <= 1.0:
        hi, lo = lo, lo / 2.0
        if lo < 1e-300:
            return DualNorm(True, 0.0)
    while hi - lo > _NORM_RTOL * hi:
        mid = 0.5 * (lo + hi)
        if _conjugate_modular(g, psi, mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return DualNorm(True, hi)
