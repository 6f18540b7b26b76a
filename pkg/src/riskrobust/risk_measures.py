"""Risk measures evaluated as functionals on laws.

Sign convention: ``X`` is a profit and loss, so ``VaR_t(X) = -q_X(t)`` and
all measures are cash additive, ``rho(X + m) = rho(X) - m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .distributions import Discrete, Distribution, _quad, _tail_integral, empirical_from_sample
from .errors import DivergenceError, DomainError, NoRootError, UnsupportedEssentialSupremumError
from .orlicz import ExpLoss, PowerLoss

_ROOT_TOL = 1e-9
_ROOT_GUARD = 1e15
_FD_STEP = 1e-7


def _check_level(x, name="level"):
    if not 0.0 < x < 1.0:
        raise DomainError(f"{name} must lie in (0,1), got {x!r}")


# distortion functions --------------------------------------------------------------


class DistortionFunction:
    """Concave nondecreasing ``g`` on ``[0, 1]`` with ``g(0) = 0``, ``g(1) = 1``."""

    # exponent r in g'(t) ~ c t^(-r) as t -> 0, when known in closed form
    closed_form_exponent: float | None = None
    # g(0+); nonzero only for distortions with a jump at 0
    g0plus = 0.0
    # g is constant (= 1) on [support_end, 1]
    support_end = 1.0

    @property
    def closed_form_iqr(self):
        """``1 - r`` in the family's own parametrization, so table values are exact."""
        r = self.closed_form_exponent
        return None if r is None else 1.0 - r

    def __call__(self, t):
        return self.g(t)

    def g(self, t):
        raise NotImplementedError

    def g_prime(self, t):
        """Right derivative ``g'_+(t)``."""
        raise NotImplementedError

    def dual(self, s):
        """``1 - g(1 - s)``, accurate for small ``s``."""
        return 1.0 - self.g(1.0 - np.asarray(s, dtype=float))


def _clip_unit(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > 1):
        raise DomainError("distortions are defined on [0, 1]")
    return t


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class AVaRDistortion(DistortionFunction):
    """``g(t) = min(t / alpha, 1)``."""

    alpha: float
    closed_form_exponent = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"level must lie in (0,1), got {self.alpha!r}")

    @property
    def support_end(self):
        return self.alpha

    def g(self, t):
        return _out(np.minimum(_clip_unit(t) / self.alpha, 1.0))

    def g_prime(self, t):
        t = _clip_unit(t)
        return _out(np.where(t < self.alpha, 1.0 / self.alpha, 0.0))

    def dual(self, s):
        s = np.asarray(s, dtype=float)
        return _out(np.maximum(0.0, 1.0 - (1.0 - s) / self.alpha))

    @property
    def spec(self):
        return f"avar:a={self.alpha:g}"


@dataclass(frozen=True)
class PowerDistortion(DistortionFunction):
    """``g(t) = min((t / alpha)**beta, 1)`` with ``0 < beta <= 1``."""

    alpha: float = 1.0
    beta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"level must lie in (0,1], got {self.alpha!r}")
        if not 0.0 < self.beta <= 1.0:
            raise DomainError(f"beta must lie in (0,1], got {self.beta!r}")

    @property
    def closed_form_exponent(self):
        return 1.0 - self.beta

    @property
    def closed_form_iqr(self):
        return float(self.beta)

    @property
    def support_end(self):
        return self.alpha

    def g(self, t):
        return _out(np.minimum((_clip_unit(t) / self.alpha) ** self.beta, 1.0))

    def g_prime(self, t):
        t = _clip_unit(t)
        with np.errstate(divide="ignore"):
            val = self.beta / self.alpha * (t / self.alpha) ** (self.beta - 1.0)
        return _out(np.where(t < self.alpha, val, 0.0))

    def dual(self, s):
        s = np.asarray(s, dtype=float)
        if self.alpha < 1.0:
            return _out(1.0 - self.g(1.0 - s))
        return _out(-np.expm1(self.beta * np.log1p(-s)))

    @property
    def spec(self):
        return f"distortion:power:a={self.alpha:g},b={self.beta:g}"


@dataclass(frozen=True)
class MinMaxVar(DistortionFunction):
    """``g(t) = 1 - (1 - t**(1/(1+lam)))**(1+gamma)``."""

    lam: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.lam >= 0 or not self.gamma >= 0:
            raise DomainError("MinMaxVar needs lam >= 0 and gamma >= 0")

    @property
    def closed_form_exponent(self):
        return self.lam / (1.0 + self.lam)

    @property
    def closed_form_iqr(self):
        return 1.0 / (1.0 + self.lam)

    def g(self, t):
        a = 1.0 / (1.0 + self.lam)
        with np.errstate(divide="ignore"):
            # expm1/log1p keep relative accuracy for tiny t
            return _out(-np.expm1((1.0 + self.gamma) * np.log1p(-(_clip_unit(t) ** a))))

    def g_prime(self, t):
        t = _clip_unit(t)
        a = 1.0 / (1.0 + self.lam)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = (1.0 + self.gamma) * (1.0 - t**a) ** self.gamma * a * t ** (a - 1.0)
        return _out(np.where(t == 0.0, np.inf if a < 1 else (1.0 + self.gamma), val))

    def dual(self, s):
        s = np.asarray(s, dtype=float)
        a = 1.0 / (1.0 + self.lam)
        inner = -np.expm1(a * np.log1p(-s))
        return _out(inner ** (1.0 + self.gamma))

    @property
    def spec(self):
        return f"distortion:minmaxvar:l={self.lam:g},g={self.gamma:g}"


class Tabulated(DistortionFunction):
    """Piecewise-linear ``g`` through ``(ts, gs)``.

    ``gs[0]`` may be positive, in which case it is ``g(0+)`` and ``g(0) = 0``.
    """

    def __init__(self, ts, gs):
        ts = np.asarray(ts, dtype=float)
        gs = np.asarray(gs, dtype=float)
        if ts.ndim != 1 or ts.shape != gs.shape or ts.size < 2:
            raise DomainError("tabulated distortion needs matching 1-d grids")
        if ts[0] != 0.0 or ts[-1] != 1.0 or np.any(np.diff(ts) <= 0):
            raise DomainError("grid must increase strictly from 0 to 1")
        if gs[0] < 0 or abs(gs[-1] - 1.0) > 1e-12 or np.any(np.diff(gs) < 0):
            raise DomainError("g must be nondecreasing from g(0+) >= 0 to 1")
        slopes = np.diff(gs) / np.diff(ts)
        if np.any(np.diff(slopes) > 1e-9 * max(1.0, float(np.max(np.abs(slopes))))):
            raise DomainError("tabulated distortion is not concave")
        self.ts, self.gs = ts, gs
        self.g0plus = float(gs[0])

    def __repr__(self):
        return f"Tabulated(<{self.ts.size} nodes>, g(0+)={self.g0plus:g})"

    def g(self, t):
        t = _clip_unit(t)
        return _out(np.where(t == 0.0, 0.0, np.interp(t, self.ts, self.gs)))

    def g_prime(self, t):
        t = _clip_unit(t)
        h = _FD_STEP
        fwd = t + h <= 1.0
        up = np.where(fwd, t + h, t)
        down = np.where(fwd, t, t - h)
        inner = lambda x: np.interp(x, self.ts, self.gs)
        return _out((inner(up) - inner(down)) / h)

    @property
    def spec(self):
        pairs = ";".join(f"{t:g}:{g:g}" for t, g in zip(self.ts, self.gs))
        return f"distortion:table:{pairs}"


def concavity_violation(g, n_grid=1000):
    """Largest increase of ``g'_+`` over an interior grid (0 for concave g)."""
    t = np.linspace(0.0, 1.0, n_grid + 1)[1:-1]
    d = np.asarray(g.g_prime(t), dtype=float)
    return float(max(0.0, np.max(np.diff(d))))


# risk measures ---------------------------------------------------------------------


class RiskMeasure:
    convex = True

    def __call__(self, d):
        return risk_functional(self, d)


@dataclass(frozen=True)
class NegExpectation(RiskMeasure):
    spec = "neg-exp"


@dataclass(frozen=True)
class VaR(RiskMeasure):
    t: float
    convex = False

    def __post_init__(self):
        _check_level(self.t)

    @property
    def spec(self):
        return f"var:t={self.t:g}"


@dataclass(frozen=True)
class AVaR(RiskMeasure):
    alpha: float

    def __post_init__(self):
        _check_level(self.alpha)

    @property
    def distortion(self):
        return AVaRDistortion(self.alpha)

    @property
    def spec(self):
        return f"avar:a={self.alpha:g}"


@dataclass(frozen=True)
class Distortion(RiskMeasure):
    g: DistortionFunction

    @property
    def spec(self):
        return self.g.spec


@dataclass(frozen=True)
class Entropic(RiskMeasure):
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError("entropic risk needs beta > 0")

    @property
    def spec(self):
        return f"entropic:b={self.beta:g}"


@dataclass(frozen=True)
class Shortfall(RiskMeasure):
    """``inf{m : E[l(-X - m)] <= x0}``."""

    loss: object
    x0: float

    def __post_init__(self):
        # both built-in losses map onto (0, oo) on their increasing branch
        if not (self.x0 > 0 and math.isfinite(self.x0)):
            raise DomainError("threshold x0 must be interior to the range of the loss")

    @property
    def spec(self):
        return f"shortfall:{self.loss.spec},x0={self.x0:g}"


@dataclass(frozen=True)
class OneSidedMoment(RiskMeasure):
    """``-E[X] + a * E[((X - E[X])^-)**p]**(1/p)``."""

    p: float
    a: float

    def __post_init__(self):
        if not self.p >= 1:
            raise DomainError("one-sided moment needs p >= 1")
        if not 0.0 <= self.a <= 1.0:
            raise DomainError("one-sided moment weight a must lie in [0,1]")

    @property
    def spec(self):
        return f"osm:p={self.p:g},a={self.a:g}"


# evaluators ------------------------------------------------------------------------


def var(d: Distribution, t: float) -> float:
    _check_level(t)
    return -float(d.quantile(t))


def _l_statistic(d: Discrete, g) -> float:
    cum = np.concatenate(([0.0], d.cumulative_weights))
    inc = np.diff(np.asarray(g(cum), dtype=float))
    return float(np.dot(-d.atoms, inc))


def avar(d: Distribution, alpha: float) -> float:
    _check_level(alpha)
    if isinstance(d, Discrete):
        w = d.cumulative_weights
        prev = np.concatenate(([0.0], w[:-1]))
        mass = np.minimum(w, alpha) - np.minimum(prev, alpha)
        return float(np.dot(-d.atoms, mass) / alpha)
    d.expect(np.abs, moment="first absolute moment")
    return -d.quantile_integral(lambda t, x: x, 0.0, alpha, moment="AVaR tail") / alpha


def distortion_eval_cdf(d: Distribution, g: DistortionFunction) -> float:
    """``int_{-oo}^0 g(F) dy - int_0^oo (1 - g(F)) dy``."""
    if isinstance(d, Discrete):
        breaks = np.union1d(d.atoms, [0.0])
        left, width = breaks[:-1], np.diff(breaks)
        F = np.asarray(d.cdf(left), dtype=float)
        gF = np.asarray(g.g(F), dtype=float)
        neg = left < 0
        return float(np.sum(width[neg] * gF[neg]) - np.sum(width[~neg] * (1.0 - gF[~neg])))
    if g.g0plus > 0:
        raise UnsupportedEssentialSupremumError("g(0+) > 0 is supported only for discrete laws")
    neg_part = lambda y: float(g.g(min(float(d.cdf(-y)), 1.0)))

    def pos_part(y):
        # use whichever of F, 1 - F is small; 1 - S loses tiny F entirely
        s = min(float(np.exp(d.logsf(y))), 1.0)
        if s < 0.5:
            return float(g.dual(s))
        return 1.0 - float(g.g(min(float(d.cdf(y)), 1.0)))

    return _half_line(neg_part, "negative tail") - _half_line(pos_part, "positive tail")


def _half_line(h, moment):
    body = _quad(h, 0.0, 1.0)
    tail = _tail_integral(lambda u: h(math.exp(u)) * math.exp(u), 0.0, moment)
    return body + tail


def distortion_eval_spectral(d: Distribution, g: DistortionFunction) -> float:
    """``int_0^1 VaR_t g'_+(t) dt``; an L-statistic for discrete laws."""
    if isinstance(d, Discrete):
        return _l_statistic(d, g.g)
    if g.g0plus > 0:
        raise UnsupportedEssentialSupremumError("g(0+) > 0 is supported only for discrete laws")
    return d.quantile_integral(
        lambda t, x: -x * float(g.g_prime(t)), 0.0, g.support_end, moment="spectral integral"
    )


def entropic_eval(d: Distribution, beta: float) -> float:
    if not beta > 0:
        raise DomainError("entropic risk needs beta > 0")
    if isinstance(d, Discrete):
        return float(special.logsumexp(-beta * d.atoms, b=d.weights)) / beta
    c = float(d.quantile(0.5))
    m = d.expect(lambda x: math.exp(-beta * (x - c)), moment="exponential moment")
    return -c + math.log(m) / beta


def _loss_moment(d, loss, m):
    if isinstance(d, Discrete):
        with np.errstate(over="ignore"):
            return float(np.dot(d.weights, np.asarray(loss(-d.atoms - m), dtype=float)))
    return d.expect(lambda x: float(loss(-x - m)), moment="loss moment")


def shortfall_eval(d: Distribution, loss, x0: float) -> float:
    """Smallest ``m`` with ``E[l(-X - m)] <= x0``, by bisection."""
    if not x0 > 0:
        raise DomainError("threshold x0 must be interior to the range of the loss")
    h = lambda m: _loss_moment(d, loss, m)
    if h(0.0) <= x0:
        hi, step = 0.0, -1.0
        lo = hi + step
        while h(lo) <= x0:
            hi = lo
            step *= 2.0
            lo = step
            if abs(lo) > _ROOT_GUARD:
                raise NoRootError("shortfall bracket exceeded the overflow guard")
    else:
        lo, step = 0.0, 1.0
        hi = step
        while h(hi) > x0:
            lo = hi
            step *= 2.0
            hi = step
            if hi > _ROOT_GUARD:
                raise NoRootError("shortfall bracket exceeded the overflow guard")
    while hi - lo > _ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if h(mid) <= x0:
            hi = mid
        else:
            lo = mid
    return hi


def one_sided_moment_eval(d: Distribution, p: float, a: float) -> float:
    if not p >= 1 or not 0.0 <= a <= 1.0:
        raise DomainError("one-sided moment needs p >= 1 and a in [0,1]")
    if isinstance(d, Discrete):
        mean = float(np.dot(d.weights, d.atoms))
        low = np.maximum(mean - d.atoms, 0.0)
        mom = float(np.dot(d.weights, low**p))
    else:
        mean = d.expect(lambda x: x, moment="mean")
        mom = d.expect(lambda x: max(mean - x, 0.0) ** p, moment=f"lower moment of order {p:g}")
    return -mean + a * mom ** (1.0 / p)


def risk_functional(rho: RiskMeasure, d: Distribution) -> float:
    """``R_rho(mu)``: the risk of any ``X`` with law ``d``."""
    if isinstance(rho, NegExpectation):
        if isinstance(d, Discrete):
            return -float(np.dot(d.weights, d.atoms))
        return -d.expect(lambda x: x, moment="mean")
    if isinstance(rho, VaR):
        return var(d, rho.t)
    if isinstance(rho, AVaR):
        return avar(d, rho.alpha)
    if isinstance(rho, Distortion):
        return distortion_eval_spectral(d, rho.g)
    if isinstance(rho, Entropic):
        return entropic_eval(d, rho.beta)
    if isinstance(rho, Shortfall):
        return shortfall_eval(d, rho.loss, rho.x0)
    if isinstance(rho, OneSidedMoment):
        return one_sided_moment_eval(d, rho.p, rho.a)
    raise DomainError(f"unknown risk measure {rho!r}")


def plug_in_estimate(rho: RiskMeasure, xs) -> float:
    """``R_rho`` of the empirical law of ``xs``."""
    return risk_functional(rho, empirical_from_sample(xs))
