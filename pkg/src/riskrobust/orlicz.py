"""Young functions, weight functions and Luxemburg norms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Discrete, Distribution
from .errors import DivergenceError, DomainError, NotInOrliczSpaceError

# largest argument tried when bracketing a supremum or a norm
_SEARCH_GUARD = 1e15
_NORM_TOL = 1e-10


def _call(fn, x):
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        out = fn(x)
    return float(out) if np.ndim(out) == 0 else out


# losses ------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpLoss:
    """``l(x) = exp(beta * x)``."""

    beta: float = 1.0
    growth = "exponential"

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError("exponential loss needs beta > 0")

    def __call__(self, x):
        return _call(lambda v: np.exp(self.beta * v), x)

    @property
    def spec(self):
        return f"exp:b={self.beta:g}"


@dataclass(frozen=True)
class PowerLoss:
    """``l(x) = ((1 + x)^+)**p``."""

    p: float = 1.0
    growth = "power"

    def __post_init__(self):
        if not self.p >= 1:
            raise DomainError("power loss needs p >= 1")

    def __call__(self, x):
        return _call(lambda v: np.maximum(1.0 + v, 0.0) ** self.p, x)

    @property
    def spec(self):
        return f"power:p={self.p:g}"


# Young functions -----------------------------------------------------------------


class YoungFunction:
    """A finite Young function ``Psi`` on ``[0, oo)``.

    ``delta2`` is the analytic answer for the family; ``None`` means unknown.
    """

    delta2: bool | None = None

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        xa = np.asarray(x, dtype=float)
        if np.any(xa < 0):
            raise DomainError("Young functions are evaluated on [0, oo)")
        return _call(self._eval, xa)

    def _eval(self, x):
        raise NotImplementedError

    def conjugate(self, y):
        """``sup_{x >= 0} (x y - Psi(x))``; ``inf`` when unbounded."""
        ya = np.asarray(y, dtype=float)
        if np.any(ya < 0):
            raise DomainError("the conjugate is evaluated on [0, oo)")
        if ya.ndim == 0:
            return self._conjugate(float(ya))
        return np.array([self._conjugate(float(v)) for v in ya.ravel()]).reshape(ya.shape)

    def _conjugate(self, y):
        return _conjugate_search(self._eval, y)

    def inverse(self, v):
        """Smallest ``x`` with ``Psi(x) >= v``."""
        if v <= 0:
            return 0.0
        hi = 1.0
        while self._eval(hi) < v:
            hi *= 2.0
            if hi > _SEARCH_GUARD:
                return math.inf
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if self._eval(mid) < v:
                lo = mid
            else:
                hi = mid
        return hi


def _conjugate_search(psi, y, tol=1e-10):
    """Ternary search on the concave map ``x -> x y - psi(x)``."""
    phi = lambda x: x * y - float(psi(np.float64(x)))
    if y == 0.0:
        return 0.0
    hi = 1.0
    while phi(2.0 * hi) >= phi(hi):
        hi *= 2.0
        if hi > _SEARCH_GUARD:
            return math.inf
    lo, hi = 0.0, 2.0 * hi
    while hi - lo > tol * max(1.0, hi):
        a = lo + (hi - lo) / 3.0
        b = hi - (hi - lo) / 3.0
        if phi(a) < phi(b):
            lo = a
        else:
            hi = b
    return max(phi(0.5 * (lo + hi)), 0.0)


@dataclass(frozen=True)
class Power(YoungFunction):
    """``Psi(x) = x**p / p``."""

    p: float = 2.0
    delta2 = True

    def __post_init__(self):
        if not self.p >= 1 or not math.isfinite(self.p):
            raise DomainError("Power Young function needs finite p >= 1")

    def _eval(self, x):
        return x**self.p / self.p

    @property
    def conjugate_exponent(self):
        return math.inf if self.p == 1 else self.p / (self.p - 1.0)

    def _conjugate(self, y):
        if self.p == 1:
            return 0.0 if y <= 1.0 else math.inf
        q = self.conjugate_exponent
        try:
            return y**q / q
        except OverflowError:
            return math.inf

    def inverse(self, v):
        return (self.p * v) ** (1.0 / self.p) if v > 0 else 0.0

    @property
    def spec(self):
        return f"power:p={self.p:g}"


@dataclass(frozen=True)
class Exponential(YoungFunction):
    """``Psi(x) = exp(x) - 1``."""

    delta2 = False

    def _eval(self, x):
        return np.expm1(x)

    def _conjugate(self, y):
        # the maximizer of x y - (e^x - 1) is x = log y
        return y * math.log(y) - y + 1.0 if y > 1.0 else 0.0

    def inverse(self, v):
        return math.log1p(v) if v > 0 else 0.0

    @property
    def spec(self):
        return "exp"


@dataclass(frozen=True)
class ShiftedLoss(YoungFunction):
    """``Psi(x) = l(x) - l(0)`` for a convex increasing loss ``l``."""

    loss: object = ExpLoss()

    @property
    def delta2(self):
        return self.loss.growth == "power"

    def _eval(self, x):
        return self.loss(x) - self.loss(0.0)

    @property
    def spec(self):
        return f"shifted:{self.loss.spec}"


# Delta_2 -------------------------------------------------------------------------


@dataclass(frozen=True)
class Delta2Result:
    holds: bool
    ratio_sup: float
    estimate: bool


def delta2_check(psi, x0=1.0, xmax=50.0, n_grid=400):
    """Sup of ``Psi(2x) / Psi(x)`` over a geometric grid on ``[x0, xmax]``.

    For families with a known answer ``holds`` is analytic and ``estimate``
    is False; otherwise ``holds`` is a heuristic read off the grid.
    """
    if not 0 < x0 < xmax:
        raise DomainError("delta2_check needs 0 < x0 < xmax")
    xs = np.geomspace(x0, xmax, n_grid)
    with np.errstate(over="ignore", invalid="ignore"):
        ratios = np.asarray(psi.eval(2.0 * xs), dtype=float) / np.asarray(psi.eval(xs), dtype=float)
    ratios = np.where(np.isnan(ratios), np.inf, ratios)
    ratio_sup = float(np.max(ratios))
    analytic = psi.delta2
    if analytic is not None:
        return Delta2Result(bool(analytic), ratio_sup, estimate=False)
    tail = ratios[-max(2, n_grid // 10):]
    holds = math.isfinite(ratio_sup) and tail[-1] <= 1.01 * tail[0]
    return Delta2Result(bool(holds), ratio_sup, estimate=True)


# weight functions ------------------------------------------------------------------


class WeightFunction:
    """Continuous ``psi >= 0`` with ``psi >= 1`` outside ``[-bound, bound]``."""

    bound = 0.0

    def __call__(self, x):
        return _call(self._eval, x)

    def level(self, M):
        """Smallest ``r >= 0`` with ``psi(x) >= M`` iff ``|x| >= r``."""
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantWeight(WeightFunction):
    bound = 0.0

    def _eval(self, x):
        return np.ones_like(x)

    def level(self, M):
        return 0.0 if M <= 1 else math.inf

    @property
    def spec(self):
        return "const"


@dataclass(frozen=True)
class AbsPowerWeight(WeightFunction):
    """``psi(x) = |x|**p / p``."""

    p: float = 1.0

    def __post_init__(self):
        if not self.p >= 1:
            raise DomainError("abs-power weight needs p >= 1")

    @property
    def bound(self):
        return self.p ** (1.0 / self.p)

    def _eval(self, x):
        return np.abs(x) ** self.p / self.p

    def level(self, M):
        return (self.p * M) ** (1.0 / self.p)

    @property
    def spec(self):
        return f"abs-power:p={self.p:g}"


@dataclass(frozen=True)
class YoungWeight(WeightFunction):
    """``psi(x) = Psi(|x|)``."""

    young: YoungFunction = Power(1.0)

    @property
    def bound(self):
        return self.young.inverse(1.0)

    def _eval(self, x):
        return self.young._eval(np.abs(x))

    def level(self, M):
        return self.young.inverse(M)

    @property
    def spec(self):
        return f"young:{self.young.spec}"


# norms -------------------------------------------------------------------------------


def _modular(d, psi, lam):
    """``E[Psi(|X| / lam)]``, with ``inf`` for a divergent expectation."""
    try:
        val = d.expect(lambda x: psi._eval(np.abs(x) / lam))
    except DivergenceError:
        return math.inf
    return val if math.isfinite(val) else math.inf


def luxemburg_norm(d: Distribution, psi: YoungFunction, tol=_NORM_TOL):
    """``inf{lam > 0 : E[Psi(|X| / lam)] <= 1}`` by bisection on ``lam``."""
    if isinstance(d, Discrete):
        top = float(np.max(np.abs(d.atoms)))
        if top == 0.0:
            return 0.0
        hi = top
    else:
        hi = 1.0
    finite_seen = False
    while True:
        m = _modular(d, psi, hi)
        finite_seen = finite_seen or math.isfinite(m)
        if m <= 1.0:
            break
        hi *= 2.0
        if hi > _SEARCH_GUARD:
            if not finite_seen:
                raise NotInOrliczSpaceError("Psi-moment", "E[Psi(|X|/lam)] diverges for every lam tried")
            raise NotInOrliczSpaceError("Psi-moment", "E[Psi(|X|/lam)] stays above 1")
    lo = 0.5 * hi
    while _modular(d, psi, lo) <= 1.0:
        hi = lo
        lo *= 0.5
        if lo < 1e-300:
            return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _modular(d, psi, mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return hi


def heart_member(d: Distribution, psi: YoungFunction, c_grid=(1, 2, 4, 8, 16)):
    """Whether ``E[Psi(c|X|)]`` is finite for every ``c`` in ``c_grid``."""
    c_grid = tuple(c_grid)
    if not c_grid or any(not c > 0 for c in c_grid):
        raise DomainError("c_grid must be a nonempty list of positive reals")
    if isinstance(d, Discrete):
        return True
    for c in sorted(c_grid):
        try:
            d.expect(lambda x: psi._eval(c * np.abs(x)))
        except DivergenceError:
            return False
    return True
