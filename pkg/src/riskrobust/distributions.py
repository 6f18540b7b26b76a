"""Probability laws on the real line.

Two kinds of law are supported:

* :class:`Discrete` -- finitely many atoms with positive weights.  Everything
  is computed exactly by finite sums.
* :class:`Parametric` -- a law given by its cdf and quantile function.
  Integrals are taken in quantile form, ``E[f(X)] = int_0^1 f(q(t)) dt``,
  and the two endpoint regions are integrated in the variable
  ``u = -log(tail probability)`` so that heavy tails are visited down to
  probabilities of about ``1e-300``.  A tail integral whose contributions stop
  shrinking is reported as :class:`~riskrobust.errors.DivergenceError`.

Quantiles follow the upper convention ``q(t) = inf{y : F(y) > t}``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import DivergenceError, DomainError

WEIGHT_TOL = 1e-12
OVERFLOW_GUARD = 1e250

# tail integration: u = -log(s) runs from -log(_TAIL_SPLIT) to _U_MAX
_TAIL_SPLIT = 1e-2
_U_MAX = 690.0
_SHELL = 4.0 * math.log(10.0)
# shifts numpy's [0, 1) uniforms onto the open interval (0, 1)
_HALF_ULP = 2.0**-54


def _quad(f, a, b, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        with np.errstate(all="ignore"):
            try:
                val, _ = integrate.quad(
                    f, a, b, points=points, limit=200, epsabs=0.0, epsrel=1e-11
                )
            except OverflowError:
                # math.exp and float ** raise instead of returning inf
                return math.inf
    return val


def _tail_integral(h, u0, moment, u_max=_U_MAX):
    """Integrate ``h`` over ``[u0, oo)`` shell by shell.

    Stops early once shells are negligible.  At ``u_max`` a remaining
    geometric decay is extrapolated; non-decaying shells mean divergence.
    """
    total = 0.0
    shells = []
    signs = []
    u = u0
    # equal-width shells, so consecutive shells are comparable
    n_shells = max(2, math.ceil((u_max - u0) / _SHELL))
    for k in range(n_shells):
        b = u0 + (k + 1) * _SHELL
        val = _quad(h, u, b)
        if not math.isfinite(val):
            raise DivergenceError(moment, "integrand overflows in the tail")
        total += val
        shells.append(abs(val))
        signs.append(math.copysign(1.0, val))
        u = b
        if abs(total) > OVERFLOW_GUARD:
            raise DivergenceError(moment, "exceeds the overflow guard")
        if len(shells) >= 3:
            last, prev = shells[-1], shells[-2]
            if last == 0.0 and prev == 0.0:
                return total
            if last <= prev and last <= 1e-16 * abs(total):
                return total
    if len(shells) < 3:
        return total
    s1, s2, s3 = shells[-3:]
    if s3 <= 1e-12 * abs(total):
        return total
    # shells shrinking by less than 1% are indistinguishable from a
    # logarithmic divergence at this depth
    if s3 >= 0.99 * s2 or s2 == 0.0 or s1 == 0.0:
        raise DivergenceError(moment, "tail contributions do not decay")
    r1, r2 = s2 / s1, s3 / s2
    if r2 <= r1 * (1.0 + 1e-6):
        # geometric decay
        return total + signs[-1] * s3 * r2 / (1.0 - r2)
    # ratios creeping up to 1: model the shells as C * u**(-k)
    c2, c3 = u - 1.5 * _SHELL, u - 0.5 * _SHELL
    k = math.log(s2 / s3) / math.log(c3 / c2)
    if k <= 1.05:
        raise DivergenceError(moment, "tail decays too slowly to integrate")
    density = s3 / _SHELL * c3**k
    return total + signs[-1] * density * u ** (1.0 - k) / (k - 1.0)


def _integrate_unit(mid, lo, hi, a=0.0, b=1.0, points=(), moment="integral"):
    """Integrate over ``t`` in ``[a, b]`` a quantity given three ways.

    ``mid(t)`` evaluates the integrand at ``t``; ``lo(s)`` at ``t = s`` and
    ``hi(s)`` at ``t = 1 - s``, both accurate for tiny ``s``.  Tails are only
    treated specially when ``a == 0`` or ``b == 1``.
    """
    total = 0.0
    start, stop = a, b
    if a == 0.0:
        s0 = min(_TAIL_SPLIT, 0.25 * b)
        total += _tail_integral(
            lambda u: lo(math.exp(-u)) * math.exp(-u), -math.log(s0), moment
        )
        start = s0
    if b == 1.0:
        s1 = min(_TAIL_SPLIT, 0.25 * (1.0 - start))
        total += _tail_integral(
            lambda u: hi(math.exp(-u)) * math.exp(-u), -math.log(s1), moment
        )
        stop = 1.0 - s1
    if stop > start:
        inner = sorted(p for p in points if start < p < stop)
        val = _quad(mid, start, stop, points=inner or None)
        if not math.isfinite(val):
            raise DivergenceError(moment, "integrand is not finite")
        total += val
    if not math.isfinite(total) or abs(total) > OVERFLOW_GUARD:
        raise DivergenceError(moment, "exceeds the overflow guard")
    return total


def _as_float_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


class Distribution:
    """A probability law on the real line.  Instances are immutable."""

    is_discrete = False

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, t):
        """Upper quantile ``inf{y : F(y) > t}`` for ``0 <= t < 1``."""
        arr = np.asarray(t, dtype=float)
        if np.any(~(arr >= 0.0)) or np.any(arr >= 1.0):
            raise DomainError("quantile level must lie in [0, 1)")
        return _as_float_or_array(self._quantile(arr))

    def _quantile(self, t):
        raise NotImplementedError

    def sample(self, n, seed):
        """``n`` i.i.d. draws by inverse cdf on a PCG64 uniform stream."""
        if n < 1:
            raise DomainError("sample size must be at least 1")
        u = np.random.default_rng(seed).random(int(n)) + _HALF_ULP
        return np.asarray(self._quantile(u), dtype=float)

    def expect(self, f, points=(), moment="expectation"):
        raise NotImplementedError

    def mean(self):
        return self.expect(lambda x: x)


class Discrete(Distribution):
    """Finitely many atoms, sorted strictly increasing, with positive weights."""

    is_discrete = True

    def __init__(self, atoms, weights=None):
        x = np.asarray(atoms, dtype=float).ravel()
        if x.size == 0:
            raise DomainError("a discrete law needs at least one atom")
        if not np.all(np.isfinite(x)):
            raise DomainError("atoms must be finite")
        if weights is None:
            w = np.full(x.size, 1.0 / x.size)
        else:
            w = np.asarray(weights, dtype=float).ravel()
            if w.shape != x.shape:
                raise DomainError("atoms and weights differ in length")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise DomainError("weights must be finite and nonnegative")
            tol = WEIGHT_TOL + x.size * np.finfo(float).eps
            if abs(w.sum() - 1.0) > tol:
                raise DomainError(f"weights sum to {w.sum()!r}, not 1")
        uniq, inv = np.unique(x, return_inverse=True)
        merged = np.bincount(inv.ravel(), weights=w, minlength=uniq.size)
        keep = merged > 0
        self._set(uniq[keep], merged[keep])

    @classmethod
    def _from_sorted(cls, atoms, weights):
        obj = cls.__new__(cls)
        obj._set(np.asarray(atoms, dtype=float), np.asarray(weights, dtype=float))
        return obj

    def _set(self, atoms, weights):
        weights = weights / weights.sum()
        cum = np.cumsum(weights)
        cum[-1] = 1.0
        for arr in (atoms, weights, cum):
            arr.setflags(write=False)
        self.atoms = atoms
        self.weights = weights
        self._cum = cum

    def __len__(self):
        return self.atoms.size

    def __repr__(self):
        if self.atoms.size <= 6:
            return f"Discrete(atoms={self.atoms.tolist()}, weights={self.weights.tolist()})"
        return f"Discrete(<{self.atoms.size} atoms in [{self.atoms[0]:g}, {self.atoms[-1]:g}]>)"

    def __eq__(self, other):
        return (
            isinstance(other, Discrete)
            and self.atoms.shape == other.atoms.shape
            and np.array_equal(self.atoms, other.atoms)
            and np.allclose(self.weights, other.weights, rtol=0, atol=WEIGHT_TOL)
        )

    __hash__ = None

    @property
    def cumulative_weights(self):
        return self._cum

    def cdf(self, x):
        idx = np.searchsorted(self.atoms, np.asarray(x, dtype=float), side="right")
        cum = np.concatenate(([0.0], self._cum))
        return _as_float_or_array(cum[idx])

    def _quantile(self, t):
        idx = np.searchsorted(self._cum, t, side="right")
        return self.atoms[np.minimum(idx, self.atoms.size - 1)]

    def expect(self, f, points=(), moment="expectation"):
        with np.errstate(all="ignore"):
            vals = np.asarray(f(self.atoms), dtype=float)
            if vals.shape != self.atoms.shape:
                vals = np.array([f(x) for x in self.atoms], dtype=float)
            total = float(np.dot(self.weights, vals))
        if not math.isfinite(total):
            raise DivergenceError(moment, "integrand overflows at an atom")
        return total

    def affine(self, loc=0.0, scale=1.0):
        """Law of ``loc + scale * X``."""
        return Discrete(loc + scale * self.atoms, self.weights)

    def to_dict(self):
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}


class EmpiricalMeasure(Discrete):
    """Empirical law of a sample; ``n`` is the sample size."""

    def __init__(self, xs):
        x = np.asarray(xs, dtype=float).ravel()
        if x.size == 0:
            raise DomainError("cannot build an empirical law from an empty sample")
        if not np.all(np.isfinite(x)):
            raise DomainError("sample values must be finite")
        uniq, counts = np.unique(x, return_counts=True)
        self._set(uniq, counts / x.size)
        self.n = x.size


def empirical_from_sample(xs):
    """Empirical law of ``xs``; a k-fold value gets weight k/n."""
    return EmpiricalMeasure(xs)


class Parametric(Distribution):
    """A law given by cdf and quantile function.

    Subclasses provide ``cdf``, ``logcdf``, ``logsf``, ``ppf_lo`` and
    ``ppf_hi``, where ``ppf_lo(s) = q(s)`` and ``ppf_hi(s) = q(1 - s)`` are
    accurate for tiny ``s``.
    """

    lower = -math.inf
    upper = math.inf

    def sf(self, x):
        return np.exp(self.logsf(x))

    def logcdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.cdf(x))

    def logsf(self, x):
        with np.errstate(divide="ignore"):
            return np.log1p(-np.asarray(self.cdf(x)))

    def ppf_lo(self, s):
        raise NotImplementedError

    def ppf_hi(self, s):
        raise NotImplementedError

    def _quantile(self, t):
        t = np.asarray(t, dtype=float)
        low = t <= 0.5
        out = np.empty_like(t)
        with np.errstate(divide="ignore"):
            out[low] = self.ppf_lo(t[low])
            out[~low] = self.ppf_hi(1.0 - t[~low])
        return out

    def quantile_integral(self, h, a=0.0, b=1.0, points=(), moment="integral"):
        """``int_a^b h(t, q(t)) dt`` with tail-aware quadrature."""
        return _integrate_unit(
            lambda t: h(t, float(self._quantile(np.array([t]))[0])),
            lambda s: h(s, float(self.ppf_lo(s))),
            lambda s: h(1.0 - s, float(self.ppf_hi(s))),
            a,
            b,
            points,
            moment,
        )

    def expect(self, f, points=(), moment="expectation"):
        pts = tuple(float(self.cdf(p)) for p in points)
        return self.quantile_integral(lambda t, x: f(x), points=pts, moment=moment)

    def _support_points(self):
        return ()


def _bisect_increasing(fn, target, lo, hi, iters=200):
    """Vectorized bisection for ``fn(y) = target`` with ``fn`` nondecreasing."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        done = (mid <= lo) | (mid >= hi)
        if np.all(done):
            break
        below = fn(mid) < target
        lo = np.where(below & ~done, mid, lo)
        hi = np.where(~below & ~done, mid, hi)
    return hi


@dataclass(frozen=True, repr=False)
class Normal(Parametric):
    m: float = 0.0
    s: float = 1.0

    def __post_init__(self):
        if not self.s > 0:
            raise DomainError("Normal scale must be positive")

    def __repr__(self):
        return f"Normal({self.m:g}, {self.s:g})"

    def cdf(self, x):
        return _as_float_or_array(special.ndtr((np.asarray(x, dtype=float) - self.m) / self.s))

    def logcdf(self, x):
        return special.log_ndtr((np.asarray(x, dtype=float) - self.m) / self.s)

    def logsf(self, x):
        return special.log_ndtr(-(np.asarray(x, dtype=float) - self.m) / self.s)

    def ppf_lo(self, s):
        return self.m + self.s * special.ndtri(s)

    def ppf_hi(self, s):
        return self.m - self.s * special.ndtri(s)


@dataclass(frozen=True, repr=False)
class Uniform(Parametric):
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not self.b > self.a:
            raise DomainError("Uniform needs a < b")
        object.__setattr__(self, "lower", self.a)
        object.__setattr__(self, "upper", self.b)

    def __repr__(self):
        return f"Uniform({self.a:g}, {self.b:g})"

    def cdf(self, x):
        return _as_float_or_array(np.clip((np.asarray(x, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0))

    def logsf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(np.clip((self.b - np.asarray(x, dtype=float)) / (self.b - self.a), 0.0, 1.0))

    def ppf_lo(self, s):
        return self.a + (self.b - self.a) * np.asarray(s, dtype=float)

    def ppf_hi(self, s):
        return self.b - (self.b - self.a) * np.asarray(s, dtype=float)


@dataclass(frozen=True, repr=False)
class Pareto(Parametric):
    """``P(Y > y) = (scale / y)**shape`` for ``y >= scale``."""

    shape: float = 2.0
    scale: float = 1.0

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise DomainError("Pareto shape and scale must be positive")
        object.__setattr__(self, "lower", self.scale)

    def __repr__(self):
        return f"Pareto(shape={self.shape:g}, scale={self.scale:g})"

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x >= self.scale, -np.expm1(self.shape * np.log(self.scale / np.maximum(x, self.scale))), 0.0)
        return _as_float_or_array(out)

    def logsf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= self.scale, self.shape * np.log(self.scale / np.maximum(x, self.scale)), 0.0)

    def ppf_lo(self, s):
        return self.scale * np.exp(-np.log1p(-np.asarray(s, dtype=float)) / self.shape)

    def ppf_hi(self, s):
        with np.errstate(divide="ignore"):
            return self.scale * np.asarray(s, dtype=float) ** (-1.0 / self.shape)


@dataclass(frozen=True, repr=False)
class Lognormal(Parametric):
    """``exp(N(m, s**2))``."""

    m: float = 0.0
    s: float = 1.0

    def __post_init__(self):
        if not self.s > 0:
            raise DomainError("Lognormal scale must be positive")
        object.__setattr__(self, "lower", 0.0)

    def __repr__(self):
        return f"Lognormal({self.m:g}, {self.s:g})"

    def _z(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, (np.log(np.maximum(x, 1e-300)) - self.m) / self.s, -np.inf)

    def cdf(self, x):
        return _as_float_or_array(special.ndtr(self._z(x)))

    def logcdf(self, x):
        return special.log_ndtr(self._z(x))

    def logsf(self, x):
        return special.log_ndtr(-self._z(x))

    def ppf_lo(self, s):
        return np.exp(self.m + self.s * special.ndtri(s))

    def ppf_hi(self, s):
        return np.exp(self.m - self.s * special.ndtri(s))


_GL_X, _GL_W = np.polynomial.laguerre.laggauss(60)


def _exptail_j(y):
    """``J(y) = int_0^oo exp(-v) / (1 + (y + v)**2) dv``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.empty_like(y)
    small = y < 20.0
    if np.any(small):
        z = y[small] - 1j
        out[small] = (np.exp(z) * special.exp1(z)).imag
    if np.any(~small):
        out[~small] = (_GL_W / (1.0 + (y[~small, None] + _GL_X) ** 2)).sum(axis=-1)
    return out


_EXPTAIL_Z = float(_exptail_j(0.0)[0])


@dataclass(frozen=True, repr=False)
class ExpTail(Parametric):
    """Density proportional to ``exp(-y) / (1 + y**2)`` on ``[0, oo)``.

    ``E[exp(Y) - 1]`` is finite while ``E[exp(2Y) - 1]`` is not.
    """

    lower = 0.0

    def __repr__(self):
        return "ExpTail()"

    @staticmethod
    def normalizer():
        return _EXPTAIL_Z

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(over="ignore"):
            return np.where(y >= 0, np.exp(-y) / ((1.0 + y * y) * _EXPTAIL_Z), 0.0)

    def logsf(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.maximum(x, 0.0)
        val = np.log(_exptail_j(xc)).reshape(xc.shape) - xc - math.log(_EXPTAIL_Z)
        return np.where(x > 0, np.minimum(val, 0.0), 0.0)

    def cdf(self, x):
        return _as_float_or_array(-np.expm1(self.logsf(x)))

    def ppf_hi(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            target = -np.log(s)
        out = _bisect_increasing(
            lambda y: -self.logsf(y), target, np.zeros_like(s), np.full_like(s, 800.0)
        )
        return np.where(s >= 1.0, 0.0, out)

    def ppf_lo(self, s):
        s = np.asarray(s, dtype=float)
        tiny = s < 1e-8
        # F(y) = (y - y**2 / 2) / Z + O(y**3) near 0
        zs = _EXPTAIL_Z * s
        approx = zs + 0.5 * zs * zs
        hi = np.maximum(self.ppf_hi(np.full_like(s, 0.5)), 1.0) * np.ones_like(s)
        hi = np.where(s > 0.5, self.ppf_hi(np.maximum(1.0 - s, 1e-300)), hi) + 1.0
        out = _bisect_increasing(self.cdf, s, np.zeros_like(s), hi)
        return np.where(tiny, approx, out)

    def expect(self, f, points=(), moment="expectation"):
        # density form: the tail is exponential in y
        h = lambda y: f(y) * float(self.pdf(y))
        body = _quad(h, 0.0, 10.0, points=[p for p in points if 0 < p < 10] or None)
        if not math.isfinite(body):
            raise DivergenceError(moment, "integrand is not finite")
        total = body + _tail_integral(h, 10.0, moment)
        if abs(total) > OVERFLOW_GUARD:
            raise DivergenceError(moment, "exceeds the overflow guard")
        return total


@dataclass(frozen=True, repr=False)
class Affine(Parametric):
    """Law of ``loc + scale * Y`` for a parametric ``Y``."""

    base: Parametric
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.scale == 0 or not math.isfinite(self.scale):
            raise DomainError("affine scale must be finite and nonzero")
        ends = sorted((self.loc + self.scale * self.base.lower, self.loc + self.scale * self.base.upper))
        object.__setattr__(self, "lower", ends[0])
        object.__setattr__(self, "upper", ends[1])

    def __repr__(self):
        return f"Affine({self.base!r}, loc={self.loc:g}, scale={self.scale:g})"

    def _y(self, x):
        return (np.asarray(x, dtype=float) - self.loc) / self.scale

    def cdf(self, x):
        if self.scale > 0:
            return self.base.cdf(self._y(x))
        return _as_float_or_array(np.exp(self.base.logsf(self._y(x))))

    def logcdf(self, x):
        return self.base.logcdf(self._y(x)) if self.scale > 0 else self.base.logsf(self._y(x))

    def logsf(self, x):
        return self.base.logsf(self._y(x)) if self.scale > 0 else self.base.logcdf(self._y(x))

    def ppf_lo(self, s):
        inner = self.base.ppf_lo(s) if self.scale > 0 else self.base.ppf_hi(s)
        return self.loc + self.scale * inner

    def ppf_hi(self, s):
        inner = self.base.ppf_hi(s) if self.scale > 0 else self.base.ppf_lo(s)
        return self.loc + self.scale * inner

    def expect(self, f, points=(), moment="expectation"):
        pts = tuple((p - self.loc) / self.scale for p in points)
        return self.base.expect(lambda y: f(self.loc + self.scale * y), points=pts, moment=moment)


@dataclass(frozen=True, repr=False)
class Mixture(Parametric):
    """Finite mixture of parametric laws.

    Sampling is by composition: a single uniform picks the component and is
    then rescaled into that component's inverse cdf.
    """

    components: tuple
    weights: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        w = np.asarray(self.weights, dtype=float)
        if len(comps) == 0 or len(comps) != w.size:
            raise DomainError("mixture needs matching components and weights")
        if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL * 10:
            raise DomainError("mixture weights must be nonnegative and sum to 1")
        if not all(isinstance(c, Parametric) for c in comps):
            raise DomainError("mixture components must be parametric")
        keep = [(c, float(x)) for c, x in zip(comps, w) if x > 0]
        object.__setattr__(self, "components", tuple(c for c, _ in keep))
        object.__setattr__(self, "weights", tuple(x for _, x in keep))
        object.__setattr__(self, "lower", min(c.lower for c in self.components))
        object.__setattr__(self, "upper", max(c.upper for c in self.components))

    def __repr__(self):
        parts = ", ".join(f"{w:g}*{c!r}" for c, w in zip(self.components, self.weights))
        return f"Mixture({parts})"

    def cdf(self, x):
        return _as_float_or_array(sum(w * np.asarray(c.cdf(x)) for c, w in zip(self.components, self.weights)))

    def _logsum(self, parts):
        stacked = np.stack([np.log(w) + np.asarray(p, dtype=float) for p, w in zip(parts, self.weights)])
        return special.logsumexp(stacked, axis=0)

    def logcdf(self, x):
        return self._logsum([c.logcdf(x) for c in self.components])

    def logsf(self, x):
        return self._logsum([c.logsf(x) for c in self.components])

    def _invert(self, s, side):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if len(self.components) == 1:
            c = self.components[0]
            return c.ppf_lo(s) if side == "lo" else c.ppf_hi(s)
        qs = np.stack([np.asarray(c.ppf_lo(s) if side == "lo" else c.ppf_hi(s), dtype=float) for c in self.components])
        lo, hi = qs.min(axis=0), qs.max(axis=0)
        with np.errstate(divide="ignore"):
            logs = np.log(s)
        if side == "lo":
            return _bisect_increasing(self.logcdf, logs, lo, hi)
        # logsf is nonincreasing, so bisect on its negative
        return _bisect_increasing(lambda y: -self.logsf(y), -logs, lo, hi)

    def ppf_lo(self, s):
        return self._invert(s, "lo")

    def ppf_hi(self, s):
        return self._invert(s, "hi")

    def sample(self, n, seed):
        if n < 1:
            raise DomainError("sample size must be at least 1")
        u = np.random.default_rng(seed).random(int(n)) + _HALF_ULP
        cum = np.cumsum(self.weights)
        cum[-1] = 1.0
        idx = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
        start = np.concatenate(([0.0], cum[:-1]))
        out = np.empty(u.size)
        for k, comp in enumerate(self.components):
            sel = idx == k
            if np.any(sel):
                v = np.clip((u[sel] - start[k]) / self.weights[k], _HALF_ULP, 1.0 - _HALF_ULP)
                out[sel] = comp._quantile(v)
        return out

    def expect(self, f, points=(), moment="expectation"):
        return sum(w * c.expect(f, points=points, moment=moment) for c, w in zip(self.components, self.weights))


def point_mass(c):
    return Discrete([c])


# module-level operations -----------------------------------------------------


def cdf(d, x):
    return d.cdf(x)


def quantile(d, t):
    return d.quantile(t)


def sample(d, n, seed):
    return d.sample(n, seed)


def expect(d, f):
    return d.expect(f)


def tail_weight(d, psi, M):
    """``int psi 1{psi >= M} d(nu)``."""
    if not M > 0:
        raise DomainError("tail level M must be positive")
    if isinstance(d, Discrete):
        vals = np.asarray(psi(d.atoms), dtype=float)
        return float(np.dot(d.weights, np.where(vals >= M, vals, 0.0)))
    r = psi.level(M)
    if r == math.inf:
        return 0.0
    if r <= 0.0:
        return d.expect(psi, moment="psi-moment")
    total = 0.0
    t_neg = float(d.cdf(-r))
    if t_neg > 0:
        total += _integrate_unit(
            lambda t: psi(float(d.quantile(t))),
            lambda s: psi(float(d.ppf_lo(s))),
            None,
            0.0,
            t_neg,
            moment="psi tail",
        )
    s_pos = float(np.exp(d.logsf(r)))
    if s_pos > 0:
        total += _integrate_unit(
            lambda s: psi(float(d.ppf_hi(s))),
            lambda s: psi(float(d.ppf_hi(s))),
            None,
            0.0,
            min(s_pos, 1.0 - 1e-15),
            moment="psi tail",
        )
    return total


def discretize(d, n_nodes=1000):
    """Equal-weight law on the mid-quantiles ``q((k - 1/2) / N)``."""
    if isinstance(d, Discrete):
        return d
    t = (np.arange(n_nodes) + 0.5) / n_nodes
    return Discrete(d.quantile(t))


def as_discrete(d):
    if not isinstance(d, Discrete):
        raise DomainError(f"{d!r} is not discrete; discretize it first")
    return d


# serialization ----------------------------------------------------------------


def measure_to_json(d):
    return json.dumps(d.to_dict())


def measure_from_json(text):
    obj = json.loads(text)
    if not isinstance(obj, dict) or "atoms" not in obj:
        raise DomainError("expected a JSON object with 'atoms' (and optional 'weights')")
    return Discrete(obj["atoms"], obj.get("weights"))


def measure_to_csv(d):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "weight"])
    for x, p in zip(d.atoms, d.weights):
        w.writerow([repr(float(x)), repr(float(p))])
    return buf.getvalue()


def measure_from_csv(text):
    """Read ``value[,weight]`` rows; without weights the rows are a raw sample."""
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DomainError("empty CSV")
    header = [c.strip().lower() for c in rows[0]]
    if "value" in header:
        body = rows[1:]
        vi = header.index("value")
        wi = header.index("weight") if "weight" in header else None
    else:
        body, vi, wi = rows, 0, (1 if len(rows[0]) > 1 else None)
    try:
        values = [float(r[vi]) for r in body]
        if wi is None:
            return empirical_from_sample(values)
        weights = [float(r[wi]) for r in body]
    except (ValueError, IndexError) as exc:
        raise DomainError(f"malformed CSV measure: {exc}") from None
    return Discrete(values, weights)


def load_measure(path):
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        return measure_from_json(text)
    return measure_from_csv(text)
