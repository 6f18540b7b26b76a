"""Distances between laws on the line: Levy, Prohorov, Wasserstein, d_psi."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .distributions import Discrete, Distribution, _integrate_unit, as_discrete, discretize
from .errors import DivergenceError, DomainError

LEVY_TOL = 1e-9
PROHOROV_TOL = 1e-10
MASS_TOL = 1e-15
BRUTEFORCE_MAX_ATOMS = 14


def _step_cdf(d, x):
    """``F(x)`` for an array ``x``; zero-padded cumulative weights."""
    cum = np.concatenate(([0.0], d.cumulative_weights))
    return cum[np.searchsorted(d.atoms, x, side="right")]


def _levy_ok(mu, nu, eps):
    """Whether ``F_mu(x - eps) - eps <= F_nu(x) <= F_mu(x + eps) + eps`` for all x."""
    a, b = mu.atoms, nu.atoms
    Fa, Fb = mu.cumulative_weights, nu.cumulative_weights
    slack = 1e-13
    # lower band: F_nu(x) - F_mu(x - eps) >= -eps, checked where either side jumps
    if np.any(_step_cdf(nu, a + eps) - Fa < -eps - slack):
        return False
    if np.any(Fb - _step_cdf(mu, b - eps) < -eps - slack):
        return False
    # upper band: F_mu(x + eps) - F_nu(x) >= -eps
    if np.any(Fa - _step_cdf(nu, a - eps) < -eps - slack):
        return False
    if np.any(_step_cdf(mu, b + eps) - Fb < -eps - slack):
        return False
    return True


def levy(mu: Distribution, nu: Distribution, tol=LEVY_TOL) -> float:
    """Levy distance between two discrete laws, by bisection on eps."""
    mu, nu = as_discrete(mu), as_discrete(nu)
    if _levy_ok(mu, nu, 0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _levy_ok(mu, nu, mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class CouplingCertificate:
    """Sparse coupling ``pi(i, j) = mass`` between the atoms of two laws."""

    i: np.ndarray
    j: np.ndarray
    mass: np.ndarray
    eps: float

    def off_diagonal_mass(self, mu, nu):
        far = np.abs(mu.atoms[self.i] - nu.atoms[self.j]) > self.eps
        return float(self.mass[far].sum())

    def marginal_error(self, mu, nu):
        rows = np.bincount(self.i, weights=self.mass, minlength=len(mu))
        cols = np.bincount(self.j, weights=self.mass, minlength=len(nu))
        return float(max(np.max(np.abs(rows - mu.weights)), np.max(np.abs(cols - nu.weights))))

    def verify(self, mu, nu, tol=1e-10):
        return (
            bool(np.all(self.mass >= 0))
            and self.marginal_error(mu, nu) <= tol
            and self.off_diagonal_mass(mu, nu) <= self.eps + tol
        )

    def rows(self, mu, nu):
        """``(i, j, x_i, y_j, mass)`` tuples."""
        return [
            (int(a), int(b), float(mu.atoms[a]), float(nu.atoms[b]), float(m))
            for a, b, m in zip(self.i, self.j, self.mass)
        ]


@dataclass(frozen=True)
class ProhorovResult:
    value: float
    witness: CouplingCertificate


def _close_flow(mu, nu, eps):
    """Maximum mass movable along edges ``|x_i - y_j| <= eps``.

    Both atom sets are sorted, so each ``x_i`` sees a window of ``y``s whose
    ends move right with ``i``.  Serving each ``x_i`` from the leftmost
    unused ``y`` in its window is then optimal.
    """
    x, y = mu.atoms, nu.atoms
    cap = nu.weights.copy()
    flows = []
    total = 0.0
    j = 0
    m = y.size
    for i in range(x.size):
        need = mu.weights[i]
        while j < m and (x[i] - y[j] > eps or cap[j] <= MASS_TOL):
            j += 1
        k = j
        while need > MASS_TOL and k < m and y[k] - x[i] <= eps:
            if cap[k] > MASS_TOL:
                t = min(need, cap[k])
                flows.append((i, k, t))
                need -= t
                cap[k] -= t
                total += t
            k += 1
    return total, flows


def close_flow_value(mu, nu, eps):
    """Value of the close-pair flow; exposed for cross-checking."""
    return _close_flow(as_discrete(mu), as_discrete(nu), eps)[0]


def _coupling(mu, nu, eps):
    total, flows = _close_flow(mu, nu, eps)
    rest_mu = mu.weights.copy()
    rest_nu = nu.weights.copy()
    for i, j, t in flows:
        rest_mu[i] -= t
        rest_nu[j] -= t
    rest_mu = np.maximum(rest_mu, 0.0)
    rest_nu = np.maximum(rest_nu, 0.0)
    # the leftover mass is coupled in northwest-corner order
    a = b = 0
    extra = []
    while a < rest_mu.size and b < rest_nu.size:
        if rest_mu[a] <= MASS_TOL:
            a += 1
            continue
        if rest_nu[b] <= MASS_TOL:
            b += 1
            continue
        t = min(rest_mu[a], rest_nu[b])
        extra.append((a, b, t))
        rest_mu[a] -= t
        rest_nu[b] -= t
    entries = flows + extra
    if not entries:
        entries = [(0, 0, 0.0)]
    i, j, mass = (np.array(v) for v in zip(*entries))
    return CouplingCertificate(i.astype(int), j.astype(int), mass.astype(float), float(eps))


def _feasible(mu, nu, eps):
    return _close_flow(mu, nu, eps)[0] >= 1.0 - eps - 1e-13


def prohorov(mu: Distribution, nu: Distribution) -> ProhorovResult:
    """Prohorov distance with a coupling witness.

    Bisection on eps with a max-flow feasibility test, then a snap onto the
    exact kink: either a pairwise atom distance or ``1 - flow``.
    """
    mu, nu = as_discrete(mu), as_discrete(nu)
    if len(mu) + len(nu) > 10_000:
        raise DomainError("prohorov supports at most 1e4 atoms combined")
    if _feasible(mu, nu, 0.0):
        return ProhorovResult(0.0, _coupling(mu, nu, 0.0))
    lo, hi = 0.0, 1.0
    while hi - lo > PROHOROV_TOL:
        mid = 0.5 * (lo + hi)
        if _feasible(mu, nu, mid):
            hi = mid
        else:
            lo = mid
    candidates = [hi, 1.0 - _close_flow(mu, nu, hi)[0]]
    dist = np.abs(mu.atoms[:, None] - nu.atoms[None, :]).ravel() if len(mu) * len(nu) <= 4_000_000 else np.array([])
    candidates.extend(dist[(dist > lo) & (dist <= hi)].tolist())
    value = hi
    for c in sorted(set(candidates)):
        if lo < c <= hi and _feasible(mu, nu, c):
            value = c
            break
    return ProhorovResult(float(value), _coupling(mu, nu, value))


def prohorov_bruteforce(mu: Distribution, nu: Distribution) -> float:
    """Prohorov distance by enumerating every subset of ``mu``'s support."""
    mu, nu = as_discrete(mu), as_discrete(nu)
    if len(mu) + len(nu) > BRUTEFORCE_MAX_ATOMS:
        raise DomainError(f"brute force supports at most {BRUTEFORCE_MAX_ATOMS} atoms combined")
    gaps = np.abs(mu.atoms[:, None] - nu.atoms[None, :])
    levels = np.unique(np.concatenate(([0.0], gaps.ravel())))
    best = 1.0
    for d in levels:
        if d >= best:
            break
        close = gaps <= d
        worst = 0.0
        for r in range(1, len(mu) + 1):
            for subset in itertools.combinations(range(len(mu)), r):
                idx = list(subset)
                reach = close[idx].any(axis=0)
                worst = max(worst, mu.weights[idx].sum() - nu.weights[reach].sum())
        best = min(best, max(float(d), worst))
    return best


def _quantile_triplet(d):
    if isinstance(d, Discrete):
        q = lambda t: float(d.quantile(min(t, np.nextafter(1.0, 0.0))))
        return q, q, lambda s: q(1.0 - s), tuple(d.cumulative_weights[:-1])
    return (
        lambda t: float(d.quantile(t)),
        lambda s: float(d.ppf_lo(s)),
        lambda s: float(d.ppf_hi(s)),
        (),
    )


def wasserstein(mu: Distribution, nu: Distribution, p: float = 1.0) -> float:
    """``(int_0^1 |q_mu - q_nu|^p dt)^(1/p)``."""
    if not p >= 1:
        raise DomainError("Wasserstein order must be >= 1")
    if isinstance(mu, Discrete) and isinstance(nu, Discrete):
        t = np.union1d(mu.cumulative_weights, nu.cumulative_weights)
        t = t[t <= 1.0]
        left = np.concatenate(([0.0], t[:-1]))
        width = t - left
        keep = width > 0
        left, width = left[keep], width[keep]
        diff = np.abs(mu.quantile(left) - nu.quantile(left))
        total = float(np.dot(width, diff**p))
    else:
        mq, mlo, mhi, mpts = _quantile_triplet(mu)
        nq, nlo, nhi, npts = _quantile_triplet(nu)
        total = _integrate_unit(
            lambda t: abs(mq(t) - nq(t)) ** p,
            lambda s: abs(mlo(s) - nlo(s)) ** p,
            lambda s: abs(mhi(s) - nhi(s)) ** p,
            points=mpts + npts,
            moment=f"Wasserstein-{p:g} integral",
        )
    return total ** (1.0 / p)


def psi_moment(d, psi):
    return d.expect(psi, moment="psi-moment")


def psi_metric(mu, nu, psi, use_levy=False, n_nodes=None) -> float:
    """``d(mu, nu) + |int psi dmu - int psi dnu|`` with ``d`` Prohorov or Levy.

    Parametric inputs need ``n_nodes``: the distance part then uses the
    mid-quantile discretization while the moment gap stays exact.
    """
    gap = abs(psi_moment(mu, psi) - psi_moment(nu, psi))
    if n_nodes is not None:
        mu_d, nu_d = discretize(mu, n_nodes), discretize(nu, n_nodes)
    else:
        mu_d, nu_d = as_discrete(mu), as_discrete(nu)
    base = levy(mu_d, nu_d) if use_levy else prohorov(mu_d, nu_d).value
    return base + gap


def psi_weak_converged(laws, limit, psi, tol=1e-2, tail=1) -> bool:
    """Levy distance and psi-moment gap both below ``tol`` on the last ``tail`` laws."""
    laws = list(laws)
    if not laws:
        raise DomainError("need at least one law")
    target = psi_moment(limit, psi)
    for d in laws[-tail:]:
        if levy(d, limit) >= tol:
            return False
        if abs(psi_moment(d, psi) - target) >= tol:
            return False
    return True
