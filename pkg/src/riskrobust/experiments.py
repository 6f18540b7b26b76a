"""Monte Carlo harness: consistency, robustness, coupling and counterexamples.

Seeding: replication ``k`` of an experiment seeded with ``seed`` draws from
``numpy.random.default_rng([seed, k])``, i.e. a PCG64 stream keyed by
NumPy's SeedSequence hash of the pair.  Results never depend on execution
order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, signal

from .distributions import (
    Affine,
    Discrete,
    Distribution,
    EmpiricalMeasure,
    ExpTail,
    Mixture,
    Normal,
    Parametric,
    Pareto,
    _HALF_ULP,
    discretize,
)
from .errors import DivergenceError, DomainError, RiskRobustError
from .metrics import _close_flow, prohorov, psi_moment, psi_weak_converged
from .orlicz import Exponential, YoungFunction, YoungWeight, luxemburg_norm
from .reports import ExperimentReport
from .risk_measures import RiskMeasure, plug_in_estimate, risk_functional

DEFAULT_BURN_IN = 1000
GARCH_REFERENCE_LENGTH = 1_000_000
# stream key of the long reference path; SeedSequence rejects negative keys
REFERENCE_STREAM = 2**32


def replication_seed(seed, k):
    """Seed material for replication ``k``."""
    base = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return base + [int(k)]


# processes -------------------------------------------------------------------------


@dataclass(frozen=True)
class IID:
    law: Distribution
    burn_in: int = 0

    def stationary_law(self):
        return self.law

    @property
    def spec(self):
        return f"iid:{self.law!r}"


@dataclass(frozen=True)
class AR1:
    """``X_t = phi X_{t-1} + sigma eps_t`` with Gaussian innovations."""

    phi: float
    sigma: float = 1.0
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        if not -1.0 < self.phi < 1.0:
            raise DomainError("AR1 needs |phi| < 1")
        if not self.sigma > 0:
            raise DomainError("AR1 needs sigma > 0")

    def stationary_law(self):
        return Normal(0.0, self.sigma / math.sqrt(1.0 - self.phi**2))

    @property
    def spec(self):
        return f"ar1:phi={self.phi:g},s={self.sigma:g}"


@dataclass(frozen=True)
class GARCH11:
    """``s_t^2 = omega + alpha X_{t-1}^2 + beta s_{t-1}^2``, ``X_t = s_t eps_t``."""

    omega: float
    alpha: float
    beta: float
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        if not self.omega > 0 or self.alpha < 0 or self.beta < 0 or not self.alpha + self.beta < 1:
            raise DomainError("GARCH(1,1) needs omega > 0, alpha, beta >= 0 and alpha + beta < 1")

    def stationary_law(self):
        return None

    @property
    def stationary_variance(self):
        return self.omega / (1.0 - self.alpha - self.beta)

    @property
    def spec(self):
        return f"garch11:w={self.omega:g},a={self.alpha:g},b={self.beta:g}"


def simulate_path(p, n, seed):
    """Length-``n`` path after burn-in; deterministic per seed."""
    if n < 1:
        raise DomainError("path length must be at least 1")
    if isinstance(p, IID):
        return p.law.sample(n, seed)
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(n + p.burn_in)
    if isinstance(p, AR1):
        x = signal.lfilter([p.sigma], [1.0, -p.phi], eps)
        return x[p.burn_in:]
    if isinstance(p, GARCH11):
        x = np.empty_like(eps)
        var = p.stationary_variance
        prev = 0.0
        w, a, b = p.omega, p.alpha, p.beta
        for t in range(eps.size):
            var = w + a * prev * prev + b * var
            prev = math.sqrt(var) * eps[t]
            x[t] = prev
        return x[p.burn_in:]
    raise DomainError(f"unknown process {p!r}")


# consistency -----------------------------------------------------------------------


def reference_value(rho, p, seed=0, n_ref=GARCH_REFERENCE_LENGTH):
    """``(value, source)``: exact on the stationary law when known."""
    law = p.stationary_law()
    if law is not None:
        return risk_functional(rho, law), "stationary-law"
    path = simulate_path(p, n_ref, replication_seed(seed, REFERENCE_STREAM))
    return plug_in_estimate(rho, path), f"long-run-estimate:n_ref={n_ref}"


def consistency_run(rho: RiskMeasure, p, n_grid, reps, seed, n_ref=GARCH_REFERENCE_LENGTH):
    """Plug-in errors ``|rho_hat_n - rho|`` over ``reps`` paths per ``n``."""
    if reps < 1:
        raise DomainError("need at least one replication")
    ref, source = reference_value(rho, p, seed, n_ref)
    rep = ExperimentReport(
        ["n", "reference", "median_estimate", "median_error", "q25_error", "q75_error", "q90_error", "reps", "seed"],
        metadata={"experiment": "consistency", "risk": rho.spec, "process": p.spec, "reference_source": source, "reps": reps, "seed": seed},
    )
    for n in n_grid:
        est = np.array([plug_in_estimate(rho, simulate_path(p, int(n), replication_seed(seed, k))) for k in range(reps)])
        err = np.abs(est - ref)
        q25, q50, q75, q90 = np.quantile(err, [0.25, 0.5, 0.75, 0.9])
        rep.add(int(n), ref, float(np.median(est)), float(q50), float(q25), float(q75), float(q90), reps, seed)
    return rep


# estimator laws --------------------------------------------------------------------


def _estimates(rhos, draw, n, M, seed):
    out = {rho: np.empty(M) for rho in rhos}
    for k in range(M):
        s = replication_seed(seed, k)
        emp = EmpiricalMeasure(draw(n, s))
        for rho in rhos:
            try:
                out[rho][k] = risk_functional(rho, emp)
            except RiskRobustError as exc:
                raise type(exc)(f"replication {k} (seed {s}): {exc}") from exc
    return out


def estimator_laws(rhos, d: Distribution, n, M, seed):
    """Estimator laws of several measures computed on shared samples."""
    if M < 100:
        raise DomainError("estimator laws need M >= 100 replications")
    vals = _estimates(list(rhos), d.sample, n, M, seed)
    return {rho: EmpiricalMeasure(v) for rho, v in vals.items()}


def estimator_law(rho: RiskMeasure, d: Distribution, n, M, seed):
    """Empirical law of ``rho_hat_n`` over ``M`` independent samples."""
    return estimator_laws([rho], d, n, M, seed)[rho]


# contamination -----------------------------------------------------------------------


class ContaminationFamily:
    """A path ``theta -> nu_theta`` with ``nu_0 = mu``.

    ``sample(theta, n, seed)`` reuses the base draw of ``mu`` with the same
    seed, so estimator laws under ``mu`` and ``nu_theta`` share random numbers.
    """

    def __init__(self, base: Distribution):
        self.base = base

    def law(self, theta):
        raise NotImplementedError

    def sample(self, theta, n, seed):
        raise NotImplementedError


class TailMix(ContaminationFamily):
    """``(1 - theta) mu + theta * law(-Y)`` with ``Y ~ Pareto(shape, scale)``."""

    def __init__(self, base, shape, scale=1.0):
        super().__init__(base)
        self.tail = Affine(Pareto(shape, scale), 0.0, -1.0)
        self.shape, self.scale = shape, scale

    def law(self, theta):
        if theta == 0:
            return self.base
        if not isinstance(self.base, Parametric):
            raise DomainError("TailMix needs a parametric base law")
        return Mixture((self.base, self.tail), (1.0 - theta, theta))

    def sample(self, theta, n, seed):
        rng = np.random.default_rng(seed)
        x = np.asarray(self.base._quantile(rng.random(n) + _HALF_ULP), dtype=float)
        if theta == 0:
            return x
        hit = rng.random(n) < theta
        v = rng.random(n) + _HALF_ULP
        x[hit] = self.tail._quantile(v[hit])
        return x

    @property
    def spec(self):
        return f"tailmix:shape={self.shape:g},scale={self.scale:g}"


class Shift(ContaminationFamily):
    def law(self, theta):
        if isinstance(self.base, Discrete):
            return self.base.affine(theta, 1.0)
        return Affine(self.base, theta, 1.0)

    def sample(self, theta, n, seed):
        return self.base.sample(n, seed) + theta

    spec = "shift"


class Scale(ContaminationFamily):
    def law(self, theta):
        if isinstance(self.base, Discrete):
            return self.base.affine(0.0, 1.0 + theta)
        return Affine(self.base, 0.0, 1.0 + theta)

    def sample(self, theta, n, seed):
        return self.base.sample(n, seed) * (1.0 + theta)

    spec = "scale"


def contaminated_estimator_laws(rhos, fam: ContaminationFamily, theta, n, M, seed):
    if M < 100:
        raise DomainError("estimator laws need M >= 100 replications")
    vals = _estimates(list(rhos), lambda m, s: fam.sample(theta, m, s), n, M, seed)
    return {rho: EmpiricalMeasure(v) for rho, v in vals.items()}


def _iqr(law):
    return float(law.quantile(0.75) - law.quantile(0.25))


def _median(law):
    return float(law.quantile(0.5))


def robustness_run(rho: RiskMeasure, fam: ContaminationFamily, psi, theta_grid, n, M, seed, n_nodes=1000):
    """Rows ``(theta, d_psi(mu, nu_theta), d_Proh(estimator laws), ...)``."""
    base_law = contaminated_estimator_laws([rho], fam, 0.0, n, M, seed)[rho]
    base_moment = psi_moment(fam.base, psi)
    base_nodes = discretize(fam.base, n_nodes)
    rep = ExperimentReport(
        ["theta", "d_psi", "d_prohorov_laws", "median", "iqr", "flag"],
        metadata={
            "experiment": "robustness",
            "risk": rho.spec,
            "family": getattr(fam, "spec", type(fam).__name__),
            "psi": getattr(psi, "spec", repr(psi)),
            "n": n,
            "M": M,
            "seed": seed,
            "noise_floor": 3.0 / math.sqrt(M),
            "discretization_nodes": n_nodes,
        },
    )
    for theta in theta_grid:
        nu = fam.law(theta)
        flag = ""
        try:
            gap = abs(psi_moment(nu, psi) - base_moment)
            d_psi = prohorov(base_nodes, discretize(nu, n_nodes)).value + gap
        except DivergenceError:
            d_psi, flag = math.nan, "outside M1psi"
        law = base_law if theta == 0 else contaminated_estimator_laws([rho], fam, theta, n, M, seed)[rho]
        rep.add(float(theta), d_psi, prohorov(base_law, law).value, _median(law), _iqr(law), flag)
    return rep


def dispersion_run(rhos, fam: ContaminationFamily, theta, n_grid, M, seed):
    """Median and interquartile range of estimator laws at ``theta`` and at 0."""
    rep = ExperimentReport(
        ["risk", "n", "theta", "median", "iqr", "median_at_0", "iqr_at_0", "iqr_ratio"],
        metadata={"experiment": "dispersion", "family": getattr(fam, "spec", ""), "M": M, "seed": seed},
    )
    for n in n_grid:
        at0 = contaminated_estimator_laws(rhos, fam, 0.0, int(n), M, seed)
        at = contaminated_estimator_laws(rhos, fam, theta, int(n), M, seed)
        for rho in rhos:
            i0, i1 = _iqr(at0[rho]), _iqr(at[rho])
            ratio = i1 / i0 if i0 > 0 else math.inf
            rep.add(rho.spec, int(n), float(theta), _median(at[rho]), i1, _median(at0[rho]), i0, ratio)
    return rep


# Skorohod coupling -------------------------------------------------------------------


def skorohod_coupling(laws, limit, psi: YoungFunction, n_nodes=10_000):
    """Luxemburg norms of ``|q_n(U) - q_0(U)|`` on a shared uniform grid."""
    t = (np.arange(n_nodes) + 0.5) / n_nodes
    q0 = np.asarray(limit.quantile(t), dtype=float)
    norms = []
    for d in laws:
        diff = np.abs(np.asarray(d.quantile(t), dtype=float) - q0)
        norms.append(luxemburg_norm(Discrete(diff), psi))
    return norms


def norms_vanish(norms, tol=1e-2):
    """Whether a norm sequence has dropped below ``tol`` at its end."""
    return bool(norms) and norms[-1] < tol


def skorohod_check(laws, limit, psi: YoungFunction, tol=1e-2):
    """``(norms vanish, psi-weak convergence)`` for ``psi = Psi(|.|)``."""
    norms = skorohod_coupling(laws, limit, psi)
    weak = psi_weak_converged(laws, limit, YoungWeight(psi), tol=tol)
    return norms_vanish(norms, tol), weak, norms


# non-Delta_2 counterexample ----------------------------------------------------------------


def _quad(f, a, b):
    val, _ = integrate.quad(f, a, b, limit=400, epsabs=0.0, epsrel=1e-11)
    return val


def _truncated_moment(psi, y, k, lo, width):
    """``E[Psi(k * ((Y - lo)^+ ^ width))]`` for ``Y`` with ExpTail law."""
    body = _quad(lambda v: float(psi.eval(k * (v - lo))) * float(y.pdf(v)), lo, lo + width)
    cap = float(psi.eval(k * width)) * float(np.exp(y.logsf(lo + width)))
    return body + cap


def _luxemburg_truncated(psi, y, lo, width):
    modular = lambda lam: _truncated_moment(psi, y, 1.0 / lam, lo, width)
    hi = 1.0
    while modular(hi) > 1.0:
        hi *= 2.0
    lo_l = hi / 2.0
    while modular(lo_l) <= 1.0:
        hi, lo_l = lo_l, lo_l / 2.0
    while hi - lo_l > 1e-10 * hi:
        mid = 0.5 * (hi + lo_l)
        if modular(mid) <= 1.0:
            hi = mid
        else:
            lo_l = mid
    return hi


def non_delta2_demo(seed=0, psi: YoungFunction = None, n_max=8, a_guard=300.0, mc_draws=100_000):
    """Truncations ``X_n = (Y - n)^+ ^ a_n`` that converge Psi-weakly to 0
    while ``E[Psi(4 X_n)] >= n``.

    ``Y`` has the ExpTail law.  ``a_n`` is the smallest level (to bisection
    accuracy) with ``2 E[Psi(2 (Y ^ a_n))] >= n + Psi(4n)``.  The column
    ``mc_E_psi_X`` re-estimates ``E[Psi(X_n)]`` from ``mc_draws`` seeded draws.
    """
    psi = Exponential() if psi is None else psi
    cols = ["n", "a_n", "E_psi_X", "E_psi_4X", "norm", "mc_E_psi_X"]
    if psi.delta2:
        return ExperimentReport(
            cols,
            metadata={"experiment": "non-delta2", "psi": psi.spec, "status": "delta2-holds: no such truncation levels exist"},
        )
    y = ExpTail()
    meta = {"experiment": "non-delta2", "psi": psi.spec, "law": "ExpTail", "seed": seed}
    try:
        meta["E_psi_Y"] = y.expect(lambda v: float(psi.eval(v)))
    except DivergenceError:
        meta["E_psi_Y"] = math.inf
    try:
        y.expect(lambda v: float(psi.eval(2.0 * v)))
        meta["E_psi_2Y"] = "finite"
    except DivergenceError:
        meta["E_psi_2Y"] = "inf"
    rep = ExperimentReport(cols, metadata=meta)
    draws = y.sample(mc_draws, seed)
    largest = 0
    for n in range(1, n_max + 1):
        target = n + float(psi.eval(4.0 * n))
        f = lambda a: 2.0 * _truncated_moment(psi, y, 2.0, 0.0, a)
        hi = 1.0
        while f(hi) < target:
            hi *= 2.0
            if hi > a_guard:
                break
        if hi > a_guard:
            meta["status"] = f"truncation-limit: a_n exceeds {a_guard:g}; largest verified n = {largest}"
            break
        lo = hi / 2.0 if hi > 1.0 else 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if f(mid) >= target:
                hi = mid
            else:
                lo = mid
        a_n = hi
        e1 = _truncated_moment(psi, y, 1.0, float(n), a_n)
        e4 = _truncated_moment(psi, y, 4.0, float(n), a_n)
        norm = _luxemburg_truncated(psi, y, float(n), a_n)
        xn = np.minimum(np.maximum(draws - n, 0.0), a_n)
        mc = float(np.mean(psi.eval(xn)))
        rep.add(n, a_n, e1, e4, norm, mc)
        largest = n
    meta.setdefault("status", f"verified n = 1..{largest}")
    return rep


# uniform Glivenko-Cantelli probe ---------------------------------------------------------


def ugc_probe(family, psi, n_grid, M, delta, seed, n_nodes=1000):
    """Estimate ``sup_nu P[d_psi(nu, m_n) >= delta]`` for each ``n``.

    Each replication needs only one flow computation: ``d_psi >= delta``
    iff the Prohorov part is at least ``delta`` minus the moment gap.
    """
    family = list(family)
    nodes = [discretize(nu, n_nodes) for nu in family]
    moments = [psi_moment(nu, psi) for nu in family]
    rep = ExperimentReport(
        ["n", "sup_probability", "argmax_member", "M", "delta"],
        metadata={"experiment": "ugc", "psi": getattr(psi, "spec", ""), "family_size": len(family), "seed": seed, "discretization_nodes": n_nodes},
    )
    for n in n_grid:
        probs = []
        for i, nu in enumerate(family):
            hits = 0
            for k in range(M):
                xs = nu.sample(int(n), replication_seed(replication_seed(seed, i), k))
                emp = EmpiricalMeasure(xs)
                gap = abs(float(np.dot(emp.weights, psi(emp.atoms))) - moments[i])
                need = delta - gap
                if need <= 0:
                    hits += 1
                    continue
                # Prohorov < need iff the flow is feasible just below need
                eps = need * (1.0 - 1e-12)
                if _close_flow(nodes[i], emp, eps)[0] < 1.0 - eps - 1e-13:
                    hits += 1
            probs.append(hits / M)
        j = int(np.argmax(probs))
        rep.add(int(n), probs[j], j, M, delta)
    return rep
