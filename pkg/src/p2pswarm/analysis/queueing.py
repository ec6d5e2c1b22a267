"""Queueing bounds and the Monte-Carlo simulators that check them.

Covers M/GI/1 busy-period moments, Kingman's moment bound for processes
with stationary independent increments and its compound-Poisson form, the
maximal bound for an M/GI/infinity queue, and an empirical one-sided
stochastic dominance test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import DivergenceError, DomainError

Sampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True)
class BusyPeriodMoments:
    EN: float
    EN2: float
    EL: float
    EL2: float
    CovNL: float
    rho: float


def busy_period_moments(lam: float, EX: float, EX2: float) -> BusyPeriodMoments:
    """Moments of customers served ``N`` and length ``L`` of an M/GI/1 busy period."""
    if EX <= 0 or EX2 < EX * EX * (1 - 1e-12):
        raise DomainError(f"need EX > 0 and EX2 >= EX**2, got EX={EX}, EX2={EX2}")
    rho = lam * EX
    if rho >= 1:
        raise DivergenceError(f"load rho = {rho} >= 1: busy period moments diverge")
    g = 1.0 - rho
    var = max(EX2 - EX * EX, 0.0)
    return BusyPeriodMoments(
        EN=1.0 / g,
        EN2=(1.0 + lam * lam * var) / g**3,
        EL=EX / g,
        EL2=EX2 / g**3,
        CovNL=lam * EX2 / g**3,
        rho=rho,
    )


def exponential_service(mean: float) -> Sampler:
    return lambda rng, size: rng.exponential(mean, size)


def deterministic_service(value: float) -> Sampler:
    return lambda rng, size: np.full(size, float(value))


def gamma_service(shape: float, rate: float) -> Sampler:
    return lambda rng, size: rng.gamma(shape, 1.0 / rate, size)


def simulate_busy_periods(lam: float, service: Sampler, n: int, rng: np.random.Generator):
    """Draw ``n`` independent busy periods as ``(N, L)`` arrays.

    Uses the branching construction: each customer's service spawns a
    Poisson(``lam`` x service) number of offspring customers, generation by
    generation, for all busy periods at once.
    """
    N = np.ones(n, dtype=np.int64)
    L = np.zeros(n)
    idx = np.arange(n)
    counts = np.ones(n, dtype=np.int64)
    while idx.size:
        s = service(rng, int(counts.sum()))
        owner = np.repeat(np.arange(idx.size), counts)
        sums = np.bincount(owner, weights=s, minlength=idx.size)
        L[idx] += sums
        kids = rng.poisson(lam * sums)
        N[idx] += kids
        keep = kids > 0
        idx, counts = idx[keep], kids[keep]
    return N, L


def kingman_bound(drift_mu: float, sigma2: float, B: float) -> float:
    """Upper bound on P{sup_t X_t >= B} for an SII process with drift ``drift_mu < 0``."""
    if drift_mu >= 0:
        raise DomainError(f"Kingman's bound needs negative drift, got {drift_mu}")
    if sigma2 <= 0 or B <= 0:
        raise DomainError("sigma2 and B must be positive")
    return min(1.0, sigma2 / (-2.0 * drift_mu * B))


def kingman_mean_bound(drift_mu: float, sigma2: float) -> float:
    """Upper bound on E[sup_t X_t]."""
    if drift_mu >= 0:
        raise DomainError(f"Kingman's bound needs negative drift, got {drift_mu}")
    return sigma2 / (-2.0 * drift_mu)


def compound_poisson_bound(alpha: float, m1: float, m2: float, B: float, eps: float) -> float:
    """Lower bound on P{C_t < B + eps t for all t} for compound Poisson ``C``."""
    if eps <= alpha * m1:
        raise DomainError(f"need eps > alpha*m1 ({eps} <= {alpha * m1})")
    if B <= 0:
        raise DomainError("B must be positive")
    if m2 < m1 * m1 * (1 - 1e-12):
        raise DomainError("second moment below squared mean")
    return max(0.0, 1.0 - alpha * m2 / (2.0 * B * (eps - alpha * m1)))


def compound_poisson_exceedance(
    alpha: float,
    jump: Sampler,
    B: float,
    eps: float,
    horizon: float,
    paths: int,
    rng: np.random.Generator,
) -> float:
    """Fraction of paths with ``C_t >= B + eps t`` for some ``t <= horizon``.

    Only post-jump instants need checking since the threshold increases
    between jumps.
    """
    hits = 0
    for _ in range(paths):
        k = rng.poisson(alpha * horizon)
        if k == 0:
            continue
        t = np.sort(rng.uniform(0.0, horizon, k))
        c = np.cumsum(jump(rng, k))
        hits += bool((c >= B + eps * t).any())
    return hits / paths


def kingman_exceedance(drift_mu: float, sigma2: float, B: float, horizon: float, paths: int, rng: np.random.Generator) -> float:
    """Empirical P{sup_{t <= horizon} X_t >= B} for ``X_t = N_t - c t``.

    ``N`` is a Poisson process of rate ``sigma2`` (unit jumps, so the
    variance rate is ``sigma2``) and ``c = sigma2 - drift_mu``.
    """
    if drift_mu >= 0:
        raise DomainError(f"Kingman's bound needs negative drift, got {drift_mu}")
    return compound_poisson_exceedance(sigma2, deterministic_service(1.0), B, sigma2 - drift_mu, horizon, paths, rng)


def moment_matched_jumps(m1: float, m2: float) -> Sampler:
    """Gamma jumps with the given first two moments (deterministic when ``m2 == m1**2``)."""
    var = m2 - m1 * m1
    if m1 <= 0 or var < -1e-12 * m2:
        raise DomainError(f"need m1 > 0 and m2 >= m1**2, got m1={m1}, m2={m2}")
    if var <= 1e-12 * m2:
        return deterministic_service(m1)
    return gamma_service(m1 * m1 / var, m1 / var)


def mgi_infinity_bound(lam: float, m: float, B: float, eps: float) -> float:
    """Upper bound on P{M_t >= B + eps t for some t} for an M/GI/inf queue started empty."""
    if B <= 0 or eps <= 0:
        raise DomainError("B and eps must be positive")
    if lam < 0 or m < 0:
        raise DomainError("lam and m must be nonnegative")
    log_val = lam * (m + 1.0) - B * math.log(2.0) - math.log1p(-(2.0 ** -eps))
    return 1.0 if log_val >= 0 else math.exp(log_val)


@dataclass
class OccupancyPath:
    times: np.ndarray
    occupancy: np.ndarray
    arrival_times: np.ndarray
    service_times: np.ndarray

    def at(self, t) -> np.ndarray:
        """Occupancy at the given times (right-continuous)."""
        k = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right")
        occ = np.concatenate([[0], self.occupancy])
        return occ[k]


def mginfty_simulate(
    lam: float,
    horizon: float,
    rng: np.random.Generator,
    K: int = 2,
    mu: float = 1.0,
    service: Sampler | None = None,
) -> OccupancyPath:
    """Exact M/GI/inf path from empty; default service is Gamma(K-1, rate mu/2)."""
    if service is None:
        if K < 2:
            raise DomainError("the dominating queue needs K >= 2")
        service = gamma_service(K - 1, mu / 2.0)
    k = rng.poisson(lam * horizon) if lam > 0 else 0
    arr = np.sort(rng.uniform(0.0, horizon, k))
    svc = service(rng, k) if k else np.empty(0)
    dep = arr + svc
    dep = dep[dep <= horizon]
    times = np.concatenate([arr, dep])
    steps = np.concatenate([np.ones(arr.size, dtype=np.int64), -np.ones(dep.size, dtype=np.int64)])
    order = np.lexsort((-steps, times))
    return OccupancyPath(times[order], np.cumsum(steps[order]), arr, svc)


def mginfty_exceedance(
    lam: float,
    m_service: Sampler,
    B: float,
    eps: float,
    horizon: float,
    paths: int,
    rng: np.random.Generator,
) -> float:
    """Fraction of M/GI/inf paths with ``M_t >= B + eps t`` for some ``t <= horizon``."""
    hits = 0
    for _ in range(paths):
        k = rng.poisson(lam * horizon)
        if k == 0:
            continue
        arr = np.sort(rng.uniform(0.0, horizon, k))
        dep = np.sort(arr + m_service(rng, k))
        occ = np.arange(1, k + 1) - np.searchsorted(dep, arr, side="right")
        hits += bool((occ >= B + eps * arr).any())
    return hits / paths


@dataclass(frozen=True)
class DominanceResult:
    ok: bool
    max_violation: float
    margin: float


def empirical_dominance(smaller, larger, alpha: float = 0.01) -> DominanceResult:
    """One-sided test that ``smaller`` is stochastically below ``larger``.

    Compares empirical CDFs on the pooled support; a violation
    ``F_larger(y) - F_smaller(y)`` is tolerated up to the sum of the two
    one-sided DKW radii at level ``alpha``.
    """
    a = np.sort(np.asarray(smaller, dtype=float))
    b = np.sort(np.asarray(larger, dtype=float))
    grid = np.union1d(a, b)
    Fa = np.searchsorted(a, grid, side="right") / a.size
    Fb = np.searchsorted(b, grid, side="right") / b.size
    viol = float(np.max(Fb - Fa))
    margin = math.sqrt(math.log(1 / alpha) / (2 * a.size)) + math.sqrt(math.log(1 / alpha) / (2 * b.size))
    return DominanceResult(viol <= margin, viol, margin)
