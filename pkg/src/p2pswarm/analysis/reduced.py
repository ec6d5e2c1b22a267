"""The swarm watched in the limit of infinite contact rate.

With instantaneous peer-to-peer exchange every peer holds the same pieces
between events, so the state collapses to ``(n, k)``: ``n`` peers each
holding ``k`` pieces, with ``(0, 0)`` the empty swarm.  Arrivals add a peer
that instantly catches up; a seed upload adds a piece to everybody, except in
the top layer ``k = K-1`` where it completes one peer, who leaves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import ContractError, DomainError


@dataclass(frozen=True)
class ReducedChainState:
    n: int
    k: int

    def check(self, K: int) -> None:
        if self.n < 0 or not 0 <= self.k <= K - 1:
            raise ContractError(f"({self.n}, {self.k}) is not a reduced state for K={K}")
        if self.n == 0 and self.k != 0:
            raise ContractError("an empty swarm holds no pieces")


def reduced_rates(state: ReducedChainState, lam: float, Us: float, K: int) -> list[tuple[ReducedChainState, float]]:
    """Outgoing transitions of ``state`` with their rates."""
    n, k = state.n, state.k
    out = [(ReducedChainState(n + 1, k), lam)]
    if n == 0:
        return out
    if k < K - 1:
        out.append((ReducedChainState(n, k + 1), Us))
    elif n == 1:
        out.append((ReducedChainState(0, 0), Us))
    else:
        out.append((ReducedChainState(n - 1, k), Us))
    return out


@dataclass
class ReducedTrajectory:
    times: np.ndarray
    n: np.ndarray
    k: np.ndarray
    K: int
    horizon: float

    def top_layer_fraction(self) -> float:
        """Fraction of ``[0, horizon]`` spent with ``k = K-1`` and ``n >= 1``."""
        dt = np.diff(np.append(self.times, self.horizon))
        top = (self.k == self.K - 1) & (self.n > 0)
        return float(dt[top].sum() / self.horizon)

    def time_average_n(self) -> float:
        dt = np.diff(np.append(self.times, self.horizon))
        return float((dt * self.n).sum() / self.horizon)


def _validate(lam: float, Us: float, K: int) -> None:
    if K < 2:
        raise DomainError("the reduced chain needs K >= 2")
    if lam <= 0 or Us <= 0:
        raise DomainError("lam and Us must be positive")


def mu_infinity_simulate(
    lam: float,
    Us: float,
    K: int,
    horizon: float,
    rng,
    initial: tuple[int, int] = (0, 0),
    max_events: int = 50_000_000,
) -> ReducedTrajectory:
    """Exact jump-chain simulation of the reduced process; records every event."""
    _validate(lam, Us, K)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    ReducedChainState(*initial).check(K)
    n, k = initial
    t = 0.0
    ts, ns, ks = [0.0], [n], [k]
    p_arr = lam / (lam + Us)
    top = K - 1
    while len(ts) < max_events:
        rate = lam + (Us if n else 0.0)
        t += rng.exponential(1.0 / rate)
        if t > horizon:
            break
        if n == 0 or rng.random() < p_arr:
            n += 1
        elif k < top:
            k += 1
        else:
            n -= 1
            if n == 0:
                k = 0
        ts.append(t)
        ns.append(n)
        ks.append(k)
    return ReducedTrajectory(np.array(ts), np.array(ns), np.array(ks), K, horizon)


def top_layer_hitting_times(
    lam: float,
    Us: float,
    K: int,
    replicas: int,
    rng,
    start: tuple[int, int] = (1, 1),
) -> np.ndarray:
    """Times to first reach ``k = K-1`` from ``start``, one per replica."""
    _validate(lam, Us, K)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    ReducedChainState(*start).check(K)
    out = np.empty(replicas)
    p_arr = lam / (lam + Us)
    for r in range(replicas):
        n, k = start
        t = 0.0
        while k < K - 1:
            rate = lam + (Us if n else 0.0)
            t += rng.exponential(1.0 / rate)
            if n == 0 or rng.random() < p_arr:
                n += 1
            else:
                k += 1
        out[r] = t
    return out


def hitting_time_bound(lam: float, Us: float, K: int) -> float:
    """Upper bound ``1/lam + (K-1)/Us`` on the mean time to reach the top layer."""
    return 1.0 / lam + (K - 1) / Us


@dataclass(frozen=True)
class TopLayerJumps:
    holding: np.ndarray
    up: np.ndarray
    n_before: np.ndarray


def top_layer_jumps(traj: ReducedTrajectory) -> TopLayerJumps:
    """Holding times and jump directions for visits to the top layer with ``n >= 2``.

    In that region the chain should be a birth-death process with birth rate
    ``lam`` and death rate ``Us``.
    """
    hold = np.diff(traj.times)
    src_n, src_k = traj.n[:-1], traj.k[:-1]
    mask = (src_k == traj.K - 1) & (src_n >= 2)
    up = traj.n[1:] > src_n
    return TopLayerJumps(hold[mask], up[mask], src_n[mask])


def mu_o(lam: float, K: int) -> float:
    """Critical contact rate ``lam * sum_{k=0}^{K-2} (K-k-1)/(K-k)``; zero for ``K = 1``."""
    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    return lam * math.fsum((K - k - 1) / (K - k) for k in range(K - 1))


def mu_o_exact(lam, K: int):
    """``mu_o`` in exact rational arithmetic when ``lam`` is rational."""
    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    return Fraction(lam) * sum((Fraction(K - k - 1, K - k) for k in range(K - 1)), Fraction(0))


def borderline_death_rate(n: int, Us: float, mu: float, mu_o_value: float) -> float:
    """Heuristic top-layer death rate ``Us (1 + mu_o/(n mu))`` for finite ``mu`` and ``lam = Us``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return Us * (1.0 + mu_o_value / (n * mu))
