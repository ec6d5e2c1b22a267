"""Exact transient law of the swarm chain on a truncated state space.

States reachable from the initial state with at most ``cap`` peers are found
by breadth-first search over :func:`p2pswarm.core.generator_row`.  Arrivals
that would exceed the cap go to an absorbing leak state, so the leak's mass at
time ``t`` is exactly the probability of having left the truncated space by
``t``.  The transient vector is then a Poisson mixture of powers of the
uniformized jump matrix.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln, ive
from scipy.stats import poisson

from ..core import ModelParams, SwarmState, generator_row
from ..errors import ContractError, DomainError, TruncationError
from ..policies import get_policy

MAX_K = 3


@dataclass
class TransientResult:
    states: list[SwarmState]
    probs: np.ndarray
    leak: float
    cap: int
    t: float
    rate: float

    def as_dict(self) -> dict[SwarmState, float]:
        return dict(zip(self.states, self.probs.tolist()))

    def total_law(self) -> np.ndarray:
        """Law of ``|x_t|`` on ``0..cap`` (leak mass excluded)."""
        out = np.zeros(self.cap + 1)
        for x, pr in zip(self.states, self.probs):
            out[x.total] += pr
        return out


def _build(p: ModelParams, policy, initial: SwarmState, cap: int):
    index = {initial: 0}
    states = [initial]
    rows, cols, vals = [], [], []
    leak = -1
    queue = deque([initial])
    while queue:
        x = queue.popleft()
        i = index[x]
        for tr in generator_row(x, p, policy):
            y = tr.apply(x)
            if y.total > cap:
                j = leak
            else:
                j = index.get(y)
                if j is None:
                    j = index[y] = len(states)
                    states.append(y)
                    queue.append(y)
            rows.append(i)
            cols.append(j)
            vals.append(tr.rate)
    n = len(states)
    cols = [n if j == leak else j for j in cols]
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))
    out = np.asarray(Q.sum(axis=1)).ravel()
    Q = Q - sp.diags(out)
    return states, Q.tocsr()


def _poisson_mix(Q: sp.csr_matrix, pi0: np.ndarray, t: float, rate: float, tol: float = 1e-14) -> np.ndarray:
    P = (sp.identity(Q.shape[0], format="csr") + Q / rate).T.tocsr()
    m = rate * t
    if m == 0:
        return pi0.copy()
    kmax = int(poisson.isf(tol, m)) + 1
    k = np.arange(kmax + 1)
    w = np.exp(k * math.log(m) - m - gammaln(k + 1))
    v = pi0.copy()
    out = w[0] * v
    for kk in range(1, kmax + 1):
        v = P @ v
        out += w[kk] * v
    return out


def uniformization_transient(
    p: ModelParams,
    t: float,
    policy="random-useful",
    initial: SwarmState | None = None,
    cap: int | None = None,
    leak_tol: float = 1e-6,
    max_cap: int = 160,
) -> TransientResult:
    """Transient law at time ``t`` of the chain restricted to ``|x| <= cap``.

    With ``cap=None`` the cap starts at 10 (or the initial population) and
    doubles until the leak falls below ``leak_tol``; with an explicit cap a
    leak above ``leak_tol`` raises :class:`TruncationError`.
    """
    if p.K > MAX_K:
        raise DomainError(f"uniformization is limited to K <= {MAX_K}, got K={p.K}")
    if t < 0:
        raise ContractError("t must be nonnegative")
    policy = get_policy(policy)
    initial = SwarmState.empty(p.K) if initial is None else initial
    if initial.K != p.K:
        raise ContractError("initial state and params disagree on K")
    adaptive = cap is None
    cap = max(10, initial.total) if adaptive else cap
    if cap < initial.total:
        raise ContractError(f"cap {cap} is below the initial population {initial.total}")
    while True:
        states, Q = _build(p, policy, initial, cap)
        rate = p.lam + p.Us + p.mu * cap
        pi0 = np.zeros(len(states) + 1)
        pi0[0] = 1.0
        pi = _poisson_mix(Q, pi0, t, rate)
        leak = float(pi[-1])
        if leak < leak_tol:
            return TransientResult(states, pi[:-1], leak, cap, t, rate)
        if not adaptive or cap * 2 > max_cap:
            raise TruncationError(f"truncation leak {leak:.3g} at cap {cap} exceeds {leak_tol:g}; widen the cap", leak)
        cap *= 2


def mm1_transient(lam: float, mu: float, t: float, n_max: int, initial: int = 0, terms: int = 5000) -> np.ndarray:
    """Closed-form M/M/1 queue-length law at time ``t`` on ``0..n_max`` (modified Bessel series)."""
    out = np.zeros(n_max + 1)
    if t == 0:
        if initial <= n_max:
            out[initial] = 1.0
        return out
    a = 2.0 * math.sqrt(lam * mu) * t
    lr = 0.5 * math.log(lam / mu)
    shift = a - (lam + mu) * t

    def bes(j: int, e: float) -> float:
        # e^{-(lam+mu)t} * rho^{e/2} * I_j(a), kept in log space
        v = ive(abs(j), a)
        return 0.0 if v == 0 else math.exp(math.log(v) + shift + e * lr)

    i = initial
    for n in range(n_max + 1):
        val = bes(n - i, n - i) + bes(n + i + 1, n - i - 1)
        tail = 0.0
        for j in range(n + i + 2, n + i + 2 + terms):
            tj = bes(j, 2 * n - j)
            tail += tj
            if j > a and tj <= 1e-17 * tail:
                break
        out[n] = val + (1 - lam / mu) * tail
    return out


def tv_distance(p: dict, q: dict) -> float:
    """Total-variation distance between two finite laws given as dicts."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
