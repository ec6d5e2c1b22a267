"""Exact event-by-event simulation of the swarm chain.

Events are drawn hierarchically: the event class (arrival, seed tick,
contact) with rates ``lam``, ``Us * [N > 0]`` and ``mu * N``, then a uniform
actor peer, then for contacts a uniform target peer (possibly the actor
itself), then the piece from the policy.  A contact whose target has nothing
useful is a null event.  Summing over actors and targets gives exactly the
generator rates of :func:`p2pswarm.core.generator_row`.

Internally peers are kept in a flat list of bit masks so that uniform peer
draws cost O(1); the aggregate :class:`~p2pswarm.core.SwarmState` is only
materialised at the end of a run.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import ModelParams, SwarmState, Transition, apply_arrival, apply_download, full_set, generator_row
from .errors import ContractError, ResourceCapError
from .policies import Policy, get_policy

DEFAULT_MAX_PEERS = 5_000_000


def uniform_stream(rng: np.random.Generator, block: int = 8192) -> Callable[[], float]:
    """Return a zero-argument callable yielding U[0, 1) draws from ``rng`` in blocks."""

    def gen():
        while True:
            yield from rng.random(block).tolist()

    return gen().__next__


def replica_seeds(base: int, replicas: int) -> list[np.random.SeedSequence]:
    """Independent child streams for replicas of one experiment."""
    return np.random.SeedSequence(base).spawn(replicas)


@dataclass
class SimConfig:
    params: ModelParams
    policy: Policy | str = "random-useful"
    horizon: float = 100.0
    initial: SwarmState | None = None
    rng_seed: int | np.random.SeedSequence = 0
    sample_dt: float = 1.0
    max_peers: int = DEFAULT_MAX_PEERS

    def __post_init__(self):
        if not self.horizon > 0:
            raise ContractError(f"horizon must be positive, got {self.horizon}")
        if not self.sample_dt > 0:
            raise ContractError(f"sample_dt must be positive, got {self.sample_dt}")
        if self.initial is None:
            self.initial = SwarmState.empty(self.params.K)
        if self.initial.K != self.params.K:
            raise ContractError("initial state and params disagree on K")
        self.policy = get_policy(self.policy)


@dataclass
class Trajectory:
    """Grid samples of a run plus its departure log.

    ``holders``, ``one_club`` and ``seed_uploads`` are ``None`` for coded runs,
    where ``n`` counts peers by subspace dimension instead of piece count.
    """

    K: int
    times: np.ndarray
    total: np.ndarray
    n: np.ndarray
    arrivals: np.ndarray
    departures_count: np.ndarray
    holders: np.ndarray | None = None
    one_club: np.ndarray | None = None
    seed_uploads: np.ndarray | None = None
    departures: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    initial_total: int = 0
    events: int = 0
    null_events: int = 0
    horizon: float = 0.0
    final_state: object = None

    def __len__(self) -> int:
        return len(self.times)


def _n_samples(horizon: float, dt: float) -> int:
    return int(math.floor(horizon / dt + 1e-9)) + 1


def simulate(cfg: SimConfig) -> Trajectory:
    """Run one replica to ``cfg.horizon``; deterministic in ``cfg.rng_seed``."""
    p = cfg.params
    K, full = p.K, p.full
    lam, mu, Us = p.lam, p.mu, p.Us
    pick = cfg.policy.pick
    u = uniform_stream(np.random.default_rng(cfg.rng_seed))
    log = math.log
    cap = cfg.max_peers

    peers: list[int] = []
    for c, cnt in cfg.initial.items():
        peers.extend([c] * cnt)
    born = [0.0] * len(peers)
    types = dict(cfg.initial.items())
    n = cfg.initial.n_by_size()
    m = cfg.initial.holders()
    seed_up = [0] * K
    one_club_keys = [full & ~(1 << j) for j in range(K)]

    ns = _n_samples(cfg.horizon, cfg.sample_dt)
    times = np.arange(ns) * cfg.sample_dt
    s_total = np.zeros(ns, dtype=np.int64)
    s_n = np.zeros((ns, K), dtype=np.int64)
    s_m = np.zeros((ns, K), dtype=np.int64)
    s_club = np.zeros((ns, K), dtype=np.int64)
    s_seed = np.zeros((ns, K), dtype=np.int64)
    s_arr = np.zeros(ns, dtype=np.int64)
    s_dep = np.zeros(ns, dtype=np.int64)
    sample_times = times.tolist()

    dep_t: list[float] = []
    dep_s: list[float] = []
    t = 0.0
    si = 0
    arrivals = departures = events = nulls = 0
    horizon = cfg.horizon

    while True:
        N = len(peers)
        rate = lam + mu * N + (Us if N else 0.0)
        t_next = t - log(1.0 - u()) / rate
        while si < ns and sample_times[si] < t_next:
            s_total[si] = N
            s_n[si] = n
            s_m[si] = m
            s_club[si] = [types.get(k, 0) for k in one_club_keys]
            s_seed[si] = seed_up
            s_arr[si] = arrivals
            s_dep[si] = departures
            si += 1
        if t_next > horizon:
            break
        t = t_next
        events += 1
        r = u() * rate
        if r < lam:
            peers.append(0)
            born.append(t)
            types[0] = types.get(0, 0) + 1
            n[0] += 1
            arrivals += 1
            if N + 1 > cap:
                raise ResourceCapError(f"population |x| = {N + 1} exceeded max_peers = {cap} at t = {t:.3f}", N + 1)
            continue
        if r < lam + Us:
            a = int(u() * N)
            A = peers[a]
            j = pick(full & ~A, m, u)
            seed_up[j] += 1
        else:
            a = int(u() * N)
            b = int(u() * N)
            A = peers[a]
            d = peers[b] & ~A
            if not d:
                nulls += 1
                continue
            j = pick(d, m, u)

        left = types[A] - 1
        if left:
            types[A] = left
        else:
            del types[A]
        size = A.bit_count()
        n[size] -= 1
        new = A | (1 << j)
        if new == full:
            c = A
            k = 0
            while c:
                if c & 1:
                    m[k] -= 1
                c >>= 1
                k += 1
            dep_t.append(t)
            dep_s.append(t - born[a])
            last_peer = peers.pop()
            last_born = born.pop()
            if a < N - 1:
                peers[a] = last_peer
                born[a] = last_born
            departures += 1
        else:
            peers[a] = new
            types[new] = types.get(new, 0) + 1
            n[size + 1] += 1
            m[j] += 1

    return Trajectory(
        K=K,
        times=times,
        total=s_total,
        n=s_n,
        arrivals=s_arr,
        departures_count=s_dep,
        holders=s_m,
        one_club=s_club,
        seed_uploads=s_seed,
        departures=np.column_stack([dep_t, dep_s]) if dep_t else np.empty((0, 2)),
        initial_total=cfg.initial.total,
        events=events,
        null_events=nulls,
        horizon=horizon,
        final_state=SwarmState(K, types),
    )


def _pick_type(x: SwarmState, u: float) -> int:
    target = u * x.total
    acc = 0
    last = None
    for c, cnt in x.items():
        acc += cnt
        last = c
        if target < acc:
            return c
    return last


def transition_rate(x: SwarmState, p: ModelParams, policy, c: int, i: int) -> float:
    for tr in generator_row(x, p, policy):
        if tr.kind == "download" and tr.c == c and tr.i == i:
            return tr.rate
    return 0.0


def step(x: SwarmState, p: ModelParams, policy, rng: np.random.Generator):
    """One event from ``x``: ``(dt, transition, x')`` with ``transition=None`` for a null event."""
    policy = get_policy(policy)
    N = x.total
    rate = p.lam + p.mu * N + (p.Us if N else 0.0)
    dt = rng.exponential(1.0 / rate)
    r = rng.random() * rate
    if r < p.lam:
        return dt, Transition("arrival", p.lam), apply_arrival(x)
    A = _pick_type(x, rng.random())
    if r < p.lam + p.Us:
        B = full_set(p.K)
    else:
        B = _pick_type(x, rng.random())
    if not B & ~A:
        return dt, None, x
    holders = x.holders() if policy.needs_holders else None
    i = policy.pick(B & ~A, holders, rng.random) + 1
    return dt, Transition("download", transition_rate(x, p, policy, A, i), A, i), apply_download(x, A, i)


def run_replicas(
    cfg: SimConfig,
    replicas: int,
    fn: Callable = simulate,
    workers: int = 1,
) -> list:
    """Run ``replicas`` independent copies of ``cfg`` with spawned seed streams.

    Results come back in replica order regardless of scheduling.
    """
    if replicas < 1:
        raise ContractError("replicas must be >= 1")
    base = cfg.rng_seed
    seeds = base.spawn(replicas) if isinstance(base, np.random.SeedSequence) else replica_seeds(base, replicas)
    cfgs = [_with_seed(cfg, s) for s in seeds]
    if workers > 1 and replicas > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, cfgs))
    return [fn(c) for c in cfgs]


def _with_seed(cfg, seed):
    from dataclasses import replace

    return replace(cfg, rng_seed=seed)


def _window_mask(traj: Trajectory, window: Sequence[float] | None):
    if window is None:
        return np.ones(len(traj.times), dtype=bool)
    t0, t1 = window
    if t0 < 0 or t1 > traj.times[-1] + 1e-9 or t0 >= t1:
        raise ContractError(f"window {window} not inside [0, {traj.times[-1]}]")
    return (traj.times >= t0 - 1e-9) & (traj.times <= t1 + 1e-9)


def time_average(traj: Trajectory, window: Sequence[float] | None = None) -> float:
    """Time-average of |x| over the sample grid restricted to ``window``."""
    return float(traj.total[_window_mask(traj, window)].mean())


def slope_estimate(traj: Trajectory, window: Sequence[float]) -> float:
    """Least-squares slope of |x_t| against t over ``window``."""
    mask = _window_mask(traj, window)
    if mask.sum() < 10:
        raise ContractError(f"only {int(mask.sum())} samples in window {window}; need at least 10")
    t = traj.times[mask]
    y = traj.total[mask].astype(float)
    tc = t - t.mean()
    return float((tc * (y - y.mean())).sum() / (tc * tc).sum())


def piece_presence_profile(traj: Trajectory) -> tuple[np.ndarray, float]:
    """Per-piece time-averaged holder counts and the time-averaged population."""
    if traj.holders is None:
        raise ContractError("trajectory carries no per-piece holder counts")
    return traj.holders.mean(axis=0).astype(float), float(traj.total.mean())


def rare_piece_signature(profile: np.ndarray, rare_fraction: float = 0.25, spread: float = 2.0) -> dict:
    """Check for one piece far below the rest while the rest are mutually close.

    Returns the rare piece (1-based), the ratio of its presence to the median
    of the others, the max/min ratio among the others, and whether exactly
    one piece falls under ``rare_fraction`` of the others' median.
    """
    profile = np.asarray(profile, dtype=float)
    j = int(np.argmin(profile))
    others = np.delete(profile, j)
    med = float(np.median(others))
    below = [k for k in range(len(profile)) if profile[k] < rare_fraction * np.median(np.delete(profile, k))]
    ratio = profile[j] / med if med > 0 else math.inf
    spread_ratio = others.max() / others.min() if others.min() > 0 else math.inf
    return {
        "rare_piece": j + 1,
        "rare_ratio": ratio,
        "others_spread": spread_ratio,
        "n_rare": len(below),
        "ok": len(below) == 1 and spread_ratio <= spread,
    }
