"""Random linear network coding over small finite fields.

Fields of prime order use modular arithmetic; fields of order ``2**m``
(``m <= 8``) use log/antilog tables built from the fixed primitive
polynomials in :data:`PRIMITIVE_POLYS`.  A peer's state is the row-reduced
echelon basis of the span of the coding vectors it has received.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import ModelParams, MAX_PIECES
from .errors import ContractError, DomainError, ResourceCapError
from .simulator import SimConfig, Trajectory, _n_samples, uniform_stream

# Bit masks include the x**m term.
PRIMITIVE_POLYS = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011101,
}


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    return all(q % d for d in range(2, math.isqrt(q) + 1))


class GaloisField:
    """Arithmetic in F_q, scalar (Python ints) and vectorised (numpy arrays)."""

    def __init__(self, q: int):
        self.q = q
        if _is_prime(q):
            self.prime = True
            self.char = q
        elif q >= 2 and q & (q - 1) == 0 and q.bit_length() - 1 in PRIMITIVE_POLYS:
            self.prime = False
            self.char = 2
        else:
            raise DomainError(f"field order must be a prime or 2**m with 1 <= m <= 8, got {q}")
        if not self.prime:
            self._build_binary_tables()
        elif q <= 256:
            a = np.arange(q)
            self.add_table = (a[:, None] + a[None, :]) % q
            self.mul_table = (a[:, None] * a[None, :]) % q
        self.inv_list = [0] + [self._inv(a) for a in range(1, q)] if q <= 1 << 16 else None

    def _build_binary_tables(self):
        q = self.q
        m = q.bit_length() - 1
        poly = PRIMITIVE_POLYS[m]
        exp = [0] * (2 * q)
        log = [0] * q
        x = 1
        for k in range(q - 1):
            exp[k] = x
            log[x] = k
            x <<= 1
            if x & q:
                x ^= poly
        for k in range(q - 1, 2 * q):
            exp[k] = exp[k - (q - 1)]
        self._exp, self._log = exp, log
        mul = np.zeros((q, q), dtype=np.int64)
        for a in range(1, q):
            for b in range(1, q):
                mul[a, b] = exp[log[a] + log[b]]
        a = np.arange(q)
        self.add_table = a[:, None] ^ a[None, :]
        self.mul_table = mul
        self._mul_rows = mul.tolist()

    def _inv(self, a: int) -> int:
        if self.prime:
            return pow(a, self.q - 2, self.q)
        return self._exp[(self.q - 1) - self._log[a]]

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q if self.prime else a ^ b

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q if self.prime else a ^ b

    def neg(self, a: int) -> int:
        return (-a) % self.q if self.prime else a

    def mul(self, a: int, b: int) -> int:
        if self.prime:
            return a * b % self.q
        return self._mul_rows[a][b]

    def inv(self, a: int) -> int:
        if a % self.q == 0:
            raise DomainError("zero has no multiplicative inverse")
        return self.inv_list[a] if self.inv_list is not None else self._inv(a)

    # vectorised helpers on integer arrays
    def vadd(self, a, b):
        return (a + b) % self.q if self.prime else np.bitwise_xor(a, b)

    def vsub(self, a, b):
        return (a - b) % self.q if self.prime else np.bitwise_xor(a, b)

    def vmul(self, a, b):
        return (a * b) % self.q if self.prime else self.mul_table[a, b]

    def __repr__(self):
        return f"GF({self.q})"


@lru_cache(maxsize=None)
def field(q: int) -> GaloisField:
    return GaloisField(q)


@dataclass(frozen=True)
class Subspace:
    """Reduced row echelon basis of a subspace of F_q^K."""

    q: int
    K: int
    rows: tuple[tuple[int, ...], ...] = ()

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def pivots(self) -> tuple[int, ...]:
        return tuple(_pivot(r) for r in self.rows)

    @classmethod
    def zero(cls, q: int, K: int) -> "Subspace":
        return cls(q, K, ())

    @classmethod
    def full(cls, q: int, K: int) -> "Subspace":
        return cls(q, K, tuple(tuple(int(i == j) for j in range(K)) for i in range(K)))

    @classmethod
    def span(cls, q: int, K: int, vectors) -> "Subspace":
        V = cls.zero(q, K)
        for v in vectors:
            V, _ = subspace_insert(V, v)
        return V

    def __contains__(self, v) -> bool:
        return not any(_reduce(self.q, self.rows, tuple(int(a) % self.q for a in v)))


def _pivot(row) -> int:
    for j, a in enumerate(row):
        if a:
            return j
    return -1


def _reduce(q: int, rows, v):
    F = field(q)
    v = list(v)
    for r in rows:
        p = _pivot(r)
        c = v[p]
        if c:
            v = [F.sub(a, F.mul(c, b)) for a, b in zip(v, r)]
    return v


@lru_cache(maxsize=1 << 16)
def _insert(q: int, rows: tuple, v: tuple):
    F = field(q)
    w = _reduce(q, rows, v)
    p = _pivot(w)
    if p < 0:
        return rows, False
    s = F.inv(w[p])
    w = tuple(F.mul(s, a) for a in w)
    out = []
    for r in rows:
        c = r[p]
        if c:
            r = tuple(F.sub(a, F.mul(c, b)) for a, b in zip(r, w))
        out.append(r)
    out.append(w)
    out.sort(key=_pivot)
    return tuple(out), True


def subspace_insert(V: Subspace, v) -> tuple[Subspace, bool]:
    """Add coding vector ``v`` to ``V``; the flag is true iff the dimension grew."""
    v = tuple(int(a) % V.q for a in v)
    if len(v) != V.K:
        raise ContractError(f"coding vector has length {len(v)}, expected {V.K}")
    rows, grew = _insert(V.q, V.rows, v)
    return (Subspace(V.q, V.K, rows) if grew else V), grew


@lru_cache(maxsize=1 << 16)
def _contains_all(q: int, big: tuple, small: tuple) -> bool:
    return all(not any(_reduce(q, big, r)) for r in small)


def is_subspace(VB: Subspace, VA: Subspace) -> bool:
    """True when ``VB ⊆ VA``."""
    return VB.rows == VA.rows or _contains_all(VA.q, VA.rows, VB.rows)


def sum_dim(VA: Subspace, VB: Subspace) -> int:
    rows = VA.rows
    for r in VB.rows:
        rows, _ = _insert(VA.q, rows, r)
    return len(rows)


def intersection_dim(VA: Subspace, VB: Subspace) -> int:
    return VA.dim + VB.dim - sum_dim(VA, VB)


def random_vector(V: Subspace, rng) -> tuple[int, ...]:
    """Uniform member of ``V``: independent uniform coefficients on the basis rows."""
    if V.dim == 0:
        return (0,) * V.K
    coeffs = rng.integers(0, V.q, size=V.dim).tolist()
    return _combine(V.q, V.K, V.rows, coeffs)


def _combine(q, K, rows, coeffs):
    F = field(q)
    out = [0] * K
    for c, r in zip(coeffs, rows):
        if c:
            out = [F.add(a, F.mul(c, b)) for a, b in zip(out, r)]
    return tuple(out)


def random_vectors(V: Subspace, size: int, rng) -> np.ndarray:
    """``size`` independent uniform members of ``V`` as an integer array of shape ``(size, K)``."""
    F = field(V.q)
    out = np.zeros((size, V.K), dtype=np.int64)
    if V.dim == 0:
        return out
    coeffs = rng.integers(0, V.q, size=(size, V.dim))
    basis = np.array(V.rows, dtype=np.int64)
    for k in range(V.dim):
        out = F.vadd(out, F.vmul(coeffs[:, k : k + 1], basis[k][None, :]))
    return out


def contains_many(V: Subspace, vecs: np.ndarray) -> np.ndarray:
    """Row-wise membership of ``vecs`` in ``V`` by vectorised elimination."""
    F = field(V.q)
    w = np.array(vecs, dtype=np.int64) % V.q
    for r in V.rows:
        p = _pivot(r)
        row = np.array(r, dtype=np.int64)
        w = F.vsub(w, F.vmul(w[:, p : p + 1], row[None, :]))
    return ~w.any(axis=1)


def useful_probability(VA: Subspace, VB: Subspace) -> float:
    """Chance a uniform vector of ``VB`` raises the dimension of ``VA``."""
    if VA.q != VB.q or VA.K != VB.K:
        raise ContractError("subspaces live in different spaces")
    s = sum_dim(VA, VB)
    if s == VA.dim:
        return 0.0
    inter = VA.dim + VB.dim - s
    return 1.0 - float(VA.q) ** (inter - VB.dim)


def all_subspaces(q: int, K: int) -> list[Subspace]:
    """Every subspace of F_q^K (small q, K only)."""
    import itertools

    vectors = list(itertools.product(range(q), repeat=K))
    seen = {(): Subspace.zero(q, K)}
    frontier = [Subspace.zero(q, K)]
    while frontier:
        nxt = []
        for V in frontier:
            for v in vectors:
                W, grew = subspace_insert(V, v)
                if grew and W.rows not in seen:
                    seen[W.rows] = W
                    nxt.append(W)
        frontier = nxt
    return sorted(seen.values(), key=lambda V: (V.dim, V.rows))


def one_club_subspace(q: int, K: int, missing: int = 1) -> Subspace:
    """The dimension ``K-1`` subspace of vectors with a zero in coordinate ``missing`` (1-based)."""
    return Subspace.span(q, K, [tuple(int(j == i) for j in range(K)) for i in range(K) if i != missing - 1])


@dataclass
class CodedConfig:
    sim: SimConfig
    q: int = 2
    initial: list | None = None

    def __post_init__(self):
        field(self.q)
        if self.sim.params.K > MAX_PIECES:
            raise ContractError("K too large")


def coded_one_club(q: int, K: int, size: int) -> list[Subspace]:
    V = one_club_subspace(q, K)
    return [V] * size


def nc_simulate(cfg: CodedConfig) -> Trajectory:
    """Coded-swarm analogue of :func:`p2pswarm.simulator.simulate`.

    A contact delivers a uniform vector from the source's subspace and the
    seed a uniform vector of F_q^K.  A vector that does not raise the
    downloader's dimension is a null event.  ``n`` in the returned trajectory
    counts peers by dimension.
    """
    sc = cfg.sim
    p: ModelParams = sc.params
    K, q = p.K, cfg.q
    lam, mu, Us = p.lam, p.mu, p.Us
    rng = np.random.default_rng(sc.rng_seed)
    u = uniform_stream(rng)
    log = math.log
    cap = sc.max_peers
    F = field(q)
    add, mul = F.add, F.mul

    peers: list[tuple] = [V.rows for V in (cfg.initial or [])]
    for rows in peers:
        if len(rows) >= K:
            raise ContractError("initial peers must have dimension < K")
    born = [0.0] * len(peers)
    n = [0] * K
    for rows in peers:
        n[len(rows)] += 1

    def draw(rows):
        out = [0] * K
        for r in rows:
            c = int(u() * q)
            if c:
                out = [add(a, mul(c, b)) for a, b in zip(out, r)]
        return tuple(out)

    ns = _n_samples(sc.horizon, sc.sample_dt)
    times = np.arange(ns) * sc.sample_dt
    sample_times = times.tolist()
    s_total = np.zeros(ns, dtype=np.int64)
    s_n = np.zeros((ns, K), dtype=np.int64)
    s_arr = np.zeros(ns, dtype=np.int64)
    s_dep = np.zeros(ns, dtype=np.int64)
    dep_t: list[float] = []
    dep_s: list[float] = []
    seed_departures = 0
    t = 0.0
    si = 0
    arrivals = departures = events = nulls = 0
    horizon = sc.horizon

    while True:
        N = len(peers)
        rate = lam + mu * N + (Us if N else 0.0)
        t_next = t - log(1.0 - u()) / rate
        while si < ns and sample_times[si] < t_next:
            s_total[si] = N
            s_n[si] = n
            s_arr[si] = arrivals
            s_dep[si] = departures
            si += 1
        if t_next > horizon:
            break
        t = t_next
        events += 1
        r = u() * rate
        if r < lam:
            peers.append(())
            born.append(t)
            n[0] += 1
            arrivals += 1
            if N + 1 > cap:
                raise ResourceCapError(f"population |x| = {N + 1} exceeded max_peers = {cap}", N + 1)
            continue
        from_seed = r < lam + Us
        a = int(u() * N)
        A = peers[a]
        if from_seed:
            v = tuple(int(u() * q) for _ in range(K))
        else:
            b = int(u() * N)
            B = peers[b]
            if b == a or B == A or _contains_all(q, A, B):
                nulls += 1
                continue
            v = draw(B)
        new, grew = _insert(q, A, v)
        if not grew:
            nulls += 1
            continue
        d = len(A)
        n[d] -= 1
        if len(new) == K:
            dep_t.append(t)
            dep_s.append(t - born[a])
            last_peer = peers.pop()
            last_born = born.pop()
            if a < N - 1:
                peers[a] = last_peer
                born[a] = last_born
            departures += 1
            seed_departures += from_seed
        else:
            peers[a] = new
            n[d + 1] += 1

    final = Counter(peers)
    return Trajectory(
        K=K,
        times=times,
        total=s_total,
        n=s_n,
        arrivals=s_arr,
        departures_count=s_dep,
        departures=np.column_stack([dep_t, dep_s]) if dep_t else np.empty((0, 2)),
        initial_total=len(cfg.initial or []),
        events=events,
        null_events=nulls,
        horizon=horizon,
        final_state={"peers": final, "seed_departures": seed_departures, "q": q},
    )


def effective_seed_rate(Us: float, q: int) -> float:
    """Departure rate from a swarm sitting in one dimension ``K-1`` subspace."""
    return Us * (1.0 - 1.0 / q)
