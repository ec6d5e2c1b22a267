"""State space and exact transition rates of the swarm Markov process.

A peer's collection of pieces is stored as an integer bit mask: piece ``j``
(1-based, as seen by callers) lives in bit ``j - 1``.  A swarm state maps
each occupied mask to the number of peers holding exactly that collection.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import ContractError

MAX_PIECES = 64


@dataclass(frozen=True)
class ModelParams:
    """Piece count ``K``, arrival rate ``lam``, contact rate ``mu`` and seed rate ``Us``."""

    K: int
    lam: float
    mu: float
    Us: float

    def __post_init__(self):
        if not isinstance(self.K, int) or not 1 <= self.K <= MAX_PIECES:
            raise ContractError(f"K must be an integer in [1, {MAX_PIECES}], got {self.K!r}")
        for name in ("lam", "mu", "Us"):
            value = getattr(self, name)
            if not value > 0 or value == float("inf"):
                raise ContractError(f"{name} must be positive and finite, got {value!r}")

    @property
    def full(self) -> int:
        return (1 << self.K) - 1


def full_set(K: int) -> int:
    return (1 << K) - 1


def pieceset(pieces: Iterable[int] = (), K: int | None = None) -> int:
    """Build a bit mask from 1-based piece indices."""
    mask = 0
    for j in pieces:
        if j < 1 or (K is not None and j > K):
            raise ContractError(f"piece index {j} out of range")
        mask |= 1 << (j - 1)
    return mask


def pieces_of(mask: int) -> tuple[int, ...]:
    """1-based piece indices held in ``mask``, ascending."""
    out = []
    j = 1
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return tuple(out)


class SwarmState:
    """Immutable multiset of peer types.

    ``counts`` never stores zeros; a missing key means no peer of that type.
    """

    __slots__ = ("K", "_counts", "total")

    def __init__(self, K: int, counts: Mapping[int, int] | None = None):
        if not 1 <= K <= MAX_PIECES:
            raise ContractError(f"K must be in [1, {MAX_PIECES}]")
        full = full_set(K)
        clean = {}
        for c, n in (counts or {}).items():
            if n < 0:
                raise ContractError(f"negative count for type {c:#x}")
            if n == 0:
                continue
            if c < 0 or c >= full:
                raise ContractError(f"type {c:#x} is not a proper subset of {K} pieces")
            clean[c] = int(n)
        self.K = K
        self._counts = clean
        self.total = sum(clean.values())

    @classmethod
    def empty(cls, K: int) -> "SwarmState":
        return cls(K)

    @classmethod
    def from_pieces(cls, K: int, counts: Mapping[tuple[int, ...], int]) -> "SwarmState":
        """Construct from ``{(1, 2): 3, (): 1}``-style keys of 1-based pieces."""
        return cls(K, {pieceset(k, K): n for k, n in counts.items()})

    @classmethod
    def one_club(cls, K: int, size: int, missing: int = 1) -> "SwarmState":
        """``size`` peers that all hold every piece except ``missing``."""
        if K < 2:
            raise ContractError("a one club needs K >= 2")
        return cls(K, {full_set(K) & ~(1 << (missing - 1)): size})

    @property
    def counts(self) -> Mapping[int, int]:
        return MappingProxyType(self._counts)

    def __getitem__(self, c: int) -> int:
        return self._counts.get(c, 0)

    def __len__(self) -> int:
        return len(self._counts)

    def items(self):
        return self._counts.items()

    def __eq__(self, other) -> bool:
        if not isinstance(other, SwarmState):
            return NotImplemented
        return self.K == other.K and self._counts == other._counts

    def __hash__(self) -> int:
        return hash((self.K, frozenset(self._counts.items())))

    def __repr__(self) -> str:
        body = ", ".join(f"{set(pieces_of(c)) or '{}'}: {n}" for c, n in sorted(self._counts.items()))
        return f"SwarmState(K={self.K}, {{{body}}})"

    def n_by_size(self) -> list[int]:
        n = [0] * self.K
        for c, cnt in self._counts.items():
            n[c.bit_count()] += cnt
        return n

    def holders(self) -> list[int]:
        """Per-piece holder counts, 0-based piece index."""
        m = [0] * self.K
        for c, cnt in self._counts.items():
            j = 0
            while c:
                if c & 1:
                    m[j] += cnt
                c >>= 1
                j += 1
        return m


@dataclass(frozen=True)
class Transition:
    """One positive generator entry: an arrival, or type ``c`` downloading piece ``i`` (1-based)."""

    kind: str
    rate: float
    c: int | None = None
    i: int | None = None

    def apply(self, x: SwarmState) -> SwarmState:
        if self.kind == "arrival":
            return apply_arrival(x)
        return apply_download(x, self.c, self.i)


def apply_arrival(x: SwarmState) -> SwarmState:
    counts = dict(x.items())
    counts[0] = counts.get(0, 0) + 1
    return SwarmState(x.K, counts)


def apply_download(x: SwarmState, c: int, i: int) -> SwarmState:
    """Type ``c`` peer gains piece ``i``; a completed peer leaves."""
    if x[c] < 1:
        raise ContractError(f"no peer of type {set(pieces_of(c))} present")
    bit = 1 << (i - 1)
    if not 1 <= i <= x.K or c & bit:
        raise ContractError(f"piece {i} is already held by type {set(pieces_of(c))} or out of range")
    counts = dict(x.items())
    counts[c] -= 1
    if counts[c] == 0:
        del counts[c]
    new = c | bit
    if new != full_set(x.K):
        counts[new] = counts.get(new, 0) + 1
    return SwarmState(x.K, counts)


def generator_row(x: SwarmState, p: ModelParams, policy=None, exact: bool = False) -> list[Transition]:
    """Positive off-diagonal generator entries out of ``x``.

    With ``exact=True`` rates are :class:`fractions.Fraction` values, which
    the drift computations need for states with astronomically many peers.
    """
    if policy is None:
        from .policies import RANDOM_USEFUL as policy
    if x.K != p.K:
        raise ContractError("state and parameters disagree on K")
    num = Fraction if exact else float
    out = [Transition("arrival", num(p.lam))]
    N = x.total
    if N == 0:
        return out
    full = p.full
    Us, mu = num(p.Us), num(p.mu)
    types = list(x.items())
    for c, xc in types:
        rates: dict[int, object] = {}
        for j, h in policy.distribution(c, full, x, exact).items():
            rates[j] = rates.get(j, 0) + Us * h
        for s, xs in types:
            if not s & ~c:
                continue
            for j, h in policy.distribution(c, s, x, exact).items():
                rates[j] = rates.get(j, 0) + mu * xs * h
        scale = num(xc) / N
        for j in sorted(rates):
            r = scale * rates[j]
            if r > 0:
                out.append(Transition("download", r, c, j + 1))
    return out


@dataclass(frozen=True)
class Diagnostics:
    n: tuple[int, ...]
    holders: tuple[int, ...]
    one_club: tuple[int, ...]
    rarest: int


def diagnostics(x: SwarmState) -> Diagnostics:
    """Size strata, holder counts, one-club sizes and the rarest piece (1-based, lowest index on ties)."""
    full = full_set(x.K)
    m = x.holders()
    one_club = tuple(x[full & ~(1 << j)] for j in range(x.K))
    rarest = min(range(x.K), key=lambda j: (m[j], j)) + 1
    return Diagnostics(tuple(x.n_by_size()), tuple(m), one_club, rarest)
