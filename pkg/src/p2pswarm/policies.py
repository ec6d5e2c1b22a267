"""Useful-piece selection policies.

Each policy answers two questions about a download opportunity from a peer
of type ``B`` (or the seed) to a peer of type ``A``: the probability of each
piece (used to build generator rows) and a concrete random choice (used by
the event engine).  Every policy here only ever picks a piece in ``B - A``.
"""

from __future__ import annotations

from fractions import Fraction

from .core import SwarmState, full_set
from .errors import ContractError


def _bits(d: int):
    j = 0
    while d:
        if d & 1:
            yield j
        d >>= 1
        j += 1


class Policy:
    name = "abstract"
    needs_holders = False

    def distribution(self, A: int, B: int, x: SwarmState, exact: bool = False) -> dict[int, float]:
        """Map 0-based piece index to selection probability; empty when ``B ⊆ A``."""
        raise NotImplementedError

    def pick(self, d: int, holders, uniform) -> int:
        """Engine fast path: choose a 0-based piece from the nonzero useful mask ``d``."""
        raise NotImplementedError

    def select(self, A: int, B: int | None, x: SwarmState, rng) -> int:
        """Pick a 1-based piece for ``A`` downloading from ``B`` (``None`` is the seed)."""
        if B is None:
            B = full_set(x.K)
        d = B & ~A
        if not d:
            raise ContractError("source holds no piece useful to the downloader")
        holders = x.holders() if self.needs_holders else None
        return self.pick(d, holders, rng.random) + 1

    def __repr__(self) -> str:
        return f"<policy {self.name}>"


class RandomUseful(Policy):
    name = "random-useful"

    def distribution(self, A, B, x, exact=False):
        d = B & ~A
        if not d:
            return {}
        w = Fraction(1, d.bit_count()) if exact else 1.0 / d.bit_count()
        return {j: w for j in _bits(d)}

    def pick(self, d, holders, uniform):
        k = int(uniform() * d.bit_count())
        for _ in range(k):
            d &= d - 1
        return (d & -d).bit_length() - 1


class RarestFirst(Policy):
    """Prefer the useful piece with the fewest holders in the whole swarm; ties are uniform."""

    name = "rarest-first"
    needs_holders = True

    @staticmethod
    def _rarest(d, holders):
        best, ties = None, []
        for j in _bits(d):
            h = holders[j]
            if best is None or h < best:
                best, ties = h, [j]
            elif h == best:
                ties.append(j)
        return ties

    def distribution(self, A, B, x, exact=False):
        d = B & ~A
        if not d:
            return {}
        ties = self._rarest(d, x.holders())
        w = Fraction(1, len(ties)) if exact else 1.0 / len(ties)
        return {j: w for j in ties}

    def pick(self, d, holders, uniform):
        ties = self._rarest(d, holders)
        if len(ties) == 1:
            return ties[0]
        return ties[int(uniform() * len(ties))]


class Sequential(Policy):
    """Lowest-indexed useful piece first (behaves as most-abundant-first)."""

    name = "sequential"

    def distribution(self, A, B, x, exact=False):
        d = B & ~A
        if not d:
            return {}
        return {(d & -d).bit_length() - 1: Fraction(1) if exact else 1.0}

    def pick(self, d, holders, uniform):
        return (d & -d).bit_length() - 1


RANDOM_USEFUL = RandomUseful()
RAREST_FIRST = RarestFirst()
SEQUENTIAL = Sequential()

POLICIES = {p.name: p for p in (RANDOM_USEFUL, RAREST_FIRST, SEQUENTIAL)}


def get_policy(name: str | Policy) -> Policy:
    if isinstance(name, Policy):
        return name
    try:
        return POLICIES[name]
    except KeyError:
        raise ContractError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None


def select_piece_random_useful(A, B, x, rng):
    return RANDOM_USEFUL.select(A, B, x, rng)


def select_piece_rarest_first(A, B, x, rng):
    return RAREST_FIRST.select(A, B, x, rng)


def select_piece_sequential(A, B, x, rng):
    return SEQUENTIAL.select(A, B, x, rng)


def check_usefulness(policy: Policy, x: SwarmState, tol: float = 1e-12) -> bool:
    """True if ``policy`` puts all mass on useful pieces for every source/downloader pair in ``x``."""
    full = full_set(x.K)
    types = [c for c, _ in x.items()]
    for A in types:
        for B in types + [full]:
            dist = policy.distribution(A, B, x)
            d = B & ~A
            if not d:
                if dist:
                    return False
                continue
            if any(not (d >> j) & 1 for j in dist):
                return False
            if abs(sum(dist.values()) - 1.0) > tol:
                return False
    return True
