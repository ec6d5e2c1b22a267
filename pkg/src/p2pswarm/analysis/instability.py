"""Constants, comparison moments and the modified-rate system used when ``lam > Us``.

Piece one (bit 0) is the rare piece throughout: a one-club peer holds every
other piece, a young peer is any other peer, and a young peer is infected
when it holds piece one.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..core import ModelParams
from ..errors import ContractError, DomainError
from ..simulator import _n_samples, uniform_stream
from .queueing import busy_period_moments, gamma_service, simulate_busy_periods

LN2 = math.log(2.0)


@dataclass(frozen=True)
class InstabilityConstants:
    epsilon: float
    xi: float
    epsilon_o: float
    B: float
    N_o: int
    rho: float
    params: ModelParams = field(repr=False)

    def checks(self) -> dict[str, bool]:
        """Every defining inequality, evaluated by direct substitution."""
        p = self.params
        lam, Us, mu, K = p.lam, p.Us, p.mu, p.K
        eps, xi, eo, B = self.epsilon, self.xi, self.epsilon_o, self.B
        gap = lam - Us
        return {
            "3*eps < lam - Us": 3 * eps < gap,
            "eps - 4*K*xi*Us > 0": eps - 4 * K * xi * Us > 0,
            "rho = 2*xi*(K-1) < 1/2": 2 * xi * (K - 1) < 0.5,
            "eps_o/(lam-Us-3*eps) < xi": eo / (gap - 3 * eps) < xi,
            "B: mginf bound <= 0.1": math.exp(lam * (2 * (K - 1) / mu + 1)) * 2.0 ** (-B) / (1 - 2.0 ** (-eo)) <= 0.1,
            "B: compound bound <= 0.1": 64 * K * K * xi * Us / (2 * B * (eps - 4 * K * xi * Us)) <= 0.1,
            "B: lam/(2*B*eps) <= 0.1": lam / (2 * B * eps) <= 0.1,
            "B: Us/(2*B*eps) <= 0.1": Us / (2 * B * eps) <= 0.1,
            "B/(N_o-3*B) <= xi": self.N_o > 3 * B and B / (self.N_o - 3 * B) <= xi,
        }

    def verify(self) -> bool:
        return all(self.checks().values())

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("params")
        return d


def instability_constants(p: ModelParams) -> InstabilityConstants:
    """Pick constants meeting every condition of the transience argument.

    ``eps`` and ``xi`` are taken as large as allowed (halfway to their caps)
    so that ``B`` and ``N_o`` stay as small as possible; ``B`` is the
    smallest value meeting its three conditions.
    """
    lam, Us, mu, K = p.lam, p.Us, p.mu, p.K
    if lam <= Us:
        raise DomainError(f"constants exist only for lam > Us (lam={lam}, Us={Us})")
    if K < 2:
        raise DomainError("K = 1 is an M/M/1 queue; no constants needed")
    gap = lam - Us
    eps = gap / 4.0
    xi = 0.5 * min(eps / (4 * K * Us), 1.0 / (4 * (K - 1) + 1))
    eo = xi * (gap - 3 * eps) / 2.0
    b_mginf = (lam * (2 * (K - 1) / mu + 1) - math.log(0.1) - math.log(-math.expm1(-eo * LN2))) / LN2
    b_comp = 64 * K * K * xi * Us / (0.2 * (eps - 4 * K * xi * Us))
    b_poi = max(lam, Us) / (0.2 * eps)
    B = max(b_mginf, b_comp, b_poi)
    N_o = math.ceil(B / xi + 3 * B)
    c = InstabilityConstants(eps, xi, eo, B, N_o, 2 * xi * (K - 1), p)
    # float rounding can leave a closed-form boundary value a hair short
    while not c.verify():
        B = math.nextafter(B, math.inf)
        N_o = max(N_o, math.ceil(B / xi + 3 * B))
        while N_o <= 3 * B or B / (N_o - 3 * B) > xi:
            N_o += 1
        c = InstabilityConstants(eps, xi, eo, B, N_o, 2 * xi * (K - 1), p)
    return c


@dataclass(frozen=True)
class ComparisonMoments:
    EJ: float
    EJ2: float
    EJ2_chain: float
    EJ2_coarse: float
    bound_EJ: float
    bound_EJ2: float
    rho: float


def comparison_moments(xi: float, mu: float, Us: float, K: int) -> ComparisonMoments:
    """Moments of the per-root jump ``J`` of the comparison process.

    ``EJ`` and ``EJ2`` are exact; ``EJ2_chain`` and ``EJ2_coarse`` are the
    successive upper bounds leading to ``64 K**2``.  The reference queue has
    arrival rate ``xi*mu`` so ``Us`` does not enter.
    """
    rho = 2 * xi * (K - 1)
    if rho >= 0.5:
        raise DomainError(f"need rho = 2*xi*(K-1) < 1/2, got {rho}")
    if K < 2:
        raise DomainError("K must be >= 2")
    EX = 2 * (K - 1) / mu
    EX2 = (K - 1) * (2 / mu) ** 2 + EX * EX
    bp = busy_period_moments(xi * mu, EX, EX2)
    g = 1 - rho
    EJ = (1 + mu * EX) / g - 1
    EJ1_sq = bp.EN2 - 2 * bp.EN + 1
    EJ2_sq = mu * bp.EL + mu * mu * bp.EL2
    cross = mu * (bp.CovNL + bp.EN * bp.EL - bp.EL)
    out = ComparisonMoments(
        EJ=EJ,
        EJ2=EJ1_sq + 2 * cross + EJ2_sq,
        EJ2_chain=2 * ((1 + rho * rho) / g**3 + mu * EX / g + mu * mu * EX2 / g**3),
        EJ2_coarse=16 * (2 + mu * EX + mu * mu * EX2),
        bound_EJ=4.0 * K,
        bound_EJ2=64.0 * K * K,
        rho=rho,
    )
    if not (out.EJ <= out.bound_EJ and out.EJ2 <= out.EJ2_chain <= out.EJ2_coarse <= out.bound_EJ2):
        raise ContractError(f"comparison bound chain violated: {out}")
    return out


def simulate_comparison_jumps(xi: float, mu: float, K: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Monte-Carlo draws of ``J``: descendants of a root plus Poisson(mu * L) one-club uploads."""
    N, L = simulate_busy_periods(xi * mu, gamma_service(K - 1, mu / 2.0), n, rng)
    return (N - 1) + rng.poisson(mu * L)


@dataclass
class AltSystemResult:
    times: np.ndarray
    N: np.ndarray
    Y: np.ndarray
    D: np.ndarray
    Z: np.ndarray
    A: np.ndarray
    flags: dict[str, bool]
    horizon: float

    @property
    def all_four(self) -> bool:
        return all(self.flags[k] for k in ("A", "Z", "Y", "D"))

    @property
    def launch_success(self) -> bool:
        """Young fraction stayed below ``xi`` and ``N`` stayed above its growth line."""
        return self.flags["tau_infinite"] and self.flags["N_line"]


def alt_system_simulate(
    p: ModelParams,
    consts: InstabilityConstants,
    horizon: float,
    rng,
    sample_dt: float = 1.0,
    initial_club: int | None = None,
) -> AltSystemResult:
    """Simulate the modified-rate system from ``N_o`` one-club peers.

    Young peers download from the one club at rate ``mu*max((N-Y)/N, 1/2)``
    each and the seed serves the young peers at aggregate rate
    ``Us*min(Y/N, xi)``; every other rate is the original one.  Flags record
    whether each defining event held on ``[0, horizon]``.
    """
    if not consts.verify():
        bad = [k for k, v in consts.checks().items() if not v]
        raise ContractError(f"constants fail: {bad}")
    if consts.params.K != p.K:
        raise ContractError("constants were built for a different K")
    K = p.K
    lam, mu, Us = p.lam, p.mu, p.Us
    full = (1 << K) - 1
    club_type = full & ~1
    eps, eo, xi, B = consts.epsilon, consts.epsilon_o, consts.xi, consts.B
    N_o = consts.N_o if initial_club is None else initial_club
    n_slope = lam - Us - 3 * eps
    u = uniform_stream(rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng))
    log = math.log

    young: list[int] = []
    C = N_o
    A_cnt = D_cnt = Z_cnt = 0
    ok = {"A": True, "Z": True, "Y": True, "D": True, "tau_infinite": True, "N_line": True}

    ns = _n_samples(horizon, sample_dt)
    times = np.arange(ns) * sample_dt
    st = times.tolist()
    s = {k: np.zeros(ns, dtype=np.int64) for k in ("N", "Y", "D", "Z", "A")}
    si = 0
    t = 0.0

    def pick_uniform(d):
        k = int(u() * d.bit_count())
        for _ in range(k):
            d &= d - 1
        return d & -d

    while True:
        Y = len(young)
        N = C + Y
        if N:
            r_club_dl = Y * mu * max((N - Y) / N, 0.5)
            r_yy = mu * Y * Y / N
            r_seed_y = Us * min(Y / N, xi)
            r_seed_c = Us * C / N
            r_pull = mu * C * Y / N
        else:
            r_club_dl = r_yy = r_seed_y = r_seed_c = r_pull = 0.0
        rate = lam + r_club_dl + r_yy + r_seed_y + r_seed_c + r_pull
        t_next = t - log(1.0 - u()) / rate
        while si < ns and st[si] < t_next:
            s["N"][si], s["Y"][si], s["D"][si], s["Z"][si], s["A"][si] = N, Y, D_cnt, Z_cnt, A_cnt
            si += 1
        end = min(t_next, horizon)
        # lower-bound events are tightest just before a jump
        if A_cnt <= -B + (lam - eps) * end:
            ok["A"] = False
        if N < N_o - 3 * B + n_slope * end:
            ok["N_line"] = False
        if t_next > horizon:
            break
        t = t_next
        r = u() * rate
        if r < lam:
            young.append(0)
            A_cnt += 1
        else:
            r -= lam
            gain = 0
            a = -1
            if r < r_club_dl:
                a = int(u() * Y)
                gain = pick_uniform(club_type & ~young[a])
            elif r < r_club_dl + r_yy:
                a = int(u() * Y)
                b = int(u() * Y)
                d = young[b] & ~young[a]
                if d:
                    gain = pick_uniform(d)
                    D_cnt += gain == 1
            elif r < r_club_dl + r_yy + r_seed_y:
                a = int(u() * Y)
                gain = pick_uniform(full & ~young[a])
                Z_cnt += gain == 1
            elif r < r_club_dl + r_yy + r_seed_y + r_seed_c:
                C -= 1
                Z_cnt += 1
            elif Y:
                b = int(u() * Y)
                if young[b] & 1:
                    C -= 1
                    D_cnt += 1
            if gain:
                new = young[a] | gain
                if new == full or new == club_type:
                    young[a] = young[-1]
                    young.pop()
                    C += new == club_type
                else:
                    young[a] = new
        Y = len(young)
        N = C + Y
        if Z_cnt >= B + (Us + eps) * t:
            ok["Z"] = False
        if Y >= B + eo * t:
            ok["Y"] = False
        if D_cnt >= B + eps * t:
            ok["D"] = False
        if Y >= xi * N:
            ok["tau_infinite"] = False
        if N < N_o - 3 * B + n_slope * t:
            ok["N_line"] = False

    return AltSystemResult(times, s["N"], s["Y"], s["D"], s["Z"], s["A"], ok, horizon)
