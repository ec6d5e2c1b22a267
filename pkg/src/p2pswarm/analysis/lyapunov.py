"""Quadratic potential, exact drift and a negative-drift certificate for ``lam < Us``.

The potential is ``V(x) = sum_i b_i * (n_0 + ... + n_i)**2 / 2`` where
``n_i`` counts peers holding exactly ``i`` pieces.  Drift values are computed
in exact rational arithmetic so that states with ~1e18 peers, where the
certificate lives, are handled without cancellation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..core import ModelParams, SwarmState, full_set, generator_row
from ..errors import DomainError


@dataclass(frozen=True)
class LyapunovCoefficients:
    b: tuple[float, ...]
    a: tuple[float, ...]
    lam: float
    Us: float

    def checks(self) -> dict[str, list[bool]]:
        """Both coefficient conditions for ``0 <= i <= K-2``, in exact arithmetic."""
        lam, Us = Fraction(self.lam), Fraction(self.Us)
        b = [Fraction(v) for v in self.b]
        K = len(b)
        a = [sum(b[i:]) for i in range(K)]
        r = lam / (Us - lam)
        return {
            "b_i > lam/(Us-lam) * a_{i+1}": [b[i] > r * a[i + 1] for i in range(K - 1)],
            "Us*b_i - lam*a_i > 0": [Us * b[i] - lam * a[i] > 0 for i in range(K - 1)],
            "decreasing, b_{K-1} = 1": [b[-1] == 1] + [b[i] > b[i + 1] for i in range(K - 1)],
        }

    def verify(self) -> bool:
        return all(all(v) for v in self.checks().values())


def lyapunov_coefficients(lam: float, Us: float, K: int, delta: float = 0.01) -> LyapunovCoefficients:
    """Build ``b_{K-1} = 1 < ... < b_0`` backwards with a ``(1 + delta)`` margin."""
    if lam >= Us:
        raise DomainError(f"coefficients exist only for lam < Us (lam={lam}, Us={Us})")
    if K < 1:
        raise DomainError("K must be >= 1")
    r = lam / (Us - lam)
    b = [0.0] * K
    b[K - 1] = 1.0
    tail = 1.0
    for i in range(K - 2, -1, -1):
        b[i] = (1 + delta) * max(b[i + 1], r * tail)
        tail += b[i]
    a = [sum(b[i:]) for i in range(K)]
    return LyapunovCoefficients(tuple(b), tuple(a), lam, Us)


def potential(x: SwarmState, coeffs: LyapunovCoefficients) -> Fraction:
    n = x.n_by_size()
    out = Fraction(0)
    s = 0
    for i, bi in enumerate(coeffs.b):
        s += n[i]
        out += Fraction(bi) * s * s / 2
    return out


@dataclass(frozen=True)
class DriftValue:
    qv: float
    bound: float
    qv_exact: Fraction = field(repr=False)
    bound_exact: Fraction = field(repr=False)


def drift_bound(x: SwarmState, p: ModelParams, coeffs: LyapunovCoefficients, exact: bool = True):
    """Analytic upper bound on the drift built from the guaranteed download rates ``d_i``."""
    num = Fraction if exact else float
    n = x.n_by_size()
    N = x.total
    lam, Us, mu = num(p.lam), num(p.Us), num(p.mu)
    b = [num(v) for v in coeffs.b]
    # equality holds on single-stratum states, so a must be summed in the same arithmetic
    a = [sum(b[i:]) for i in range(p.K)]
    out = a[0] * lam / 2
    above = sum(n)
    for i in range(p.K):
        above -= n[i]
        out += lam * n[i] * a[i]
        if N and n[i]:
            d = num(n[i]) * (Us + mu * above) / N
            out -= (num(n[i]) - num(1) / 2) * b[i] * d
    return out


def drift_qv(x: SwarmState, p: ModelParams, coeffs: LyapunovCoefficients, policy=None) -> DriftValue:
    """Exact ``QV(x)`` by enumerating the generator row, with its analytic bound."""
    V0 = potential(x, coeffs)
    qv = Fraction(0)
    for tr in generator_row(x, p, policy, exact=True):
        qv += tr.rate * (potential(tr.apply(x), coeffs) - V0)
    bnd = drift_bound(x, p, coeffs)
    if qv > bnd:
        raise AssertionError(f"exact drift {float(qv)} exceeds its bound {float(bnd)} at {x}")
    return DriftValue(float(qv), float(bnd), qv, bnd)


@dataclass
class DriftCertificate:
    found: bool
    eta: float = math.nan
    epsilon: float = math.nan
    L: float = math.nan
    L_concentrated: float = math.nan
    L_spread: float = math.nan
    reason: str = ""
    sampled: int = 0
    violations: int = 0
    worst_ratio: float = math.nan

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _certificate_for_eta(eta: float, p: ModelParams, c: LyapunovCoefficients):
    K, lam, Us, mu = p.K, p.lam, p.Us, p.mu
    a, b = c.a, c.b
    braces = [a[i] * lam + K * a[0] * lam * eta / (1 - eta) - b[i] * (1 - eta) * Us for i in range(K)]
    if max(braces) >= 0:
        return None
    eps = (1 - eta) * min(-v for v in braces) / 2
    L4 = max((a[0] * lam / 2 + (1 - eta) * b[i] * Us / 2) / ((1 - eta) * -braces[i] - eps) for i in range(K))
    if K == 1:
        # a single stratum is always concentrated
        return eps, L4, L4, 0.0
    quad = (eta / K) ** 3 * mu
    lin = a[0] * K * lam + b[0] * mu / 2 + eps
    L5 = (lin + math.sqrt(lin * lin + 2 * quad * a[0] * lam)) / (2 * quad)
    return eps, max(L4, L5), L4, L5


def sample_states(K: int, low: float, high: float, count: int, rng, eta: float = 0.0, max_types: int = 8) -> list[SwarmState]:
    """Random states with ``low <= |x| <= high``; every other one is concentrated on a single type."""
    full = full_set(K)
    out = []
    for k in range(count):
        total = int(low + (high - low) * rng.random())
        total = max(total, int(math.ceil(low)), 1)
        if k % 2 and eta > 0:
            c = int(rng.integers(0, full))
            rest = int(total * eta * rng.random())
            counts = {c: total - rest}
            if rest:
                other = int(rng.integers(0, full))
                counts[other] = counts.get(other, 0) + rest
        else:
            m = int(rng.integers(1, min(max_types, full) + 1))
            types = rng.choice(full, size=m, replace=False)
            w = rng.dirichlet(np.ones(m))
            parts = [int(total * wi) for wi in w]
            parts[0] += total - sum(parts)
            counts = {}
            for c, v in zip(types.tolist(), parts):
                counts[c] = counts.get(c, 0) + v
        out.append(SwarmState(K, counts))
    return out


def drift_region_check(
    p: ModelParams,
    coeffs: LyapunovCoefficients | None = None,
    eta_grid=None,
    state_sampler=None,
    samples: int = 1000,
    rng=None,
) -> DriftCertificate:
    """Search ``eta`` for a certificate ``QV(x) <= -epsilon |x|`` whenever ``|x| >= L``.

    The concentrated case (some stratum holds a ``1 - eta`` fraction) uses
    the brace term of the concentrated-state bound; the spread case uses the
    quadratic bound.  The returned ``L`` is the smallest over the grid.  The
    certificate is then exercised on sampled states with ``|x|`` in
    ``[L, 10 L]`` through :func:`drift_qv`.
    """
    if p.lam >= p.Us:
        return DriftCertificate(False, reason=f"lam = {p.lam} >= Us = {p.Us}: Us*b_i - lam*a_i > 0 is infeasible")
    if coeffs is None:
        coeffs = lyapunov_coefficients(p.lam, p.Us, p.K)
    if eta_grid is None:
        eta_grid = np.logspace(-14, math.log10(0.5), 600)
    best = None
    for eta in eta_grid:
        got = _certificate_for_eta(float(eta), p, coeffs)
        if got is not None and (best is None or got[1] < best[1][1]):
            best = (float(eta), got)
    if best is None:
        return DriftCertificate(False, reason="no eta on the grid makes every brace term negative")
    eta, (eps, L, L4, L5) = best
    cert = DriftCertificate(True, eta, eps, L, L4, L5)
    if samples:
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        if state_sampler is None:
            states = sample_states(p.K, L, 10 * L, samples, rng, eta=eta)
        else:
            states = state_sampler(p.K, L, 10 * L, samples, rng)
        worst = -math.inf
        bad = 0
        eps_exact = Fraction(eps)
        for x in states:
            d = drift_qv(x, p, coeffs)
            if d.qv_exact > -eps_exact * x.total:
                bad += 1
            worst = max(worst, float(d.qv_exact / x.total))
        cert.sampled, cert.violations, cert.worst_ratio = len(states), bad, worst
    return cert
