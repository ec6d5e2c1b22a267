import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from p2pswarm.analysis.reduced import (
    ReducedChainState,
    borderline_death_rate,
    hitting_time_bound,
    mu_infinity_simulate,
    mu_o,
    mu_o_exact,
    reduced_rates,
    top_layer_hitting_times,
    top_layer_jumps,
)
from p2pswarm.errors import ContractError, DomainError

R = ReducedChainState


class TestRates:
    def test_empty(self):
        assert reduced_rates(R(0, 0), 0.7, 1.0, 4) == [(R(1, 0), 0.7)]

    def test_lower_layer(self):
        assert reduced_rates(R(3, 1), 0.7, 1.0, 4) == [(R(4, 1), 0.7), (R(3, 2), 1.0)]

    def test_top_layer(self):
        assert reduced_rates(R(3, 3), 0.7, 1.0, 4) == [(R(4, 3), 0.7), (R(2, 3), 1.0)]

    def test_last_departure_empties(self):
        assert reduced_rates(R(1, 3), 0.7, 1.0, 4)[1] == (R(0, 0), 1.0)

    @pytest.mark.parametrize("s", [R(0, 1), R(-1, 0), R(2, 4)])
    def test_invalid_states(self, s):
        with pytest.raises(ContractError):
            s.check(4)


class TestSimulation:
    def test_first_jump_from_empty_is_arrival(self):
        for seed in range(20):
            tr = mu_infinity_simulate(1.0, 1.0, 3, 50.0, seed)
            assert (tr.n[1], tr.k[1]) == (1, 0)

    @given(st.integers(2, 6), st.integers(0, 10**6))
    def test_every_jump_is_a_listed_transition(self, K, seed):
        tr = mu_infinity_simulate(0.8, 1.0, K, 30.0, seed)
        for a, b, c, d in zip(tr.n[:-1], tr.k[:-1], tr.n[1:], tr.k[1:]):
            R(int(c), int(d)).check(K)
            assert R(int(c), int(d)) in [s for s, _ in reduced_rates(R(int(a), int(b)), 0.8, 1.0, K)]

    def test_top_layer_is_birth_death(self):
        lam, Us = 1.0, 1.0
        tr = mu_infinity_simulate(lam, Us, 4, 20_000.0, np.random.default_rng(3), initial=(5, 3))
        j = top_layer_jumps(tr)
        m = j.holding.size
        assert m > 5000
        assert abs(j.holding.mean() - 1 / (lam + Us)) <= 3 * j.holding.std(ddof=1) / math.sqrt(m)
        p = lam / (lam + Us)
        assert abs(j.up.mean() - p) <= 3 * math.sqrt(p * (1 - p) / m)

    def test_hitting_time_within_bound(self):
        h = top_layer_hitting_times(1.0, 1.0, 5, 4000, np.random.default_rng(0))
        assert h.mean() - 3 * h.std(ddof=1) / math.sqrt(h.size) <= hitting_time_bound(1.0, 1.0, 5)

    def test_hitting_time_already_on_top(self):
        assert (top_layer_hitting_times(1.0, 1.0, 2, 5, 0) == 0).all()

    def test_summaries(self):
        tr = mu_infinity_simulate(0.5, 1.0, 2, 5000.0, 7)
        assert 0 < tr.top_layer_fraction() < 1 and tr.time_average_n() > 0

    def test_needs_two_pieces(self):
        with pytest.raises(DomainError):
            mu_infinity_simulate(1.0, 1.0, 1, 10.0, 0)


class TestMuO:
    def test_values(self):
        assert mu_o(1.0, 2) == pytest.approx(0.5)
        assert mu_o_exact(1, 3) == Fraction(7, 6)
        assert mu_o(0.0, 5) == 0.0
        assert mu_o(1.0, 1) == 0.0

    def test_bad_k(self):
        with pytest.raises(DomainError):
            mu_o(1.0, 0)

    @given(st.integers(1, 40), st.fractions(0, 10))
    def test_linear_and_float_agrees(self, K, lam):
        assert mu_o_exact(2 * lam, K) == 2 * mu_o_exact(lam, K)
        assert mu_o(float(lam), K) == pytest.approx(float(mu_o_exact(lam, K)), rel=1e-12, abs=1e-15)

    def test_borderline_death_rate(self):
        assert borderline_death_rate(2, 1.0, 1.0, 0.5) == pytest.approx(1.25)
        with pytest.raises(DomainError):
            borderline_death_rate(0, 1.0, 1.0, 0.5)
