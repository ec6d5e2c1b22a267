import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import fifo_busy_periods, poisson_tail

from p2pswarm.analysis.queueing import (
    busy_period_moments,
    compound_poisson_bound,
    compound_poisson_exceedance,
    deterministic_service,
    empirical_dominance,
    exponential_service,
    kingman_bound,
    kingman_exceedance,
    kingman_mean_bound,
    mgi_infinity_bound,
    mginfty_exceedance,
    mginfty_simulate,
    moment_matched_jumps,
    simulate_busy_periods,
)
from p2pswarm.errors import DivergenceError, DomainError


class TestBusyPeriodMoments:
    def test_exponential_example(self):
        m = busy_period_moments(0.5, 1.0, 2.0)
        assert (m.EN, m.EN2, m.EL, m.EL2, m.CovNL) == pytest.approx((2, 10, 2, 16, 8))

    def test_light_traffic(self):
        m = busy_period_moments(1e-9, 3.0, 9.0)
        assert m.EN == pytest.approx(1) and m.EL == pytest.approx(3)

    def test_deterministic_service(self):
        m = busy_period_moments(0.4, 1.0, 1.0)
        assert m.EN2 == pytest.approx(1 / 0.6**3)

    def test_overload(self):
        with pytest.raises(DivergenceError):
            busy_period_moments(1.0, 1.0, 2.0)

    def test_bad_moments(self):
        with pytest.raises(DomainError):
            busy_period_moments(0.1, 1.0, 0.5)

    @pytest.mark.parametrize("rho", [0.2, 0.5])
    @pytest.mark.parametrize("kind", ["exp", "det"])
    def test_branching_sampler_matches_fifo_queue(self, rho, kind):
        # both samplers estimate the same moments; the formulas must sit within 3.5 SE of each
        n = 20_000
        if kind == "exp":
            svc, draw, EX2 = exponential_service(1.0), (lambda r: r.exponential(1.0)), 2.0
        else:
            svc, draw, EX2 = deterministic_service(1.0), (lambda r: 1.0), 1.0
        m = busy_period_moments(rho, 1.0, EX2)
        for N, L in (simulate_busy_periods(rho, svc, n, np.random.default_rng(1)), fifo_busy_periods(rho, draw, n, np.random.default_rng(2))):
            N, L = N.astype(float), np.asarray(L)
            for sample, want in ((N, m.EN), (L, m.EL), (N * N, m.EN2), (L * L, m.EL2)):
                se = sample.std(ddof=1) / math.sqrt(n)
                assert abs(sample.mean() - want) <= 3.5 * se
            cross = (N - N.mean()) * (L - L.mean())
            assert abs(cross.mean() - m.CovNL) <= 3.5 * cross.std(ddof=1) / math.sqrt(n)

    def test_zero_arrivals(self):
        N, L = simulate_busy_periods(0.0, exponential_service(2.0), 1000, np.random.default_rng(0))
        assert (N == 1).all() and L.mean() == pytest.approx(2.0, rel=0.15)

    @given(st.floats(0.01, 0.95), st.floats(0.1, 3.0), st.floats(1.0, 5.0))
    def test_moment_inequalities(self, rho, EX, scv):
        m = busy_period_moments(rho / EX, EX, scv * EX * EX)
        assert m.EN >= 1 and m.EN2 >= m.EN**2 * (1 - 1e-12)
        assert m.EL2 >= m.EL**2 * (1 - 1e-12)
        # longer busy periods serve more customers
        assert m.CovNL > 0


class TestKingman:
    def test_example(self):
        assert kingman_bound(-1.0, 2.0, 10.0) == pytest.approx(0.1)

    def test_capped_at_one(self):
        assert kingman_bound(-1.0, 2.0, 0.1) == 1.0

    def test_large_barrier(self):
        assert kingman_bound(-1.0, 2.0, 1e12) < 1e-11

    def test_positive_drift(self):
        with pytest.raises(DomainError):
            kingman_bound(0.5, 1.0, 1.0)

    def test_mean_bound(self):
        assert kingman_mean_bound(-1.0, 2.0) == 1.0

    def test_monte_carlo(self):
        freq = kingman_exceedance(-0.5, 1.0, 3.0, 200.0, 2000, np.random.default_rng(3))
        assert freq <= kingman_bound(-0.5, 1.0, 3.0)


class TestCompoundPoisson:
    def test_example(self):
        assert compound_poisson_bound(1, 1, 2, 10, 2) == pytest.approx(0.9)

    def test_large_barrier(self):
        assert compound_poisson_bound(1, 1, 2, 1e12, 2) == pytest.approx(1.0)

    def test_drift_too_small(self):
        with pytest.raises(DomainError):
            compound_poisson_bound(1, 1, 2, 10, 1)

    def test_monte_carlo(self):
        freq = compound_poisson_exceedance(1.0, moment_matched_jumps(1.0, 2.0), 5.0, 2.0, 200.0, 2000, np.random.default_rng(4))
        assert freq <= 1 - compound_poisson_bound(1, 1, 2, 5.0, 2.0)

    def test_moment_matching(self):
        draws = moment_matched_jumps(2.0, 6.0)(np.random.default_rng(0), 200_000)
        assert draws.mean() == pytest.approx(2.0, rel=0.01)
        assert (draws**2).mean() == pytest.approx(6.0, rel=0.02)
        assert (moment_matched_jumps(3.0, 9.0)(np.random.default_rng(0), 4) == 3.0).all()


class TestMGInfinity:
    def test_example(self):
        assert mgi_infinity_bound(1, 1, 10, 1) == pytest.approx(2 * math.e**2 / 1024)

    def test_large_barrier(self):
        assert mgi_infinity_bound(1, 1, 2000, 1) == 0.0

    def test_capped(self):
        assert mgi_infinity_bound(5, 3, 1, 0.1) == 1.0

    def test_no_arrivals(self):
        path = mginfty_simulate(0.0, 100.0, np.random.default_rng(0), K=3)
        assert path.occupancy.size == 0 and (path.at([0, 50, 100]) == 0).all()

    def test_equilibrium_mean(self):
        lam, K, mu = 2.0, 3, 1.0
        rng = np.random.default_rng(5)
        vals = [mginfty_simulate(lam, 60.0, rng, K=K, mu=mu).at(60.0)[()] for _ in range(2000)]
        se = np.std(vals, ddof=1) / math.sqrt(len(vals))
        assert abs(np.mean(vals) - lam * (K - 1) * 2 / mu) <= 3 * se

    def test_occupancy_is_poisson(self):
        # at equilibrium the occupancy is Poisson with mean lam*E[S]; compare a tail
        rng = np.random.default_rng(6)
        vals = np.array([mginfty_simulate(1.0, 40.0, rng, K=2).at(40.0)[()] for _ in range(4000)])
        p = poisson_tail(2.0, 4)
        assert abs((vals >= 4).mean() - p) <= 3 * math.sqrt(p * (1 - p) / vals.size)

    def test_path_never_negative(self):
        path = mginfty_simulate(3.0, 50.0, np.random.default_rng(7), K=4)
        assert (path.occupancy >= 0).all()

    def test_monte_carlo(self):
        lam, m = 0.5, 2.0
        freq = mginfty_exceedance(lam, exponential_service(m), 6.0, 0.5, 200.0, 2000, np.random.default_rng(8))
        assert freq <= mgi_infinity_bound(lam, m, 6.0, 0.5)

    def test_needs_two_pieces(self):
        with pytest.raises(DomainError):
            mginfty_simulate(1.0, 1.0, np.random.default_rng(0), K=1)


class TestDominance:
    def test_ordered_samples(self):
        rng = np.random.default_rng(0)
        assert empirical_dominance(rng.exponential(1, 3000), rng.exponential(2, 3000)).ok

    def test_reversed_samples(self):
        rng = np.random.default_rng(0)
        assert not empirical_dominance(rng.exponential(2, 3000), rng.exponential(1, 3000)).ok

    def test_equal_laws_pass(self):
        rng = np.random.default_rng(1)
        assert empirical_dominance(rng.normal(size=2000), rng.normal(size=2000)).ok
