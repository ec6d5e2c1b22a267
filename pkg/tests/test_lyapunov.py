from fractions import Fraction

import numpy as np
import pytest
from conftest import swarm_states
from hypothesis import given
from hypothesis import strategies as st

from p2pswarm.analysis.lyapunov import (
    drift_bound,
    drift_qv,
    drift_region_check,
    lyapunov_coefficients,
    potential,
    sample_states,
)
from p2pswarm.core import ModelParams, SwarmState
from p2pswarm.errors import DomainError


class TestCoefficients:
    def test_k2_example(self):
        c = lyapunov_coefficients(0.5, 1.0, 2)
        assert c.b == pytest.approx((1.01, 1.0))
        assert c.verify()
        assert 1.0 * c.b[0] - 0.5 * c.a[0] == pytest.approx(1.01 - 0.5 * 2.01)

    def test_k1(self):
        c = lyapunov_coefficients(0.5, 1.0, 1)
        assert c.b == (1.0,) and c.verify()

    def test_blows_up_near_capacity(self):
        b0 = [lyapunov_coefficients(lam, 1.0, 3).b[0] for lam in (0.5, 0.9, 0.99, 0.999)]
        assert b0 == sorted(b0) and b0[-1] > 1e5

    def test_over_capacity(self):
        with pytest.raises(DomainError):
            lyapunov_coefficients(1.0, 1.0, 3)

    @given(st.floats(0.01, 0.99), st.integers(1, 12))
    def test_conditions_hold_and_agree(self, lam, K):
        c = lyapunov_coefficients(lam, 1.0, K)
        ch = c.checks()
        assert c.verify()
        # the two coefficient conditions are the same statement written two ways
        assert ch["b_i > lam/(Us-lam) * a_{i+1}"] == ch["Us*b_i - lam*a_i > 0"]


class TestDrift:
    def test_k1_is_quadratic_mm1(self):
        p = ModelParams(1, 0.5, 1.0, 1.0)
        c = lyapunov_coefficients(0.5, 1.0, 1)
        for n in (1, 2, 7, 50):
            d = drift_qv(SwarmState(1, {0: n}), p, c)
            assert d.qv_exact == Fraction(1, 2) * (n + Fraction(1, 2)) - (n - Fraction(1, 2))

    def test_empty_state(self):
        p = ModelParams(3, 0.9, 1.0, 1.0)
        c = lyapunov_coefficients(0.9, 1.0, 3)
        d = drift_qv(SwarmState.empty(3), p, c)
        assert d.qv_exact == Fraction(0.9) * sum(Fraction(v) for v in c.b) / 2

    def test_potential(self):
        c = lyapunov_coefficients(0.5, 1.0, 2)
        x = SwarmState.from_pieces(2, {(): 2, (1,): 3})
        assert potential(x, c) == Fraction(1.01) * 4 / 2 + 25 / Fraction(2)

    @given(swarm_states(max_count=50), st.floats(0.05, 0.95), st.sampled_from([0.5, 1.0, 3.0]))
    def test_exact_below_bound(self, x, lam, mu):
        p = ModelParams(x.K, lam, mu, 1.0)
        c = lyapunov_coefficients(lam, 1.0, x.K)
        d = drift_qv(x, p, c)
        assert d.qv_exact <= d.bound_exact
        assert drift_bound(x, p, c, exact=False) == pytest.approx(float(d.bound_exact), rel=1e-9, abs=1e-9)

    def test_bound_tight_on_single_stratum(self):
        p = ModelParams(3, 0.9, 1.0, 1.0)
        c = lyapunov_coefficients(0.9, 1.0, 3)
        d = drift_qv(SwarmState(3, {0b001: 40}), p, c)
        assert d.qv_exact == d.bound_exact


class TestCertificate:
    def test_k2(self):
        cert = drift_region_check(ModelParams(2, 0.5, 1, 1), samples=200, rng=1)
        assert cert.found and cert.violations == 0 and cert.worst_ratio <= -cert.epsilon

    def test_near_capacity_needs_larger_region(self):
        c9 = drift_region_check(ModelParams(3, 0.9, 1, 1), samples=0)
        c99 = drift_region_check(ModelParams(3, 0.99, 1, 1), samples=100, rng=2)
        assert c99.found and c99.violations == 0
        assert c99.L > 1e3 * c9.L

    def test_over_capacity_reports_failure(self):
        cert = drift_region_check(ModelParams(3, 1.2, 1, 1))
        assert not cert.found and "infeasible" in cert.reason

    def test_custom_sampler(self):
        calls = []

        def sampler(K, low, high, count, rng):
            calls.append((low, high))
            return sample_states(K, low, high, count, rng)

        cert = drift_region_check(ModelParams(2, 0.5, 1, 1), state_sampler=sampler, samples=20, rng=3)
        assert cert.sampled == 20 and calls == [(cert.L, 10 * cert.L)]

    def test_empty_grid(self):
        cert = drift_region_check(ModelParams(2, 0.5, 1, 1), eta_grid=[0.9])
        assert not cert.found

    def test_sampler_range(self):
        states = sample_states(3, 100, 1000, 50, np.random.default_rng(0), eta=0.01)
        assert all(100 <= x.total <= 1000 for x in states)
        concentrated = states[1::2]
        assert all(max(v for _, v in x.items()) >= 0.99 * x.total for x in concentrated)
