import numpy as np
import pytest
from oracles import mm1_stationary_mean

from p2pswarm.analysis.uniformization import mm1_transient, tv_distance, uniformization_transient
from p2pswarm.core import ModelParams, SwarmState
from p2pswarm.errors import ContractError, DomainError, TruncationError


def test_time_zero_is_point_mass():
    x0 = SwarmState.from_pieces(2, {(1,): 2})
    res = uniformization_transient(ModelParams(2, 0.5, 1, 1), 0.0, initial=x0)
    law = res.as_dict()
    assert law[x0] == pytest.approx(1.0) and res.leak == 0.0


@pytest.mark.parametrize("t", [0.5, 3.0, 10.0])
def test_k1_matches_mm1_closed_form(t):
    res = uniformization_transient(ModelParams(1, 0.5, 1, 1), t, leak_tol=1e-12)
    want = mm1_transient(0.5, 1.0, t, res.cap)
    assert np.max(np.abs(res.total_law() - want)) <= 1e-8


def test_k1_from_busy_start():
    x0 = SwarmState(1, {0: 4})
    res = uniformization_transient(ModelParams(1, 0.3, 1, 1), 2.0, initial=x0, leak_tol=1e-12)
    want = mm1_transient(0.3, 1.0, 2.0, res.cap, initial=4)
    assert np.max(np.abs(res.total_law() - want)) <= 1e-8


def test_mm1_series_long_time_limit():
    law = mm1_transient(0.5, 1.0, 200.0, 60)
    assert law @ np.arange(61) == pytest.approx(mm1_stationary_mean(0.5, 1.0), rel=1e-6)


def test_mass_conserved():
    res = uniformization_transient(ModelParams(2, 0.5, 1, 1), 10.0)
    assert res.probs.sum() + res.leak == pytest.approx(1.0, abs=1e-12)
    assert res.leak < 1e-6 and (res.probs >= -1e-15).all()


def test_sequential_never_reaches_piece_two_alone():
    # from empty, sequential sources only ever hand out piece 1 before piece 2
    p = ModelParams(2, 0.5, 1, 1)
    seq = uniformization_transient(p, 5.0, policy="sequential")
    rnd = uniformization_transient(p, 5.0, policy="random-useful")
    assert all(x[0b10] == 0 for x in seq.states)
    assert sum(pr for x, pr in rnd.as_dict().items() if x[0b10]) > 0.01


def test_explicit_cap_too_small():
    with pytest.raises(TruncationError) as e:
        uniformization_transient(ModelParams(2, 0.5, 1, 1), 10.0, cap=2)
    assert e.value.leak > 1e-6


def test_large_k_refused():
    with pytest.raises(DomainError):
        uniformization_transient(ModelParams(4, 0.5, 1, 1), 1.0)


def test_cap_below_initial():
    with pytest.raises(ContractError):
        uniformization_transient(ModelParams(2, 0.5, 1, 1), 1.0, initial=SwarmState(2, {0: 5}), cap=3)


def test_tv_distance():
    assert tv_distance({"a": 1.0}, {"b": 1.0}) == 1.0
    assert tv_distance({"a": 0.5, "b": 0.5}, {"a": 0.5, "b": 0.5}) == 0.0
