import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wncs.config import SystemParams
from wncs.noise import NoiseStreams
from wncs.plant import (IDLE, ContractViolation, PlantState, TrafficState, channel_deliver,
                        channel_transmit, sample_sensors, step_plant)

P = SystemParams(1.3, 1.0, 0.1)


def one(x):
    return np.array([x], dtype=float)


def test_step_plant_noise_free():
    assert step_plant(PlantState(0, one(1.0)), 0.0, P, w=0.0).x[0] == pytest.approx(1.3)
    ps = step_plant(PlantState(4, one(1.0)), -0.8879, P, w=0.0)
    assert ps.x[0] == pytest.approx(0.4121)
    assert ps.t == 5


def test_process_noise_variance():
    streams = NoiseStreams([7], 0.1, [0.1], [1.0], block=100_000)
    w = np.concatenate([streams.process(t) for t in range(100_000)])
    assert 0.095 <= w.var() <= 0.105


def test_step_plant_draws_from_rng():
    ps = step_plant(PlantState(0, np.zeros(3)), np.zeros(3), P, rng=np.random.default_rng(0))
    assert np.all(ps.x != 0)


def _traffic(sig=(0.1, 0.2), t_d=1, n=1, cap=64):
    return TrafficState(n, sig, t_d, cap)


def test_always_observing_sensor_regenerates_every_slot():
    tr = _traffic((0.1,))
    for t in range(1, 20):
        sample_sensors(tr, one(0.0), t, np.ones((1, 1), bool), np.zeros((1, 1)))
        assert tr.gen[0, 0] == t
        assert tr.ages(t)[0, 0] == tr.t_d


def test_observe_rate():
    streams = NoiseStreams([3], 0.1, [0.1], [0.4])
    obs = np.array([streams.sensing(t)[0][0, 0] for t in range(10_000)])
    assert 0.38 <= obs.mean() <= 0.42


def test_never_observed_sensor_is_ineligible():
    tr = _traffic()
    sample_sensors(tr, one(0.0), 1, np.array([[True, False]]), np.zeros((1, 2)))
    assert tr.eligible(1).tolist() == [[True, False]]
    assert tr.ages(1)[0, 1] == -1
    with pytest.raises(ContractViolation):
        channel_transmit(tr, np.array([1]), 1)


def test_sensor_keeps_previous_sample():
    tr = _traffic((0.1,))
    sample_sensors(tr, one(2.0), 1, np.ones((1, 1), bool), np.full((1, 1), 0.5))
    sample_sensors(tr, one(9.0), 2, np.zeros((1, 1), bool), np.full((1, 1), 7.0))
    assert tr.gen[0, 0] == 1 and tr.value[0, 0] == 2.5
    assert tr.ages(2)[0, 0] == 2


def test_delivery_slot_and_age():
    tr = _traffic()
    sample_sensors(tr, one(1.0), 8, np.array([[True, False]]), np.zeros((1, 2)))
    channel_transmit(tr, np.array([0]), 9)
    flight = tr.in_flight(9)[0]
    assert [(p.sensor, p.generated, p.delivery) for p in flight] == [(0, 8, 10)]
    got, y, tau, sig, d = channel_deliver(tr, 9)
    assert not got[0]
    got, y, tau, sig, d = channel_deliver(tr, 10)
    assert got[0] and tau[0] == 2 and sig[0] == 0.1 and y[0] == 1.0 and d[0] == 0


def test_delivery_at_t_plus_td():
    tr = _traffic()
    sample_sensors(tr, one(1.0), 10, np.ones((1, 2), bool), np.zeros((1, 2)))
    channel_transmit(tr, np.array([1]), 10)
    assert tr.in_flight(10)[0][0].delivery == 11
    assert channel_deliver(tr, 11)[0][0]


def test_zero_delay_delivers_same_slot():
    tr = _traffic(t_d=0)
    sample_sensors(tr, one(1.0), 3, np.ones((1, 2), bool), np.zeros((1, 2)))
    channel_transmit(tr, np.array([0]), 3)
    got, _, tau, _, _ = channel_deliver(tr, 3)
    assert got[0] and tau[0] == 0


def test_resending_without_new_observation_fails():
    tr = _traffic()
    sample_sensors(tr, one(1.0), 1, np.ones((1, 2), bool), np.zeros((1, 2)))
    channel_transmit(tr, np.array([0]), 1)
    with pytest.raises(ContractViolation):
        channel_transmit(tr, np.array([0]), 2)


def test_one_packet_per_slot():
    tr = _traffic()
    sample_sensors(tr, one(1.0), 1, np.ones((1, 2), bool), np.zeros((1, 2)))
    channel_transmit(tr, np.array([0]), 1)
    with pytest.raises(ContractViolation):
        channel_transmit(tr, np.array([1]), 1)


def test_fresh_sensor_gives_age_td():
    tr = _traffic((0.1,))
    taus = []
    for t in range(1, 30):
        sample_sensors(tr, one(0.0), t, np.ones((1, 1), bool), np.zeros((1, 1)))
        channel_transmit(tr, np.array([0]), t)
        got, _, tau, _, _ = channel_deliver(tr, t)
        if got[0]:
            taus.append(int(tau[0]))
    assert taus and set(taus) == {1}


def test_nothing_due():
    got, y, tau, sig, d = channel_deliver(_traffic(), 5)
    assert not got[0] and d[0] == IDLE


def test_stale_observations_expire():
    tr = _traffic((0.1,), cap=5)
    sample_sensors(tr, one(0.0), 1, np.ones((1, 1), bool), np.zeros((1, 1)))
    assert tr.eligible(5)[0, 0]
    assert not tr.eligible(6)[0, 0]


@settings(max_examples=60)
@given(st.integers(0, 3), st.lists(st.tuples(st.lists(st.booleans(), min_size=3, max_size=3),
                                              st.integers(0, 3)), min_size=1, max_size=40))
def test_delivered_age_equals_scheduling_age(t_d, script):
    """tau at delivery is the age Delta_d the policy saw when it scheduled."""
    tr = _traffic((0.1, 0.2, 0.3), t_d=t_d)
    expect = {}
    for t, (obs, pick) in enumerate(script, start=1):
        sample_sensors(tr, one(t), t, np.array([obs]), np.zeros((1, 3)))
        el = tr.eligible(t)[0]
        d = pick if pick < 3 and el[pick] else IDLE
        if d != IDLE:
            expect[t + t_d] = int(tr.ages(t)[0, d])
            assert expect[t + t_d] >= t_d
        channel_transmit(tr, np.array([d]), t)
        got, _, tau, _, _ = channel_deliver(tr, t)
        if got[0]:
            assert int(tau[0]) == expect.pop(t)
        else:
            assert t not in expect
