import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_window
from wncs.plant import IDLE, ContractViolation, TrafficState, sample_sensors
from wncs.schedulers import (AgeMinimal, RandomPolicy, SlidingWindow, VarianceMinimal,
                             WindowModel, age_minimal, dp_transition, greedy_decide,
                             random_policy, sliding_window_decide, variance_minimal)

VARS = (0.8, 0.02, 0.05, 0.2)


def model(sig=VARS, p=(1.0, 0.4, 0.4, 0.4), t_d=1, cap=16, k=0.5, a=1.3, sp2=0.1):
    return WindowModel(a, sp2, k, tuple(sig), tuple(p), t_d, cap)


def test_age_minimal_examples():
    assert age_minimal((3, 5, 3, 7), VARS).sensor == 2
    assert age_minimal((None, 4, None, None), VARS).sensor == 1
    assert age_minimal((None,) * 4, VARS).idle


def test_variance_minimal_examples():
    assert variance_minimal((3, 5, 3, 7), VARS).sensor == 1
    assert variance_minimal((3, None, 3, 7), VARS).sensor == 2
    assert variance_minimal((6, 2, 4), (0.1, 0.1, 0.1)).sensor == 1
    assert variance_minimal((None,) * 4, VARS).idle


def test_random_policy_frequencies():
    rng = np.random.default_rng(4)
    picks = [random_policy((1, 2, 3, 4), u).sensor for u in rng.random(10_000)]
    freq = np.bincount(picks, minlength=4) / 10_000
    assert np.all((freq >= 0.23) & (freq <= 0.27))
    assert {random_policy((None, 3, None), u).sensor for u in rng.random(50)} == {1}
    assert random_policy((None, None), 0.3).idle


def _random_traffic(rng, S=64, M=4, t=30):
    tr = TrafficState(S, VARS[:M], 1, 64)
    for s in range(1, t + 1):
        sample_sensors(tr, np.zeros(S), s, rng.random((S, M)) < 0.3, np.zeros((S, M)))
        tr.fresh &= rng.random((S, M)) < 0.8
    return tr, t


def _scalar_ages(tr, t):
    el, ages = tr.eligible(t), tr.ages(t)
    return [tuple(int(g) if e else None for g, e in zip(ar, er)) for ar, er in zip(ages, el)]


def test_batch_baselines_match_scalar_rules():
    rng = np.random.default_rng(0)
    for _ in range(10):
        tr, t = _random_traffic(rng)
        u = rng.random(tr.n_episodes)
        rows = _scalar_ages(tr, t)
        for pol, fn in ((AgeMinimal(VARS), lambda g, s: age_minimal(g, VARS)),
                        (VarianceMinimal(VARS), lambda g, s: variance_minimal(g, VARS)),
                        (RandomPolicy(), lambda g, s: random_policy(g, u[s]))):
            got = pol.decide(tr, None, t, u)
            want = [fn(g, s).sensor for s, g in enumerate(rows)]
            assert got.tolist() == [IDLE if w is None else w for w in want]


def test_transition_examples():
    m = model(p=(1.0, 1.0, 1.0, 1.0))
    succ = dp_transition((3, 5, None, 2), 0, m)
    assert succ == [(1.0, (1, 1, 1, 1))]
    m2 = model(sig=(0.1, 0.2), p=(1.0, 0.4))
    succ = dp_transition((1, 3), 0, m2)
    assert sorted(succ) == sorted([(0.4, (1, 1)), (0.6, (1, 4))])
    with pytest.raises(ContractViolation):
        dp_transition((None, 3), 0, m2)


def test_transition_saturates_at_cap():
    m = model(sig=(0.1, 0.2), p=(1.0, 0.5), cap=6)
    assert (0.5, (1, 6)) in dp_transition((1, 6), 0, m)


@given(st.lists(st.one_of(st.none(), st.integers(1, 16)), min_size=1, max_size=5),
       st.lists(st.floats(0.05, 1.0), min_size=5, max_size=5), st.data())
def test_transition_probabilities_sum_to_one(ages, ps, data):
    M = len(ages)
    m = model(sig=[0.1] * M, p=ps[:M])
    el = [i for i, g in enumerate(ages) if g is not None]
    d = data.draw(st.sampled_from(el)) if el else None
    succ = dp_transition(tuple(ages), d, m)
    assert sum(p for p, _ in succ) == pytest.approx(1.0, abs=1e-12)
    assert len(succ) <= 2 ** sum(p < 1 for p in ps[:M])
    if d is not None:
        assert all(nxt[d] in (None, m.t_d) for _, nxt in succ)


def test_prefers_precise_sensor_at_equal_age():
    m = model(sig=(0.8, 0.02), p=(1.0, 1.0))
    for n in (1, 2, 3):
        assert sliding_window_decide((1, 1), [], n, m).sensor == 1


def test_window_must_be_positive():
    with pytest.raises(ValueError):
        sliding_window_decide((1,), [], 0, model(sig=(0.1,), p=(1.0,)))


def test_greedy_degenerate_cases():
    m = model()
    assert greedy_decide((None,) * 4, [1, 2], m).idle
    assert greedy_decide((None, 3, None, None), [1, 2], m).sensor == 1
    assert sliding_window_decide((None,) * 4, [1], 3, m).idle


def _random_state(rnd, M, cap, t_d=1, hist_len=20):
    ages = tuple(rnd.choice([None] + list(range(t_d, cap + 1))) for _ in range(M))
    hist = [rnd.choice([-1] + list(range(t_d, cap + 1))) for _ in range(rnd.randint(0, hist_len))]
    return ages, hist


@pytest.mark.parametrize("t_d", [0, 1, 2])
def test_greedy_equals_window_one(t_d):
    rnd = random.Random(t_d)
    m = model(sig=(0.3, 0.02, 0.05, 0.2), t_d=t_d)
    solver = SlidingWindow(m)
    for _ in range(1500):
        ages, hist = _random_state(rnd, 4, m.age_cap, t_d)
        assert solver.decide(ages, hist, 1).sensor == greedy_decide(ages, hist, m).sensor


@settings(max_examples=40)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2), st.integers(0, 10 ** 6),
       st.booleans())
def test_dp_matches_brute_force(M, N, t_d, seed, exact):
    rnd = random.Random(seed)
    cap = 6
    sig = tuple(rnd.choice([0.02, 0.05, 0.2, 0.8]) for _ in range(M))
    p = tuple(rnd.choice([1.0, 0.3, 0.6]) for _ in range(M))
    m = WindowModel(1.3, 0.1, rnd.choice([0.3, 0.5, 0.7]), sig, p, t_d, cap, exact)
    ages, hist = _random_state(rnd, M, cap, t_d, hist_len=8)
    dec = sliding_window_decide(ages, hist, N, m)
    ref = brute_force_window(ages, hist, N, m)
    assert dec.value == pytest.approx(ref, rel=1e-9)
    if dec.sensor is not None:
        assert ages[dec.sensor] is not None


@settings(max_examples=30)
@given(st.integers(0, 10 ** 6), st.floats(0.01, 100))
def test_decisions_scale_invariant(seed, c):
    rnd = random.Random(seed)
    sig = tuple(rnd.choice([0.02, 0.05, 0.2, 0.8]) for _ in range(3))
    m1 = model(sig=sig, p=(1.0, 0.4, 0.6))
    m2 = model(sig=tuple(c * s for s in sig), p=(1.0, 0.4, 0.6), sp2=0.1 * c)
    s1, s2 = SlidingWindow(m1), SlidingWindow(m2)
    for _ in range(20):
        ages, hist = _random_state(rnd, 3, 16)
        for n in (1, 2):
            assert s1.decide(ages, hist, n).sensor == s2.decide(ages, hist, n).sensor
