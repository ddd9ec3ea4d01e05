import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onebitcs.adaptive import (
    AdaptiveParams,
    AdaptiveState,
    adaptive_step,
    batch_T,
    probe_init_lambda,
    run_adaptive,
    run_adaptive_trace,
)
from onebitcs.errors import DomainError
from onebitcs.model import (
    MATRIX_STREAM,
    SIGNAL_STREAM,
    Adaptive,
    Fixed,
    SignalModel,
    derive_seed,
    make_instance,
    measure,
    sample_matrix,
    sample_signal,
)


def test_params_invariants():
    AdaptiveParams()
    for kw in ({"target_T": 0.0}, {"target_T": 1.0}, {"gamma": 0.0}, {"gamma": 1.0},
               {"delta": -0.1}, {"lambda0": math.nan}):
        with pytest.raises(DomainError):
            AdaptiveParams(**kw)


def test_first_steps():
    p = AdaptiveParams(target_T=0.8, gamma=0.8, delta=0.01, lambda0=0.5)
    s0 = AdaptiveState.initial(p)
    row, x0 = np.array([1.0]), np.array([1.0])
    y, s1 = adaptive_step(s0, row, x0, p)
    assert y == 1 and (s1.U, s1.V, s1.T_est) == (1.0, 1.0, 1.0)
    assert s1.lambda_cur == pytest.approx(0.49)
    y, s2 = adaptive_step(s1, row, x0, p)
    assert y == 1 and s2.U == pytest.approx(1.8) and s2.V == pytest.approx(1.8) and s2.T_est == 1.0
    assert s2.k == 2
    with pytest.raises(DomainError):
        adaptive_step(s0, np.ones(2), x0, p)


def test_measurement_uses_threshold_before_update():
    # z + lambda = 0 exactly at lambda0, so y = +1 by the sign(0) convention
    p = AdaptiveParams(target_T=0.8, gamma=0.8, delta=0.5, lambda0=1.0)
    y, s = adaptive_step(AdaptiveState.initial(p), np.array([1.0]), np.array([-1.0]), p)
    assert y == 1 and s.lambda_cur == 0.5


def test_exact_hit_does_not_move():
    # from U = V = 1 a -1 output gives T = 0.5 / 1.5 exactly; a target equal to it leaves lambda alone
    s = AdaptiveState(k=1, U=1.0, V=1.0, T_est=1.0, lambda_cur=0.0)
    p = AdaptiveParams(target_T=0.5 / 1.5, gamma=0.5, delta=0.1, lambda0=0.0)
    y, s2 = adaptive_step(s, np.array([1.0]), np.array([-1.0]), p)
    assert y == -1 and s2.T_est == p.target_T
    assert s2.lambda_cur == s.lambda_cur


def test_batch_T_examples():
    assert batch_T([1] * 7, 0.8) == 1.0
    assert batch_T([-1] * 7, 0.8) == 0.0
    assert batch_T([-1, 1], 0.5) == pytest.approx(2 / 3)
    with pytest.raises(DomainError):
        batch_T([], 0.5)


@pytest.mark.parametrize("gamma", [0.5, 0.8, 0.95])
def test_online_matches_batch(gamma):
    rng = np.random.default_rng(int(gamma * 100))
    y = rng.choice([-1, 1], size=1000)
    # drive the recursion with projections that reproduce y exactly at lambda = 0
    p = AdaptiveParams(target_T=0.8, gamma=gamma, delta=0.0, lambda0=0.0)
    trace = run_adaptive_trace(np.array([1.0]), y.astype(float)[:, None], p)
    assert np.array_equal(trace.y, y)
    for k in range(1, 1001):
        assert abs(trace.T_est[k - 1] - batch_T(y[:k], gamma)) <= 1e-12


def test_alternating_stream_matches_batch():
    p = AdaptiveParams(gamma=0.8, delta=0.0, lambda0=0.0)
    y = np.tile([1.0, -1.0], 200)
    trace = run_adaptive_trace(np.array([1.0]), y[:, None], p)
    ref = np.array([batch_T(y[:k], 0.8) for k in range(1, y.size + 1)])
    assert np.max(np.abs(trace.T_est - ref)) <= 1e-12


def test_trace_matches_stepwise(kernels):
    p = AdaptiveParams(target_T=0.75, gamma=0.9, delta=0.02, lambda0=0.3)
    rng = np.random.default_rng(3)
    phi, x0 = rng.normal(size=(300, 10)) / math.sqrt(10), rng.normal(size=10)
    trace = run_adaptive_trace(x0, phi, p, kernels=kernels)
    s = AdaptiveState.initial(p)
    for k in range(300):
        assert trace.lambda_vec[k] == s.lambda_cur
        y, s = adaptive_step(s, phi[k], x0, p)
        assert y == trace.y[k] and trace.T_est[k] == pytest.approx(s.T_est, abs=1e-15)
    assert trace.final_state.lambda_cur == pytest.approx(s.lambda_cur, abs=1e-12)
    rows = list(trace.rows())
    assert rows[0]["k"] == 1 and set(rows[0]) == {"k", "lambda", "y", "T_est"}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.001, 0.1), st.floats(0.05, 0.95))
def test_bounded_drift_and_steering(seed, delta, target):
    p = AdaptiveParams(target_T=target, gamma=0.8, delta=delta, lambda0=0.2)
    rng = np.random.default_rng(seed)
    phi, x0 = rng.normal(size=(200, 6)), rng.normal(size=6)
    tr = run_adaptive_trace(x0, phi, p)
    lam = np.append(tr.lambda_vec, tr.final_state.lambda_cur)
    k = np.arange(lam.size)
    assert np.all(np.abs(lam - p.lambda0) <= k * delta + 1e-12)
    raise_needed = tr.T_est < target
    assert np.all(lam[1:][raise_needed] >= lam[:-1][raise_needed])


def test_zero_step_reduces_to_fixed():
    model = SignalModel(0.0625, 2.0)
    p = AdaptiveParams(delta=0.0, lambda0=0.5)
    a = make_instance(64, 128, model, Adaptive(p), seed=4)
    b = make_instance(64, 128, model, Fixed(0.5), seed=4)
    assert np.all(a.lambda_vec == 0.5)
    assert np.array_equal(a.phi, b.phi) and np.array_equal(a.y, b.y)


def test_run_adaptive_contract():
    model = SignalModel(0.0625, 2.0)
    x0 = sample_signal(128, model, 1)
    y, lam, phi = run_adaptive(x0, 256, AdaptiveParams(), seed=7)
    assert phi.shape == (256, 128)
    assert np.array_equal(phi, sample_matrix(256, 128, 7))
    assert np.array_equal(measure(phi, x0, lam), y)
    assert lam[0] == 0.5


def test_probe_examples():
    calls = []

    def mixed(lam, size):
        calls.append(lam)
        return np.array([1, -1] * (size // 2))

    assert probe_init_lambda(mixed, 0.8) == 0.8 and calls == [0.8]

    def positive_until(lam, size):
        return np.ones(size) if lam > 0.1 else np.array([1, -1] * (size // 2))

    got = probe_init_lambda(positive_until, 0.8)
    assert got <= 0.1 and got == 0.8 / 2 ** 3

    # all -1 from zero: step positive, then double
    seen = []

    def negative_until(lam, size):
        seen.append(lam)
        return -np.ones(size) if lam < 0.05 else np.array([1, -1] * (size // 2))

    assert probe_init_lambda(negative_until, 0.0) == 0.08
    assert seen[:2] == [0.0, 0.01]
    with pytest.raises(DomainError):
        probe_init_lambda(mixed, 0.1, probe_size=3)
    # capped rounds
    assert math.isfinite(probe_init_lambda(lambda lam, size: np.ones(size), 1.0))


def test_probe_on_synthetic_model():
    model = SignalModel(0.0625, 2.0)
    rng = np.random.default_rng(11)
    x0 = sample_signal(128, model, derive_seed(5, SIGNAL_STREAM))

    def oracle(lam, size):
        phi = rng.normal(0, 1 / math.sqrt(128), (size, 128))
        return measure(phi, x0, np.full(size, lam))

    lam0 = probe_init_lambda(oracle, 5.0)
    fresh = oracle(lam0, 16)
    assert 0 < np.mean(fresh > 0) < 1 or 0 < np.mean(oracle(lam0, 64) > 0) < 1


@pytest.mark.slow
def test_fig6_steady_state():
    model = SignalModel(0.0625, 2.0)
    p = AdaptiveParams(target_T=0.8, gamma=0.8, delta=0.01, lambda0=0.5)
    finals, fracs = [], []
    for trial in range(100):
        seed = derive_seed(123, trial)
        x0 = sample_signal(128, model, derive_seed(seed, SIGNAL_STREAM))
        phi = sample_matrix(768, 128, derive_seed(seed, MATRIX_STREAM))
        tr = run_adaptive_trace(x0, phi, p)
        finals.append(tr.final_state.lambda_cur)
        fracs.append(np.mean(tr.y[384:] > 0))
    assert abs(np.mean(finals) - 0.2976) <= 0.1
    assert abs(np.mean(fracs) - 0.8) <= 0.05
