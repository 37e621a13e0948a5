import numpy as np
import pytest

from risklqr import (CostSpec, Degenerate, DimensionError, Gaussian, InvalidInput, LinearMap,
                     SystemModel, backward_pass, empirical_cdf, estimate, lqr_cost, noise_stats,
                     risk_value, rollout)
from risklqr.experiments import bernoulli_shock, scalar_shock_plant
from risklqr.riccati import AffinePolicy
from risklqr.sim import _batch, default_threads, iter_trajectories, per_rollout_totals, percentile


def fixed_policy(N, K, offset):
    K = np.atleast_2d(K)
    p, n = K.shape
    return AffinePolicy(K=np.repeat(K[None], N, axis=0), l=np.tile(offset, (N, 1)),
                        h=np.zeros((N, p)), V=np.zeros((N + 1, n, n)), S=np.zeros((N + 1, n, n)),
                        T=np.zeros((N + 1, n, n)), c=np.zeros(N + 1), mu=0.0)


def two_state_problem(N=10):
    model = SystemModel([[0.9, 0.2], [-0.1, 0.7]], [[0.0], [1.0]], [0.5, -1.0], N)
    cost = CostSpec(np.diag([1.0, 0.5]), [[0.2]], Qc=[[1.0, 0.3], [0.3, 2.0]])
    noise = LinearMap([[1.0], [0.5]], bernoulli_shock(4.0))
    pol = fixed_policy(N, [[0.1, -0.4]], [0.3])
    return model, cost, noise, pol


def test_degenerate_noise_with_zero_dynamics():
    model = SystemModel(np.zeros((2, 2)), np.eye(2), [3.0, 4.0], 5)
    cost = CostSpec(np.eye(2), np.eye(2))
    tr = rollout(fixed_policy(5, np.zeros((2, 2)), [0.0, 0.0]), model,
                 Degenerate([1.5, -2.0]), cost, seed=1, rollout_index=0)
    np.testing.assert_array_equal(tr.states[0], [3.0, 4.0])
    np.testing.assert_array_equal(tr.states[1:], np.tile([1.5, -2.0], (5, 1)))
    assert not tr.pred_errors.any()


def test_rollout_is_deterministic():
    model, cost, noise, pol = two_state_problem()
    a = rollout(pol, model, noise, cost, seed=99, rollout_index=17)
    b = rollout(pol, model, noise, cost, seed=99, rollout_index=17)
    for f in ("states", "inputs", "stage_penalties", "pred_errors"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    c = rollout(pol, model, noise, cost, seed=100, rollout_index=17)
    assert not np.array_equal(a.states, c.states)


def test_deadbeat_law_on_shock_plant():
    model, cost = scalar_shock_plant(N=40, x0=2.5)
    pol = fixed_policy(40, [[-1.0]], [-1.0])
    for r in range(5):
        tr = rollout(pol, model, bernoulli_shock(4.0), cost, seed=3, rollout_index=r)
        assert set(np.unique(tr.states[1:, 0])) <= {-1.0, 3.0}
        np.testing.assert_array_equal(tr.inputs[:, 0], -tr.states[:-1, 0] - 1.0)


def test_trajectory_shapes_and_penalties():
    model, cost, noise, pol = two_state_problem(N=7)
    tr = rollout(pol, model, noise, cost, seed=0, rollout_index=0)
    assert tr.states.shape == (8, 2) and tr.inputs.shape == (7, 1)
    assert tr.pred_errors.shape == (7,) and tr.stage_penalties.shape == (8,)
    expected = np.einsum("ti,ij,tj->t", tr.states, cost.Q, tr.states)
    np.testing.assert_allclose(tr.stage_penalties, expected, rtol=1e-14)


def test_rollouts_match_batched_totals():
    model, cost, noise, pol = two_state_problem()
    totals, risks = per_rollout_totals(pol, model, noise, cost, seed=5, n_rollouts=6, threads=1)
    for r, tr in enumerate(iter_trajectories(pol, model, noise, cost, 5, 6)):
        j = tr.stage_penalties.sum() + float(np.sum(tr.inputs @ cost.R * tr.inputs))
        assert totals[r] == pytest.approx(j, rel=1e-12)
        assert risks[r] == pytest.approx(np.sum(tr.pred_errors ** 2), rel=1e-12)


def test_dimension_checks():
    model, cost, noise, pol = two_state_problem()
    with pytest.raises(DimensionError):
        rollout(fixed_policy(3, [[0.1, 0.2]], [0.0]), model, noise, cost, 0, 0)
    with pytest.raises(DimensionError):
        rollout(pol, model, Degenerate([0.0]), cost, 0, 0)


def test_estimate_zero_spread_gives_zero_risk():
    model = SystemModel([[0.5, 0.1], [0.0, 0.8]], [[1.0], [0.0]], [1.0, 1.0], 8)
    cost = CostSpec(np.eye(2), [[1.0]])
    rep = estimate(fixed_policy(8, [[-0.2, 0.0]], [0.1]), model, Degenerate([0.3, 0.0]), cost,
                   seed=1, n_rollouts=100)
    assert rep.jr_raw_hat == 0.0 and rep.j_se == 0.0


def test_estimate_needs_enough_rollouts():
    model, cost, noise, pol = two_state_problem()
    with pytest.raises(InvalidInput):
        estimate(pol, model, noise, cost, 0, 99)


@pytest.mark.slow
def test_estimates_agree_with_closed_forms():
    model, cost, noise, _ = two_state_problem(N=10)
    stats = noise_stats(noise, cost.Qc)
    pol = backward_pass(model, cost, stats, 0.5)
    rep = estimate(pol, model, noise, cost, seed=2, n_rollouts=100_000)
    assert abs(rep.j_hat - lqr_cost(pol, model, stats, cost)) <= 3 * rep.j_se
    shifted = (risk_value(pol, model, stats).jr + model.N * stats.m4
               - 4 * model.N * stats.trace_wqc_sq())
    assert abs(rep.jr_raw_hat - shifted) <= 3 * rep.jr_raw_se


def test_estimate_agrees_with_cost_under_gaussian_noise():
    model = SystemModel([[1.0, 0.5], [0.0, 1.0]], [[0.1], [0.5]], [1.0, 0.0], 15)
    cost = CostSpec(np.diag([1.0, 0.1]), [[1.0]])
    noise = Gaussian([0.1, 0.0], [[0.2, 0.05], [0.05, 0.1]])
    stats = noise_stats(noise, cost.Qc)
    pol = backward_pass(model, cost, stats, 1.0)
    rep = estimate(pol, model, noise, cost, seed=8, n_rollouts=20_000)
    assert abs(rep.j_hat - lqr_cost(pol, model, stats, cost)) <= 3 * rep.j_se


def test_estimate_invariant_to_partition(monkeypatch):
    model, cost, noise, pol = two_state_problem()
    ref = estimate(pol, model, noise, cost, seed=4, n_rollouts=1000, threads=1, chunk=1000)
    for threads, chunk in ((1, 7), (3, 64), (4, 333)):
        rep = estimate(pol, model, noise, cost, seed=4, n_rollouts=1000, threads=threads,
                       chunk=chunk)
        assert rep == ref
    monkeypatch.setenv("RISKLQR_THREADS", "2")
    assert default_threads() == 2
    assert estimate(pol, model, noise, cost, seed=4, n_rollouts=1000, chunk=100) == ref


def test_thread_env_validation(monkeypatch):
    monkeypatch.setenv("RISKLQR_THREADS", "zero")
    with pytest.raises(InvalidInput):
        default_threads()
    monkeypatch.setenv("RISKLQR_THREADS", "0")
    with pytest.raises(InvalidInput):
        default_threads()


@pytest.mark.slow
def test_prediction_errors_have_zero_conditional_mean():
    model, cost, noise, pol = two_state_problem(N=6)
    stats = noise_stats(noise, cost.Qc)
    _, _, _, _, deltas = _batch(pol, model, noise, cost, stats, 11, 0, 100_000, keep=True)
    mean = deltas.mean(axis=0)
    se = deltas.std(axis=0, ddof=1) / np.sqrt(deltas.shape[0])
    assert np.all(np.abs(mean) <= 5 * se)


def test_empirical_cdf_examples():
    assert empirical_cdf([5]) == [(5.0, 1.0)]
    assert empirical_cdf([1, 2, 2, 4]) == [(1.0, 0.25), (2.0, 0.75), (4.0, 1.0)]
    assert empirical_cdf([4, 2, 1, 2]) == empirical_cdf([1, 2, 2, 4])
    with pytest.raises(InvalidInput):
        empirical_cdf([])


def test_percentile_reference():
    assert percentile(np.arange(101), 95) == pytest.approx(95.0)
