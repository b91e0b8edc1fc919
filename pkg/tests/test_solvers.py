from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avgtd import (FeatureMap, PolicyMarkovChain, StructuralError, analyze, build_problem, dirichlet_seminorm, eta1,
                   expected_update_field, projected_bellman_residual, solve_theta_star)
from avgtd.solvers import bellman_system
from avgtd.td import StepSchedule, run_mean_field

from instances import random_chain, random_instance

seeds = st.integers(0, 2**32 - 1)
FLAT2 = PolicyMarkovChain(np.full((2, 2), 0.5), [1.0, 0.0])


def test_tabular_two_state():
    prob = build_problem(FLAT2, FeatureMap.tabular(2))
    np.testing.assert_allclose(prob.theta_star, [0.5, -0.5], atol=1e-15)
    assert projected_bellman_residual(prob) <= 1e-12
    # hbar(0) = Phi^T D Pi R = D (R - g e) = 0.5 * [0.5, -0.5]
    np.testing.assert_allclose(expected_update_field(prob, np.zeros(2)), [0.25, -0.25], atol=1e-15)


def test_single_feature_hand_solution():
    # Pi P = 0 for this P, so A = Phi^T D Phi = 1/2 and b = Phi^T D Pi R = 1/(2 sqrt 2)
    phi = np.array([[1.0], [-1.0]]) / np.sqrt(2)
    A, b = bellman_system(FLAT2, np.array([0.5, 0.5]), phi)
    assert A[0, 0] == pytest.approx(0.5, abs=1e-15)
    assert b[0] == pytest.approx(0.5 / np.sqrt(2), abs=1e-15)
    prob = build_problem(FLAT2, FeatureMap(phi))
    assert prob.theta_star[0] == pytest.approx(1 / np.sqrt(2), abs=1e-15)
    np.testing.assert_allclose(prob.w_lin, [0.5, -0.5], atol=1e-15)


def test_zero_rewards_give_zero():
    chain = PolicyMarkovChain(random_chain(np.random.default_rng(0), 6).P, np.zeros(6))
    feats = FeatureMap.normalized(np.random.default_rng(1).normal(size=(6, 3)))
    np.testing.assert_array_equal(build_problem(chain, feats).theta_star, 0.0)


def test_rank_deficient_features_rejected():
    chain = random_chain(np.random.default_rng(0), 4)
    phi = np.full((4, 2), 0.5)
    with pytest.raises(StructuralError, match="rank"):
        solve_theta_star(chain, analyze(chain), SimpleNamespace(phi=phi))


@settings(max_examples=60)
@given(seeds)
def test_fixed_point_and_field(seed):
    rng = np.random.default_rng(seed)
    chain, a, feats = random_instance(rng)
    prob = build_problem(chain, feats, a)
    assert projected_bellman_residual(prob) <= 1e-9
    assert np.max(np.abs(expected_update_field(prob, prob.theta_star))) <= 1e-10
    # a unit perturbation moves the residual by at least sigma_min(A) >= eta1
    A, b = bellman_system(chain, a.mu, feats.phi)
    delta = rng.normal(size=feats.d)
    delta /= np.linalg.norm(delta)
    e1 = eta1(feats, chain, a.mu)
    assert projected_bellman_residual(prob, prob.theta_star + delta) >= e1 / (1 + np.linalg.norm(b)) * (1 - 1e-9)
    assert np.linalg.svd(A, compute_uv=False)[-1] >= e1 * (1 - 1e-6)


@settings(max_examples=60)
@given(seeds, st.integers(2, 25))
def test_tabular_theta_star_is_w_star(seed, n):
    chain = random_chain(np.random.default_rng(seed), n, sparsity=0.5)
    prob = build_problem(chain, FeatureMap.tabular(n))
    np.testing.assert_allclose(prob.w_lin, prob.analysis.w_star, atol=1e-8)


@settings(max_examples=60)
@given(seeds)
def test_drift_identity(seed):
    rng = np.random.default_rng(seed)
    chain, a, feats = random_instance(rng)
    prob = build_problem(chain, feats, a)
    delta = rng.normal(size=feats.d)
    v = feats.phi @ delta
    drift = delta @ expected_update_field(prob, prob.theta_star + delta)
    expected = -(dirichlet_seminorm(v, chain, a.mu) ** 2 + (a.mu @ v) ** 2)
    assert drift == pytest.approx(expected, abs=1e-10 * (1 + delta @ delta))
    assert drift <= -eta1(feats, chain, a.mu) * (delta @ delta) + 1e-10


@settings(max_examples=20)
@given(seeds, st.integers(2, 10))
def test_deterministic_recursion_geometric(seed, n):
    chain = random_chain(np.random.default_rng(seed), n, sparsity=0.4)
    prob = build_problem(chain, FeatureMap.tabular(n))
    eta = eta1(np.eye(n), chain, prob.analysis.mu)
    alpha = eta / 18
    w = prob.analysis.w_star
    K = 400
    theta = np.zeros(n)
    errs = [np.sum(w**2)]
    for _ in range(K):
        theta = theta + alpha * expected_update_field(prob, theta)
        errs.append(np.sum((theta - w) ** 2))
    k = np.arange(K + 1)
    assert np.all(np.array(errs) <= (1 - alpha * eta) ** k * np.sum(w**2) + 1e-8)
    # the compiled mean-field loop reproduces the reference recursion
    log_t = np.array([0, 1, 10, K])
    trace = run_mean_field(prob, StepSchedule("constant", alpha=alpha), K, log_t)
    np.testing.assert_allclose(np.sum((trace.theta - w) ** 2, axis=1), np.array(errs)[log_t], rtol=1e-9, atol=1e-14)


@settings(max_examples=40)
@given(seeds, st.floats(-50, 50))
def test_reward_shift_moves_gain_only(seed, c):
    chain = random_chain(np.random.default_rng(seed), 8, sparsity=0.5)
    shifted = PolicyMarkovChain(chain.P, chain.R + c)
    a, b = analyze(chain), analyze(shifted)
    assert b.g == pytest.approx(a.g + c, abs=1e-9)
    np.testing.assert_allclose(b.w_star, a.w_star, atol=1e-9)
