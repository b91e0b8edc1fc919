import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avgtd import (PolicyMarkovChain, StructuralError, ParameterError, analyze, make_ergodic, mixing_fit,
                   relative_value_function, stationary_distribution, validate_chain)
from avgtd.chain import chain_from_dict, chain_to_dict, load_chain, mixing_distances, save_chain

from instances import power_iteration, random_chain

seeds = st.integers(0, 2**32 - 1)


def chain(P, R=None):
    P = np.asarray(P, dtype=float)
    return PolicyMarkovChain(P, np.zeros(len(P)) if R is None else R)


# --- validation -----------------------------------------------------------------

def test_validate_passes_doubly_stochastic():
    assert validate_chain(chain([[0.5, 0.5], [0.5, 0.5]])).passed


def test_validate_flags_reducible():
    rep = validate_chain(chain([[1, 0], [0, 1]]))
    assert not rep.passed and not rep.irreducible
    assert "reducible" in str(rep)


def test_validate_flags_period_two():
    rep = validate_chain(chain([[0, 1], [1, 0]]))
    assert not rep.passed and rep.period == 2
    assert "periodic (period 2)" in str(rep)


def test_validate_period_three_cycle_with_chord():
    # cycles of length 3 only
    assert validate_chain(chain(np.roll(np.eye(3), 1, axis=1))).period == 3
    # a 2-cycle 1 -> 2 -> 1 alongside the 3-cycle makes gcd(2, 3) = 1
    P = np.array([[0, 1, 0], [0, 0, 1], [0.5, 0.5, 0]], dtype=float)
    assert validate_chain(chain(P)).period == 1


def test_validate_reports_bad_rows():
    rep = validate_chain(PolicyMarkovChain(np.array([[0.7, 0.7], [-0.1, 1.1]]), np.zeros(2)))
    assert not rep.passed
    assert rep.negative_entries == 1 and rep.entries_above_one == 1
    assert rep.max_row_sum_deviation == pytest.approx(0.4)


def test_chain_rejects_shape_mismatch():
    with pytest.raises(ParameterError):
        PolicyMarkovChain(np.eye(3), np.zeros(2))
    with pytest.raises(ParameterError):
        PolicyMarkovChain(np.ones((2, 3)) / 3, np.zeros(2))


# --- ergodicity patch ----------------------------------------------------------

def test_make_ergodic_worked_row():
    P = np.zeros((5, 5))
    P[:, 2] = 1.0
    out = make_ergodic(chain(P), 0.1).P
    assert out[0].tolist() == [0.025, 0.025, 0.9, 0.025, 0.025]


def test_make_ergodic_leaves_full_rows():
    out = make_ergodic(chain([[0.3, 0.7], [0.0, 1.0]]), 0.37).P
    assert out[0].tolist() == [0.3, 0.7]


def test_make_ergodic_single_zero():
    out = make_ergodic(chain([[0.0, 1.0], [0.5, 0.5]]), 0.2).P
    np.testing.assert_allclose(out[0], [0.2, 0.8], rtol=0, atol=1e-15)


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1, 1.5])
def test_make_ergodic_rejects_epsilon(eps):
    with pytest.raises(ParameterError):
        make_ergodic(chain([[0, 1], [1, 0]]), eps)


@given(seeds, st.integers(2, 25), st.floats(0.0, 0.95), st.floats(1e-4, 0.99))
def test_make_ergodic_rows_positive_and_stochastic(seed, n, sparsity, eps):
    rng = np.random.default_rng(seed)
    P = rng.random((n, n))
    P[rng.random((n, n)) < sparsity] = 0.0
    P[np.arange(n), rng.integers(0, n, n)] += 1.0
    P /= P.sum(axis=1, keepdims=True)
    out = make_ergodic(chain(P), eps)
    assert np.all(out.P > 0)
    assert np.max(np.abs(out.P.sum(axis=1) - 1.0)) <= 1e-12
    assert validate_chain(out).passed


# --- stationary distribution and relative values ---------------------------------

@pytest.mark.parametrize("P", [[[0.5, 0.5], [0.5, 0.5]], [[0.9, 0.1], [0.1, 0.9]]])
def test_symmetric_chains_uniform(P):
    np.testing.assert_allclose(stationary_distribution(chain(P)), [0.5, 0.5], atol=1e-15)


def test_stationary_asymmetric_two_state():
    P = np.array([[0.5, 0.5], [1.0, 0.0]])
    oracle = power_iteration(P)
    np.testing.assert_allclose(oracle, [2 / 3, 1 / 3], atol=1e-12)
    np.testing.assert_allclose(stationary_distribution(chain(P)), [2 / 3, 1 / 3], atol=1e-12)


def test_stationary_rejects_reducible():
    with pytest.raises(StructuralError):
        stationary_distribution(chain([[1, 0, 0], [0, 1, 0], [0.5, 0, 0.5]]))


@settings(max_examples=60)
@given(seeds, st.integers(2, 20))
def test_stationary_balance_and_power_iteration(seed, n):
    c = random_chain(np.random.default_rng(seed), n, sparsity=0.5)
    mu = stationary_distribution(c)
    assert np.all(mu > 0) and abs(mu.sum() - 1) < 1e-12
    assert np.max(np.abs(mu @ c.P - mu)) <= 1e-10
    np.testing.assert_allclose(mu, power_iteration(c.P), atol=1e-8)


def test_relative_value_constant_rewards():
    c = chain([[0.2, 0.8], [0.6, 0.4]], R=[3.5, 3.5])
    g, w = relative_value_function(c, stationary_distribution(c))
    assert g == pytest.approx(3.5, abs=1e-14)
    np.testing.assert_allclose(w, 0.0, atol=1e-14)


def test_relative_value_two_state():
    c = chain([[0.5, 0.5], [0.5, 0.5]], R=[1.0, 0.0])
    g, w = relative_value_function(c, np.array([0.5, 0.5]))
    assert g == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(w, [0.5, -0.5], atol=1e-15)
    np.testing.assert_allclose(w + g, c.P @ w + c.R, atol=1e-15)


@settings(max_examples=100)
@given(seeds, st.integers(2, 20))
def test_relative_value_bellman_and_centering(seed, n):
    c = random_chain(np.random.default_rng(seed), n)
    mu = stationary_distribution(c)
    g, w = relative_value_function(c, mu)
    assert abs(mu @ w) <= 1e-10
    np.testing.assert_allclose(w + g, c.P @ w + c.R, atol=1e-10)


@settings(max_examples=15)
@given(seeds)
def test_relative_value_matches_series(seed):
    c = random_chain(np.random.default_rng(seed), 10, sparsity=0.6)
    a = analyze(c)
    steps = 10 * a.tau_mix(1e-6)
    E = np.outer(np.ones(c.n), a.mu)
    partial, Pk = np.zeros(c.n), np.eye(c.n)
    for _ in range(steps):
        partial += (Pk - E) @ c.R
        Pk = Pk @ c.P
    assert np.max(np.abs(partial - a.w_star)) < 1e-5


# --- mixing ---------------------------------------------------------------------

def test_mixing_identical_rows_one_step():
    mu = np.array([0.2, 0.3, 0.5])
    c = chain(np.tile(mu, (3, 1)))
    fit = mixing_fit(c, mu, horizon=20)
    assert fit.distances[1] == pytest.approx(0.0, abs=1e-15)
    for eps in (1e-1, 1e-6, 1e-12):
        assert fit.tau_mix(eps) == 1


def test_mixing_symmetric_rate():
    c = chain([[0.9, 0.1], [0.1, 0.9]])
    fit = mixing_fit(c, np.array([0.5, 0.5]), horizon=200)
    d = fit.distances
    np.testing.assert_allclose(d, d[0] * 0.8 ** np.arange(len(d)), rtol=1e-9, atol=1e-15)
    assert fit.C == 1.0
    assert fit.beta == pytest.approx(0.8, abs=1e-7)
    lam2 = np.sort(np.linalg.eigvals(c.P).real)[0]
    assert lam2 == pytest.approx(0.8)


def test_mixing_rejects_horizon():
    c = chain([[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(ParameterError):
        mixing_fit(c, np.array([0.5, 0.5]), horizon=0)


@settings(max_examples=50)
@given(seeds, st.integers(2, 15))
def test_mixing_envelope_tight(seed, n):
    c = random_chain(np.random.default_rng(seed), n, sparsity=0.7)
    mu = stationary_distribution(c)
    fit = mixing_fit(c, mu, horizon=300)
    tau = np.arange(len(fit.distances))
    env = fit.C * fit.beta ** tau
    assert fit.C > 0 and 0 <= fit.beta < 1
    assert np.all(fit.distances <= env * (1 + 1e-12))
    live = (tau >= 1) & (fit.distances > 0)
    if live.any():
        assert np.min(np.abs(env[live] - fit.distances[live]) / env[live]) <= 1e-9


@settings(max_examples=30)
@given(seeds, st.lists(st.floats(1e-10, 2.0), min_size=2, max_size=8))
def test_tau_mix_nonincreasing(seed, eps):
    c = random_chain(np.random.default_rng(seed), 6, sparsity=0.6)
    fit = mixing_fit(c, stationary_distribution(c), horizon=50)
    eps = sorted(eps)
    taus = [fit.tau_mix(e) for e in eps]
    assert all(a >= b for a, b in zip(taus, taus[1:]))
    for e, t in zip(eps, taus):
        if t < len(fit.distances):
            assert fit.distances[t] <= e and (t == 0 or fit.distances[t - 1] > e)


def test_mixing_distances_start_at_worst_start():
    mu = np.array([0.25, 0.75])
    c = chain([[0.25, 0.75], [0.25, 0.75]])
    assert mixing_distances(c, mu, 3)[0] == pytest.approx(1.5)


# --- interchange file -------------------------------------------------------------

def test_chain_file_round_trip(tmp_path):
    c = random_chain(np.random.default_rng(3), 4)
    path = tmp_path / "mdp.json"
    save_chain(c, path, epsilon=0.05)
    doc = json.loads(path.read_text())
    assert doc["version"] == 1 and doc["epsilon"] == 0.05 and doc["n"] == 4
    back = load_chain(path)
    np.testing.assert_array_equal(back.P, c.P)
    np.testing.assert_array_equal(back.R, c.R)


def test_chain_from_dict_rejects_bad_size():
    with pytest.raises(ParameterError):
        chain_from_dict({"n": 3, "P": [[1.0]], "R": [0, 0, 0]})
    with pytest.raises(ParameterError):
        chain_from_dict({"P": [[1.0]]})
    assert chain_to_dict(chain([[1.0]]))["P"] == [[1.0]]
