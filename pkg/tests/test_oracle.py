"""Exact finite-MDP computations used as ground truth everywhere else."""

import numpy as np
import pytest

from acbench import oracle
from acbench.errors import ConfigurationError, FeatureRankError
from acbench.features import TabularFeatureMap
from acbench.policy import TabularSoftmaxPolicy

from conftest import two_state_chain


def _single_state_mdp(gamma=0.9, r=1.0):
    return oracle.FiniteMdp(P=np.ones((1, 1, 1)), R=np.array([[r]]), gamma=gamma)


def _dead_pair_setup():
    """Two actions but a policy that never takes the second one."""
    P = np.array([[[0.9, 0.1], [0.5, 0.5]],
                  [[0.2, 0.8], [0.5, 0.5]]])
    R = np.zeros((2, 2))
    m = oracle.FiniteMdp(P=P, R=R, gamma=0.9)
    pol = TabularSoftmaxPolicy.from_table(np.array([[1.0, 0.0], [1.0, 0.0]]))
    return m, pol


def test_mdp_validation():
    with pytest.raises(ConfigurationError):
        oracle.FiniteMdp(P=np.full((1, 1, 1), 0.5), R=np.zeros((1, 1)), gamma=0.9)
    with pytest.raises(ConfigurationError):
        oracle.FiniteMdp(P=np.ones((1, 1, 1)), R=np.zeros((2, 1)), gamma=0.9)
    with pytest.raises(ConfigurationError):
        oracle.FiniteMdp(P=np.ones((1, 1, 1)), R=np.zeros((1, 1)), gamma=0.9,
                         start=3)
    with pytest.raises(ConfigurationError):
        _single_state_mdp(gamma=1.0)


def test_exact_q_on_degenerate_instances(desk, uniform):
    zero = oracle.FiniteMdp(P=desk.P, R=np.zeros_like(desk.R), gamma=0.9)
    assert np.array_equal(oracle.exact_q(zero, uniform), np.zeros((4, 2)))
    one = _single_state_mdp()
    pol = TabularSoftmaxPolicy(theta=np.zeros((1, 1)))
    assert oracle.exact_q(one, pol)[0, 0] == pytest.approx(10.0)


def test_exact_q_satisfies_the_bellman_identity(desk, rng):
    pol = TabularSoftmaxPolicy(theta=rng.standard_normal((4, 2)))
    q = oracle.exact_q(desk, pol)
    assert np.max(np.abs(q)) <= desk.reward_bound / (1.0 - desk.gamma)
    ev = (pol.probs * q).sum(axis=1)
    backup = desk.R + desk.gamma * np.einsum("sap,p->sa", desk.P, ev)
    assert np.allclose(q, backup, atol=1e-10)


def test_objective_is_the_start_state_value(desk, uniform):
    v = oracle.exact_v(desk, uniform)
    assert oracle.objective(desk, uniform) == pytest.approx(v[desk.start])


def test_occupancy_degenerates_to_the_start_state():
    m = two_state_chain(gamma=1e-9)
    pol = TabularSoftmaxPolicy(theta=np.zeros((2, 1)))
    rho = oracle.occupancy(m, pol)
    assert rho[0] == pytest.approx(1.0, abs=1e-8)


def test_occupancy_hand_value():
    P = np.array([[[0.5, 0.5]], [[0.5, 0.5]]])
    m = oracle.FiniteMdp(P=P, R=np.zeros((2, 1)), gamma=0.9)
    pol = TabularSoftmaxPolicy(theta=np.zeros((2, 1)))
    assert np.allclose(oracle.occupancy(m, pol), [0.55, 0.45], atol=1e-12)
    assert np.allclose(oracle.occupancy(m, pol, s0=1), [0.45, 0.55], atol=1e-12)


def test_occupancy_sums_to_one(desk, rng):
    pol = TabularSoftmaxPolicy(theta=rng.standard_normal((4, 2)))
    assert oracle.occupancy(desk, pol).sum() == pytest.approx(1.0)


def test_stationary_distribution_hand_value_and_invariance(desk, uniform):
    m = two_state_chain()
    pol = TabularSoftmaxPolicy(theta=np.zeros((2, 1)))
    mu = oracle.stationary_distribution(m, pol)
    assert np.allclose(mu, [2.0 / 3.0, 1.0 / 3.0], atol=1e-12)
    mu_d = oracle.stationary_distribution(desk, uniform)
    Ppi = oracle.transition_matrix(desk, uniform)
    assert np.allclose(mu_d @ Ppi, mu_d, atol=1e-12)
    assert np.allclose(oracle.pair_weights(desk, uniform).sum(), 1.0)


def test_gradient_vanishes_when_actions_are_interchangeable():
    P = np.stack([np.stack([row, row]) for row in
                  [np.array([0.3, 0.7]), np.array([0.6, 0.4])]])
    R = np.array([[0.5, 0.5], [-0.2, -0.2]])
    m = oracle.FiniteMdp(P=P, R=R, gamma=0.9)
    pol = TabularSoftmaxPolicy(theta=np.zeros((2, 2)))
    assert np.allclose(oracle.exact_gradient(m, pol), 0.0, atol=1e-12)


def test_gradient_matches_finite_differences_of_the_objective(desk, rng):
    h = 1e-6
    for _ in range(20):
        theta = rng.standard_normal((4, 2))
        pol = TabularSoftmaxPolicy(theta=theta)
        grad = oracle.exact_gradient(desk, pol)
        fd = np.zeros_like(theta)
        for i in range(4):
            for j in range(2):
                tp = theta.copy(); tp[i, j] += h
                tm = theta.copy(); tm[i, j] -= h
                fd[i, j] = (oracle.objective(desk, pol.with_theta(tp))
                            - oracle.objective(desk, pol.with_theta(tm))) / (2 * h)
        assert np.max(np.abs(grad - fd)) <= 1e-6


def test_gradient_requires_a_parameterized_policy(desk):
    pol = TabularSoftmaxPolicy.from_table(np.full((4, 2), 0.5))
    with pytest.raises(ConfigurationError):
        oracle.exact_gradient(desk, pol)


def test_td_fixed_point_recovers_exact_q_with_full_features(desk, uniform, onehot):
    xi = oracle.td_fixed_point(desk, uniform, onehot)
    assert np.allclose(xi, oracle.exact_q(desk, uniform).ravel(), atol=1e-10)


def test_td_fixed_point_zero_rewards(desk, uniform, onehot):
    zero = oracle.FiniteMdp(P=desk.P, R=np.zeros_like(desk.R), gamma=0.9)
    assert np.allclose(oracle.td_fixed_point(zero, uniform, onehot), 0.0,
                       atol=1e-12)


def test_td_fixed_point_zeroes_the_expected_update(desk, uniform, feats3):
    xi = oracle.td_fixed_point(desk, uniform, feats3)
    w = oracle.pair_weights(desk, uniform)
    Phi = feats3.matrix
    Phibar = oracle.mean_next_features(desk, uniform, feats3)
    delta_bar = desk.R.ravel() + (desk.gamma * Phibar - Phi) @ xi
    assert np.allclose(Phi.T @ (w * delta_bar), 0.0, atol=1e-10)


def test_unidentifiable_features_are_rejected():
    m, pol = _dead_pair_setup()
    feats = TabularFeatureMap.one_hot(2, 2)
    with pytest.raises(FeatureRankError):
        oracle.min_eig_omega(m, pol, feats)
    with pytest.raises(FeatureRankError):
        oracle.td_fixed_point(m, pol, feats)


def test_min_eig_hand_values():
    one = _single_state_mdp()
    pol = TabularSoftmaxPolicy(theta=np.zeros((1, 2)))
    m2 = oracle.FiniteMdp(P=np.ones((1, 2, 1)), R=np.zeros((1, 2)), gamma=0.9)
    feats = TabularFeatureMap.one_hot(1, 2)
    assert oracle.min_eig_omega(m2, pol, feats) == pytest.approx(0.5)
    skew = TabularFeatureMap(np.array([[1.0, 0.0],
                                       [np.sqrt(0.5), np.sqrt(0.5)]]), 1, 2)
    want = (1.0 - np.sqrt(0.5)) / 2.0
    assert oracle.min_eig_omega(m2, pol, skew) == pytest.approx(want, rel=1e-12)


def test_expected_bellman_objective_basics(desk, uniform, onehot):
    xi_star = oracle.td_fixed_point(desk, uniform, onehot)
    assert oracle.bellman_error(desk, uniform, onehot, xi_star) <= 1e-20
    zero = oracle.FiniteMdp(P=desk.P, R=np.zeros_like(desk.R), gamma=0.9)
    assert oracle.bellman_error(zero, uniform, onehot, np.zeros(8)) == 0.0
    mini = oracle.bellman_minimizer(desk, uniform, onehot)
    assert np.allclose(mini, xi_star, atol=1e-8)


def test_bellman_gradient_matches_finite_differences(desk, uniform, feats3, rng):
    h = 1e-6
    for _ in range(5):
        xi = rng.standard_normal(3) * 3.0
        grad = oracle.bellman_error_gradient(desk, uniform, feats3, xi)
        fd = np.zeros(3)
        for i in range(3):
            xp = xi.copy(); xp[i] += h
            xm = xi.copy(); xm[i] -= h
            fd[i] = (oracle.bellman_error(desk, uniform, feats3, xp)
                     - oracle.bellman_error(desk, uniform, feats3, xm)) / (2 * h)
        assert np.linalg.norm(grad - fd) <= 1e-6 * max(1.0, np.linalg.norm(fd))
    mini = oracle.bellman_minimizer(desk, uniform, feats3)
    at_min = oracle.bellman_error_gradient(desk, uniform, feats3, mini)
    assert np.linalg.norm(at_min) <= 1e-10


def test_model_file_round_trip(desk, tmp_path):
    path = tmp_path / "desk.mdp"
    oracle.save_finite_mdp(desk, path)
    back = oracle.load_finite_mdp(path)
    assert np.array_equal(back.P, desk.P)
    assert np.array_equal(back.R, desk.R)
    assert back.gamma == desk.gamma and back.start == desk.start


def test_model_file_errors(tmp_path):
    bad = tmp_path / "bad.mdp"
    bad.write_text("not a model\n")
    with pytest.raises(ConfigurationError):
        oracle.load_finite_mdp(bad)
    lopsided = tmp_path / "mass.mdp"
    lopsided.write_text("1 1 0.9 0\n0.5\n0.0\n")
    with pytest.raises(ConfigurationError):
        oracle.load_finite_mdp(lopsided)


def test_presampled_tuples_follow_the_stationary_weights(desk, uniform, rng):
    n = 200_000
    pairs, nxt = oracle.presample_tuples(desk, uniform, n, rng)
    assert pairs.shape == (n,) and nxt.dtype == np.int64
    w = oracle.pair_weights(desk, uniform)
    freq = np.bincount(pairs, minlength=8) / n
    freq2 = np.bincount(nxt, minlength=8) / n
    assert np.max(np.abs(freq - w)) <= 0.02 * w.max()
    assert np.max(np.abs(freq2 - w)) <= 0.02 * w.max()


def test_desk_instance_shape(desk):
    assert desk.n_states == 4 and desk.n_actions == 2 and desk.n_pairs == 8
    assert desk.start == 0
    assert np.allclose(desk.P.sum(axis=2), 1.0)
    assert desk.reward_bound <= 1.0


def test_rate_instance_fixed_point():
    m = oracle.rate_mdp()
    feats = oracle.rate_features()
    pol = oracle.uniform_policy(m)
    assert np.allclose(oracle.exact_q(m, pol), -6.0, atol=1e-12)
    xi = oracle.td_fixed_point(m, pol, feats)
    assert np.allclose(xi, [-1.0, 0.0], atol=1e-9)


def test_uniform_policy_is_uniform(desk):
    pol = oracle.uniform_policy(desk)
    assert np.allclose(pol.probs, 0.5)
