"""Gaussian and tabular-softmax policies: densities, scores, sampling."""

import numpy as np
import pytest

from acbench.errors import ConfigurationError
from acbench.policy import (GaussianPolicy, TabularSoftmaxPolicy,
                            gaussian_log_density, gaussian_score, softmax_rows)

_ID = lambda s: np.asarray(s, dtype=float)


def _fd_score_gaussian(theta, phi_s, action, cov, h=1e-6):
    """Central differences of the log density in every theta entry."""
    g = np.zeros_like(theta)
    for i in range(theta.shape[0]):
        for j in range(theta.shape[1]):
            tp = theta.copy(); tp[i, j] += h
            tm = theta.copy(); tm[i, j] -= h
            g[i, j] = (gaussian_log_density(tp, phi_s, action, cov)
                       - gaussian_log_density(tm, phi_s, action, cov)) / (2 * h)
    return g


def test_zero_theta_samples_are_centered(rng):
    pol = GaussianPolicy(theta=np.zeros((2, 2)), features=_ID, cov=0.5)
    s = np.array([1.0, -2.0])
    acts = np.stack([pol.act(s, rng) for _ in range(4000)])
    assert np.all(np.abs(acts.mean(axis=0)) < 0.05)
    assert abs(acts.var() - 0.5) < 0.03


def test_score_vanishes_at_the_mean(rng):
    theta = rng.standard_normal((2, 2))
    pol = GaussianPolicy(theta=theta, features=_ID, cov=0.5)
    s = np.array([0.3, 0.7])
    assert np.array_equal(pol.score(s, pol.mean(s)), np.zeros((2, 2)))


def test_score_matches_finite_differences(rng):
    for _ in range(10):
        theta = rng.standard_normal((3, 2))
        phi = rng.standard_normal(3)
        a = rng.standard_normal(2)
        got = gaussian_score(theta, phi, a, 0.5)
        want = _fd_score_gaussian(theta, phi, a, 0.5)
        assert np.allclose(got, want, atol=1e-5)


def test_score_outer_product_structure():
    # unit feature e_i puts the whole residual in row i
    theta = np.zeros((3, 2))
    phi = np.array([0.0, 1.0, 0.0])
    a = np.array([0.4, -0.2])
    sc = gaussian_score(theta, phi, a, 0.5)
    assert np.array_equal(sc[1], a / 0.5)
    assert np.all(sc[[0, 2]] == 0.0)


def test_log_density_peak_value():
    # cov = 1/(2 pi) makes the 2-d normalizer exactly 1
    cov = 1.0 / (2.0 * np.pi)
    theta = np.zeros((2, 2))
    val = gaussian_log_density(theta, np.array([1.0, 0.0]), np.zeros(2), cov)
    assert val == pytest.approx(0.0, abs=1e-12)


def test_density_integrates_to_one_in_one_dimension():
    theta = np.array([[0.7], [-0.3]])
    pol = GaussianPolicy(theta=theta, features=_ID, cov=0.5)
    s = np.array([1.0, 2.0])
    mu = float(pol.mean(s)[0])
    grid = np.linspace(mu - 12.0, mu + 12.0, 20001)
    dens = np.exp([pol.log_density(s, np.array([a])) for a in grid])
    assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=1e-6)


def test_gaussian_policy_is_translation_invariant(rng):
    # shifting theta and the action by the induced mean shift keeps both
    # the score and the log density fixed
    theta = rng.standard_normal((3, 2))
    shift = rng.standard_normal((3, 2))
    s = rng.standard_normal(3)
    a = rng.standard_normal(2)
    pol1 = GaussianPolicy(theta=theta, features=_ID, cov=0.5)
    pol2 = GaussianPolicy(theta=theta + shift, features=_ID, cov=0.5)
    a2 = a + shift.T @ s
    assert np.allclose(pol1.score(s, a), pol2.score(s, a2), atol=1e-12)
    assert pol1.log_density(s, a) == pytest.approx(pol2.log_density(s, a2))


def test_gaussian_policy_rejects_bad_covariance():
    with pytest.raises(ConfigurationError):
        GaussianPolicy(theta=np.zeros((2, 2)), features=_ID, cov=0.0)


def test_with_theta_returns_a_new_policy():
    pol = GaussianPolicy(theta=np.zeros((2, 2)), features=_ID, cov=0.5)
    pol2 = pol.with_theta(np.ones((2, 2)))
    assert np.all(pol.theta == 0.0)
    assert np.all(pol2.theta == 1.0)
    assert pol2.cov == pol.cov


def test_softmax_rows_are_distributions(rng):
    logits = rng.standard_normal((5, 3)) * 10.0
    p = softmax_rows(logits)
    assert np.all(p > 0)
    assert np.allclose(p.sum(axis=1), 1.0)
    # invariant under per-row shifts
    assert np.allclose(softmax_rows(logits + 7.0), p)


def test_tabular_policy_probabilities_and_log_density(rng):
    theta = rng.standard_normal((4, 2))
    pol = TabularSoftmaxPolicy(theta=theta)
    assert pol.n_states == 4 and pol.n_actions == 2
    assert np.allclose(pol.probs.sum(axis=1), 1.0)
    for s in range(4):
        for a in range(2):
            assert pol.log_density(s, a) == pytest.approx(np.log(pol.probs[s, a]))


def test_tabular_score_matches_finite_differences(rng):
    theta = rng.standard_normal((3, 3))
    pol = TabularSoftmaxPolicy(theta=theta)
    h = 1e-6
    for s in range(3):
        for a in range(3):
            got = pol.score(s, a)
            want = np.zeros_like(theta)
            for i in range(3):
                for j in range(3):
                    tp = theta.copy(); tp[i, j] += h
                    tm = theta.copy(); tm[i, j] -= h
                    want[i, j] = (TabularSoftmaxPolicy(theta=tp).log_density(s, a)
                                  - TabularSoftmaxPolicy(theta=tm).log_density(s, a)) / (2 * h)
            assert np.allclose(got, want, atol=1e-5)


def test_tabular_sampling_frequencies(rng):
    pol = TabularSoftmaxPolicy.from_table(np.array([[0.2, 0.8]]))
    hits = sum(pol.act(0, rng) for _ in range(20000))
    assert abs(hits / 20000 - 0.8) < 0.02


def test_table_built_policy_has_no_score():
    pol = TabularSoftmaxPolicy.from_table(np.array([[0.5, 0.5]]))
    with pytest.raises(ConfigurationError):
        pol.score(0, 0)


def test_tabular_policy_rejects_bad_tables():
    with pytest.raises(ConfigurationError):
        TabularSoftmaxPolicy.from_table(np.array([[0.7, 0.7]]))
    with pytest.raises(ConfigurationError):
        TabularSoftmaxPolicy(theta=None)
