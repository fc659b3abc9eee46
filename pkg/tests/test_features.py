"""Radial-basis and tabular feature maps."""

import numpy as np
import pytest

from acbench.errors import ConfigurationError, FeatureRankError
from acbench.features import (RbfFeatureMap, SuccessorFeatureMap,
                              TabularFeatureMap, grid_centers, rbf_kernel)


def test_kernel_is_one_at_its_own_center():
    c = np.array([1.3, -2.0])
    assert rbf_kernel(c, c, 0.7) == 1.0


@pytest.mark.parametrize("bw", [0.7, 1.0, 2.5])
def test_kernel_hits_inverse_e_at_sqrt2_sigma(bw):
    s = np.array([bw * np.sqrt(2.0), 0.0])
    assert rbf_kernel(s, np.zeros(2), bw) == pytest.approx(np.exp(-1.0), rel=1e-12)


def test_kernel_vanishes_far_away():
    assert rbf_kernel(np.array([100.0, 100.0]), np.zeros(2), 1.0) == 0.0


def test_kernel_rejects_bad_bandwidth():
    with pytest.raises(ConfigurationError):
        rbf_kernel(np.zeros(2), np.zeros(2), 0.0)
    with pytest.raises(ConfigurationError):
        RbfFeatureMap(np.zeros((1, 2)), bandwidth=-1.0)


def test_grid_centers_layout():
    four = grid_centers(-5.0, 5.0, 2)
    assert np.array_equal(four, [[-5, -5], [-5, 5], [5, -5], [5, 5]])
    nine = grid_centers(-5.0, 5.0, 3)
    assert np.array_equal(nine[4], [0.0, 0.0])
    eleven = grid_centers(-5.0, 5.0, 11)
    gaps = np.diff(np.unique(eleven[:, 0]))
    assert np.allclose(gaps, 1.0)


def test_grid_centers_validation():
    with pytest.raises(ConfigurationError):
        grid_centers(-5.0, 5.0, 0)
    with pytest.raises(ConfigurationError):
        grid_centers(5.0, -5.0, 4)


def test_default_grid_shape():
    fm = RbfFeatureMap.default_grid()
    assert fm.dim == 100
    assert fm.bandwidth == 1.0
    assert fm.normalize


def test_single_center_normalizes_to_one():
    fm = RbfFeatureMap(np.array([[3.0, 3.0]]), bandwidth=0.1)
    phi = fm(np.array([2.9, 3.0]))
    assert phi.shape == (1,)
    assert phi[0] == pytest.approx(1.0)


def test_normalized_features_have_unit_norm(rng):
    fm = RbfFeatureMap.default_grid()
    states = rng.uniform(-4.0, 4.0, size=(50, 2))
    phi = fm.batch(states)
    assert np.allclose(np.linalg.norm(phi, axis=1), 1.0, atol=1e-12)


def test_tiny_bandwidth_concentrates_on_the_nearest_center():
    fm = RbfFeatureMap(grid_centers(-5.0, 5.0, 11), bandwidth=0.05)
    phi = fm(np.array([2.1, -3.0]))
    # nearest lattice point is (2, -3); everything else underflows
    assert phi.max() == pytest.approx(1.0)
    assert phi.sum() == pytest.approx(1.0)


def test_far_outside_the_grid_features_underflow_to_zero_not_nan():
    fm = RbfFeatureMap.default_grid()
    phi = fm.batch(np.array([[100.0, 100.0], [-80.0, 0.0], [2.0, 2.0]]))
    assert np.all(np.isfinite(phi))
    assert np.all(phi[0] == 0.0) and np.all(phi[1] == 0.0)
    assert np.linalg.norm(phi[2]) == pytest.approx(1.0)


def test_batch_agrees_with_single_calls(rng):
    fm = RbfFeatureMap.default_grid()
    states = rng.uniform(-6.0, 6.0, size=(20, 2))
    singles = np.stack([fm(s) for s in states])
    assert np.array_equal(fm.batch(states), singles)


def test_one_hot_map_indexing():
    fm = TabularFeatureMap.one_hot(4, 2)
    assert fm.dim == 8
    assert fm.pair_index(2, 1) == 5
    assert np.array_equal(fm(2, 1), np.eye(8)[5])
    assert np.linalg.matrix_rank(fm.matrix) == 8


def test_tabular_map_rejects_bad_shapes_and_rank():
    with pytest.raises(ConfigurationError):
        TabularFeatureMap(np.eye(6), n_states=4, n_actions=2)
    dup = np.ones((4, 2))  # two identical columns
    with pytest.raises(FeatureRankError):
        TabularFeatureMap(dup, n_states=2, n_actions=2)


def test_successor_map_composes_state_map_with_the_kernel():
    from acbench.nav_env import NavConfig, nav_step
    cfg = NavConfig()
    fm = RbfFeatureMap.default_grid()
    succ = SuccessorFeatureMap(state_map=fm,
                               transition=lambda s, a: nav_step(s, a, cfg))
    s = np.array([2.0, 2.0])
    a = np.array([-1.0, 0.0])
    assert np.array_equal(succ(s, a), fm(nav_step(s, a, cfg)))
