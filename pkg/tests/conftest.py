"""Shared fixtures: the small tabular instances and navigation defaults."""

import numpy as np
import pytest

from acbench import oracle
from acbench.features import TabularFeatureMap
from acbench.nav_env import NavConfig, NavEnv


@pytest.fixture(scope="session")
def desk():
    return oracle.desk_mdp()


@pytest.fixture(scope="session")
def uniform(desk):
    return oracle.uniform_policy(desk)


@pytest.fixture(scope="session")
def onehot(desk):
    return oracle.desk_features_onehot()


@pytest.fixture(scope="session")
def feats3():
    return oracle.desk_features_3d()


@pytest.fixture(scope="session")
def nav_cfg():
    return NavConfig()


@pytest.fixture(scope="session")
def nav_env(nav_cfg):
    return NavEnv(nav_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(np.random.SeedSequence(1234))


def two_state_chain(p_stay0: float = 0.9, p_stay1: float = 0.8,
                    gamma: float = 0.9) -> oracle.FiniteMdp:
    """Single-action chain with a closed-form stationary distribution."""
    P = np.array([[[p_stay0, 1.0 - p_stay0]],
                  [[1.0 - p_stay1, p_stay1]]])
    R = np.zeros((2, 1))
    return oracle.FiniteMdp(P=P, R=R, gamma=gamma, start=0)


def single_pair_features() -> TabularFeatureMap:
    return TabularFeatureMap.one_hot(1, 2)
