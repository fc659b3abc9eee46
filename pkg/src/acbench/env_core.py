"""Environment interface, trajectory containers, and sampling helpers.

States and actions are opaque to this module: finite models use ints, the
navigation task uses length-2 float arrays.  Policies passed in must expose
``act(state, rng)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, List

import numpy as np

from .errors import ConfigurationError, InvariantViolation


def check_discount(gamma: float) -> float:
    if not (0.0 < gamma < 1.0):
        raise ConfigurationError(f"discount must lie in (0, 1), got {gamma}")
    return float(gamma)


class EnvModel:
    """Minimal environment contract: a start state and a one-step kernel.

    Subclasses set ``state_dim``, ``action_dim``, ``gamma`` and
    ``reward_bound`` (U_R, so every emitted reward satisfies |r| <= U_R).
    """

    state_dim: int
    action_dim: int
    gamma: float
    reward_bound: float

    def initial_state(self):
        raise NotImplementedError

    def step(self, state, action, rng: np.random.Generator):
        """Return ``(next_state, reward)``."""
        raise NotImplementedError


@dataclass(frozen=True)
class TransitionTuple:
    """One critic sample (s, a, r, s', a')."""

    state: Any
    action: Any
    reward: float
    next_state: Any
    next_action: Any


@dataclass
class Trajectory:
    """A rollout of fixed length L.

    ``states`` has L+1 entries and ``actions`` L+1 as well: an action is
    sampled at every visited state including the last one, so the final
    (state, action) pair is always available.  ``rewards[t]`` is the reward
    emitted by the transition out of ``states[t]``.
    """

    states: List[Any]
    actions: List[Any]
    rewards: List[float] = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.rewards)

    def endpoint(self):
        return self.states[-1], self.actions[-1]

    def discounted_return(self, gamma: float) -> float:
        gamma = check_discount(gamma)
        return float(sum(r * gamma**t for t, r in enumerate(self.rewards)))


def sample_geometric_horizon(gamma: float, rng: np.random.Generator) -> int:
    """Draw T with P(T = t) = (1 - gamma) * gamma^t for t = 0, 1, 2, ...

    The mean is gamma / (1 - gamma); gamma -> 0 degenerates to T = 0.
    """
    gamma = check_discount(gamma)
    return int(rng.geometric(1.0 - gamma)) - 1


def rollout(env: EnvModel, policy, s0, length: int,
            rng: np.random.Generator) -> Trajectory:
    """Roll ``length`` steps from ``s0``, then sample one final action.

    Draw order is fixed (action, then any transition noise, repeated; final
    action last) so identical seeds give bit-identical trajectories.
    """
    if length < 0:
        raise ConfigurationError(f"rollout length must be >= 0, got {length}")
    bound = env.reward_bound
    states = [s0]
    actions = []
    rewards: List[float] = []
    s = s0
    for _ in range(length):
        a = policy.act(s, rng)
        s, r = env.step(s, a, rng)
        if not abs(r) <= bound:
            raise InvariantViolation(
                f"reward {r} exceeds the declared bound {bound}")
        actions.append(a)
        states.append(s)
        rewards.append(float(r))
    actions.append(policy.act(s, rng))
    return Trajectory(states, actions, rewards)


def sample_critic_tuple(env: EnvModel, policy, burn_in: int,
                        rng: np.random.Generator) -> TransitionTuple:
    """Draw one (s, a, r, s', a') tuple after a burn-in rollout.

    The burn-in approximates sampling s from the stationary distribution of
    the policy-induced chain; burn_in = 0 starts at the initial state.
    """
    traj = rollout(env, policy, env.initial_state(), burn_in, rng)
    s, a = traj.endpoint()
    s2, r = env.step(s, a, rng)
    a2 = policy.act(s2, rng)
    return TransitionTuple(s, a, float(r), s2, a2)
