"""Obstacle navigation on an annulus.

Free space is the ring 0.5 <= ||s|| <= 4.  A move travels a fixed distance
along the direction of the chosen action; leaving free space costs -11,
arriving within 0.5 of the target costs -0.1, any other move costs -1.
Episodes never terminate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .env_core import EnvModel, check_discount
from .errors import ConfigurationError


@dataclass(frozen=True)
class NavConfig:
    start: np.ndarray = field(default_factory=lambda: np.array([2.0, 2.0]))
    target: np.ndarray = field(default_factory=lambda: np.array([-2.0, -2.0]))
    inner_radius: float = 0.5
    outer_radius: float = 4.0
    step_length: float = 0.5
    target_tolerance: float = 0.5
    gamma: float = 0.9
    reward_out: float = -11.0
    reward_goal: float = -0.1
    reward_step: float = -1.0

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        object.__setattr__(self, "target", np.asarray(self.target, dtype=float))
        check_discount(self.gamma)
        if not (0.0 < self.inner_radius < self.outer_radius):
            raise ConfigurationError(
                f"need 0 < inner < outer, got {self.inner_radius}, {self.outer_radius}")
        if self.step_length <= 0.0:
            raise ConfigurationError(
                f"step length must be positive, got {self.step_length}")
        if self.target_tolerance <= 0.0:
            raise ConfigurationError(
                f"target tolerance must be positive, got {self.target_tolerance}")
        tn = float(np.linalg.norm(self.target))
        if (tn - self.target_tolerance < self.inner_radius
                or tn + self.target_tolerance > self.outer_radius):
            raise ConfigurationError("target ball must sit inside free space")
        if not in_free_space(self.start, self):
            raise ConfigurationError("start state must lie in free space")

    @property
    def reward_bound(self) -> float:
        return max(abs(self.reward_out), abs(self.reward_goal),
                   abs(self.reward_step))


def in_free_space(s: np.ndarray, cfg: NavConfig) -> bool:
    n = float(np.linalg.norm(s))
    return cfg.inner_radius <= n <= cfg.outer_radius


def nav_step(s: np.ndarray, a: np.ndarray, cfg: NavConfig) -> np.ndarray:
    """Move step_length along a / ||a||; a zero action moves along (1, 0)."""
    a = np.asarray(a, dtype=float)
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        direction = np.array([1.0, 0.0])
    else:
        direction = a / norm
    return np.asarray(s, dtype=float) + cfg.step_length * direction


def nav_reward(s_next: np.ndarray, cfg: NavConfig) -> float:
    """Reward of the state just entered.  Collision dominates proximity."""
    if not in_free_space(s_next, cfg):
        return cfg.reward_out
    if float(np.linalg.norm(s_next - cfg.target)) < cfg.target_tolerance:
        return cfg.reward_goal
    return cfg.reward_step


class NavEnv(EnvModel):
    """EnvModel wrapper; the transition kernel is deterministic."""

    state_dim = 2
    action_dim = 2

    def __init__(self, cfg: NavConfig | None = None):
        self.cfg = cfg if cfg is not None else NavConfig()
        self.gamma = self.cfg.gamma
        self.reward_bound = self.cfg.reward_bound

    def initial_state(self) -> np.ndarray:
        return self.cfg.start.copy()

    def step(self, state, action, rng=None):
        s2 = nav_step(state, action, self.cfg)
        return s2, nav_reward(s2, self.cfg)
