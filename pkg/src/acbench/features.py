"""Feature maps: radial-basis grids for continuous states, tabular one-hots,
and a successor-state wrapper that turns a state map into a state-action map
for deterministic transition kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, FeatureRankError


def grid_centers(lower: float, upper: float, per_axis: int) -> np.ndarray:
    """Lattice of ``per_axis ** 2`` points covering [lower, upper]^2."""
    if per_axis < 1:
        raise ConfigurationError(f"per_axis must be >= 1, got {per_axis}")
    if not upper > lower:
        raise ConfigurationError(f"need upper > lower, got [{lower}, {upper}]")
    axis = np.linspace(lower, upper, per_axis)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def rbf_kernel(s: np.ndarray, center: np.ndarray, bandwidth: float) -> float:
    """exp(-||s - c||^2 / (2 sigma^2)); always in (0, 1]."""
    if bandwidth <= 0.0:
        raise ConfigurationError(f"bandwidth must be positive, got {bandwidth}")
    d = np.asarray(s, dtype=float) - np.asarray(center, dtype=float)
    return float(np.exp(-float(d @ d) / (2.0 * bandwidth * bandwidth)))


@dataclass(frozen=True)
class RbfFeatureMap:
    """Gaussian bumps on fixed centers, optionally normalized to unit norm.

    Far outside the grid every kernel value underflows to zero in float64;
    the normalization then leaves the zero vector instead of dividing 0/0,
    so such states carry no feature support.
    """

    centers: np.ndarray
    bandwidth: float = 1.0
    normalize: bool = True

    def __post_init__(self):
        if self.bandwidth <= 0.0:
            raise ConfigurationError(
                f"bandwidth must be positive, got {self.bandwidth}")
        object.__setattr__(self, "centers",
                           np.ascontiguousarray(self.centers, dtype=float))

    @property
    def dim(self) -> int:
        return self.centers.shape[0]

    def __call__(self, s) -> np.ndarray:
        return self.batch(np.asarray(s, dtype=float)[None, :])[0]

    def batch(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=float)
        d2 = ((states[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=2)
        phi = np.exp(-d2 / (2.0 * self.bandwidth * self.bandwidth))
        if self.normalize:
            n = np.linalg.norm(phi, axis=1, keepdims=True)
            np.divide(phi, n, out=phi, where=n > 0.0)
        return phi

    @classmethod
    def default_grid(cls, lower: float = -5.0, upper: float = 5.0,
                     per_axis: int = 10, bandwidth: float = 1.0,
                     normalize: bool = True) -> "RbfFeatureMap":
        return cls(grid_centers(lower, upper, per_axis), bandwidth, normalize)


@dataclass(frozen=True)
class TabularFeatureMap:
    """State-action features for a finite model, one row per (s, a) pair.

    Rows are ordered s-major: row index = s * n_actions + a.  The matrix
    must have full column rank, otherwise fixed points are unidentifiable.
    """

    matrix: np.ndarray
    n_states: int
    n_actions: int

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=float)
        if m.shape[0] != self.n_states * self.n_actions:
            raise ConfigurationError(
                f"feature matrix has {m.shape[0]} rows, expected "
                f"{self.n_states * self.n_actions}")
        if np.linalg.matrix_rank(m) < m.shape[1]:
            raise FeatureRankError("feature matrix is rank deficient")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def pair_index(self, s: int, a: int) -> int:
        return int(s) * self.n_actions + int(a)

    def __call__(self, s, a) -> np.ndarray:
        return self.matrix[self.pair_index(s, a)]

    @classmethod
    def one_hot(cls, n_states: int, n_actions: int) -> "TabularFeatureMap":
        n = n_states * n_actions
        return cls(np.eye(n), n_states, n_actions)


@dataclass(frozen=True)
class SuccessorFeatureMap:
    """phi(s, a) := state_map(transition(s, a)) for a deterministic kernel.

    With deterministic transitions the action-value of (s, a) is a function
    of the successor state alone, so features of the successor give the
    critic an action-sensitive target without enlarging the basis.
    """

    state_map: Callable[[np.ndarray], np.ndarray]
    transition: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, s, a) -> np.ndarray:
        return self.state_map(self.transition(s, a))
