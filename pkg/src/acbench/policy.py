"""Policy classes: a linear-Gaussian policy for continuous actions and a
softmax table for finite models.

The Gaussian policy is N(theta^T phi(s), c * I) with scalar covariance
scale c.  Its score function is phi(s) (a - theta^T phi(s))^T / c.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError


def gaussian_sample(theta: np.ndarray, phi_s: np.ndarray, cov: float,
                    rng: np.random.Generator) -> np.ndarray:
    mean = theta.T @ phi_s
    return mean + np.sqrt(cov) * rng.standard_normal(mean.shape)


def gaussian_score(theta: np.ndarray, phi_s: np.ndarray,
                   action: np.ndarray, cov: float) -> np.ndarray:
    """Gradient of log N(a; theta^T phi, c I) with respect to theta."""
    resid = np.asarray(action, dtype=float) - theta.T @ phi_s
    return np.outer(phi_s, resid) / cov

def gaussian_log_density(theta: np.ndarray, phi_s: np.ndarray,
                         action: np.ndarray, cov: float) -> float:
    resid = np.asarray(action, dtype=float) - theta.T @ phi_s
    d = resid.shape[-1] if resid.ndim else 1
    return float(-0.5 * (resid @ resid) / cov - 0.5 * d * np.log(2.0 * np.pi * cov))


@dataclass(frozen=True)
class GaussianPolicy:
    """Linear-Gaussian policy bound to a state feature map.

    ``theta`` has shape (p, action_dim).  ``features`` maps a state to its
    p-dimensional feature vector.
    """

    theta: np.ndarray
    features: Callable[[np.ndarray], np.ndarray]
    cov: float = 0.5

    def __post_init__(self):
        if self.cov <= 0.0:
            raise ConfigurationError(f"covariance scale must be positive, got {self.cov}")
        object.__setattr__(self, "theta",
                           np.ascontiguousarray(self.theta, dtype=float))

    def mean(self, s) -> np.ndarray:
        return self.theta.T @ self.features(s)

    def act(self, s, rng: np.random.Generator) -> np.ndarray:
        return gaussian_sample(self.theta, self.features(s), self.cov, rng)

    def score(self, s, action) -> np.ndarray:
        return gaussian_score(self.theta, self.features(s), action, self.cov)

    def log_density(self, s, action) -> float:
        return gaussian_log_density(self.theta, self.features(s), action, self.cov)

    def with_theta(self, theta: np.ndarray) -> "GaussianPolicy":
        return replace(self, theta=theta)


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class TabularSoftmaxPolicy:
    """Softmax policy over a finite state-action space.

    ``theta`` is an (S, A) table of scores; pi(a|s) = softmax(theta[s])_a.
    ``from_table`` builds the policy directly from a probability table, in
    which case score() is unavailable.
    """

    theta: Optional[np.ndarray]
    probs: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.probs is None:
            if self.theta is None:
                raise ConfigurationError("need a score table or a probability table")
            object.__setattr__(self, "probs", softmax_rows(
                np.asarray(self.theta, dtype=float)))
        p = np.ascontiguousarray(self.probs, dtype=float)
        if np.any(p < 0) or not np.allclose(p.sum(axis=1), 1.0, atol=1e-9):
            raise ConfigurationError("probability rows must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_table(cls, probs: np.ndarray) -> "TabularSoftmaxPolicy":
        return cls(theta=None, probs=probs)

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    @property
    def n_actions(self) -> int:
        return self.probs.shape[1]

    def act(self, s: int, rng: np.random.Generator) -> int:
        u = rng.random()
        a = int(np.searchsorted(np.cumsum(self.probs[s]), u, side="right"))
        return min(a, self.n_actions - 1)

    def score(self, s: int, a: int) -> np.ndarray:
        """d log pi(a|s) / d theta: zero except row s, where it is e_a - pi(.|s)."""
        if self.theta is None:
            raise ConfigurationError("score undefined for a table-built policy")
        g = np.zeros_like(self.probs)
        g[s] = -self.probs[s]
        g[s, a] += 1.0
        return g

    def log_density(self, s: int, a: int) -> float:
        return float(np.log(self.probs[s, a]))

    def with_theta(self, theta: np.ndarray) -> "TabularSoftmaxPolicy":
        return TabularSoftmaxPolicy(theta=theta)
