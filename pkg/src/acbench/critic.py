"""Critic estimators and their step-size schedules.

Three linear temporal-difference estimators over a shared weight vector xi:

* ``td0``   semi-gradient TD(0),
* ``gtd``   gradient TD with a scalar running average of the TD error,
* ``agtd``  an accelerated variant with an extrapolation vector z and a
            scalar tracker y.

All three cap ||xi|| by projection onto a ball of configurable radius; the
auxiliary trackers are never projected.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .env_core import TransitionTuple
from .errors import ConfigurationError

METHODS = ("td0", "gtd", "agtd")


@dataclass(frozen=True)
class CriticState:
    """Weights plus method-specific trackers and the step counter t.

    ``z`` is a scalar for gtd and a p-vector for agtd; ``y`` is the scalar
    agtd tracker.  ``t`` counts completed updates, so the first update uses
    schedule index t + 1 = 1.
    """

    xi: np.ndarray
    z: object = None
    y: Optional[float] = None
    t: int = 0

    @classmethod
    def fresh(cls, dim: int, method: str) -> "CriticState":
        if method not in METHODS:
            raise ConfigurationError(f"unknown critic method {method!r}")
        xi = np.zeros(dim)
        if method == "td0":
            return cls(xi=xi)
        if method == "gtd":
            return cls(xi=xi, z=0.0)
        return cls(xi=xi, z=np.zeros(dim), y=0.0)


def project_critic(xi: np.ndarray, radius: float) -> np.ndarray:
    """Scale xi back onto the ball of the given radius if it escaped."""
    if radius <= 0.0:
        raise ConfigurationError(f"projection radius must be positive, got {radius}")
    norm = float(np.linalg.norm(xi))
    if norm > radius:
        return xi * (radius / norm)
    return xi


def q_value(xi: np.ndarray, phi_sa: np.ndarray) -> float:
    return float(np.dot(xi, phi_sa))


def _tuple_features(tup: TransitionTuple, features) -> Tuple[np.ndarray, np.ndarray]:
    return (np.asarray(features(tup.state, tup.action), dtype=float),
            np.asarray(features(tup.next_state, tup.next_action), dtype=float))


def td0_step(state: CriticState, tup: TransitionTuple, features,
             alpha: float, *, gamma: float, radius: float) -> CriticState:
    """delta = r + xi.(gamma phi' - phi); xi += alpha delta phi; project."""
    phi, phi2 = _tuple_features(tup, features)
    delta = tup.reward + float(state.xi @ (gamma * phi2 - phi))
    xi = project_critic(state.xi + alpha * delta * phi, radius)
    return replace(state, xi=xi, t=state.t + 1)


def gtd_step(state: CriticState, tup: TransitionTuple, features,
             alpha: float, beta: float, *, gamma: float, radius: float,
             reg: float = 0.0) -> CriticState:
    """Track the mean TD error in z, then descend the reconstructed gradient.

    z <- (1 - beta) z + beta delta
    xi <- (1 - reg alpha) xi - 2 alpha z (gamma phi' - phi); project.
    """
    phi, phi2 = _tuple_features(tup, features)
    h = gamma * phi2 - phi
    delta = tup.reward + float(state.xi @ h)
    z = (1.0 - beta) * float(state.z) + beta * delta
    xi = (1.0 - reg * alpha) * state.xi - 2.0 * alpha * z * h
    return replace(state, xi=project_critic(xi, radius), z=z, t=state.t + 1)


def agtd_step(state: CriticState, tup: TransitionTuple, features,
              alpha: float, beta: float, *, gamma: float,
              radius: float) -> CriticState:
    """Extrapolated update: the tracker y is evaluated at the lookahead
    point z rather than at xi.

    xi+ = xi - 2 alpha (gamma phi' - phi) y
    z   = -(1/beta - 1) xi + (1/beta) xi+
    y+  = (1 - beta) y + beta (r + z.(gamma phi' - phi))

    The projection applies to xi+ after z and y+ are formed.
    """
    phi, phi2 = _tuple_features(tup, features)
    h = gamma * phi2 - phi
    xi_next = state.xi - 2.0 * alpha * h * float(state.y)
    inv_b = 1.0 / beta
    z = -(inv_b - 1.0) * state.xi + inv_b * xi_next
    y = (1.0 - beta) * float(state.y) + beta * (tup.reward + float(z @ h))
    return replace(state, xi=project_critic(xi_next, radius), z=z, y=y,
                   t=state.t + 1)


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes (alpha_t, beta_t) as a function of t = 1, 2, ...

    Kinds:
      constant        alpha_t = alpha
      td_continuous   alpha_t = (t + 1)^(-sigma_exp)
      td_finite       alpha_t = beta_c / (lambda_c + t) with
                      beta_c = 2 / (omega (1 - gamma)),
                      lambda_c = 16 / (omega (1 - gamma)^2)
      gtd             alpha_t = c_alpha / t, beta_t = t^(-2/3)
      agtd            alpha_t = c_alpha / t, beta_t = t^(-4/5)

    beta_t is None for the td kinds.  All sequences are nonincreasing and
    beta_t lies in (0, 1] for every t >= 1.
    """

    kind: str
    alpha: float = 0.05
    c_alpha: float = 1.0
    sigma_exp: float = 0.5
    beta_exp: float = 2.0 / 3.0
    omega: Optional[float] = None
    gamma: Optional[float] = None
    reg: float = 0.0

    KINDS = ("constant", "td_continuous", "td_finite", "gtd", "agtd")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "constant" and self.alpha <= 0.0:
            raise ConfigurationError("constant step size must be positive")
        if self.kind == "td_continuous" and not (0.0 < self.sigma_exp <= 0.5):
            raise ConfigurationError(
                f"sigma_exp must lie in (0, 1/2], got {self.sigma_exp}")
        if self.kind in ("gtd", "agtd") and self.c_alpha <= 0.0:
            raise ConfigurationError("c_alpha must be positive")
        if self.kind == "td_finite":
            if self.omega is None or self.gamma is None:
                raise ConfigurationError("td_finite needs omega and gamma")
            if self.omega <= 0.0:
                raise ConfigurationError(f"omega must be positive, got {self.omega}")

    @classmethod
    def constant(cls, alpha: float) -> "StepSchedule":
        return cls(kind="constant", alpha=alpha)

    @classmethod
    def td_continuous(cls, sigma_exp: float = 0.5) -> "StepSchedule":
        return cls(kind="td_continuous", sigma_exp=sigma_exp)

    @classmethod
    def td_finite(cls, omega: float, gamma: float) -> "StepSchedule":
        return cls(kind="td_finite", omega=omega, gamma=gamma)

    @classmethod
    def gtd(cls, c_alpha: float = 1.0, reg: float = 0.0) -> "StepSchedule":
        return cls(kind="gtd", c_alpha=c_alpha, beta_exp=2.0 / 3.0, reg=reg)

    @classmethod
    def agtd(cls, c_alpha: float = 1.0) -> "StepSchedule":
        return cls(kind="agtd", c_alpha=c_alpha, beta_exp=4.0 / 5.0)

    @property
    def finite_constants(self) -> Tuple[float, float]:
        beta_c = 2.0 / (self.omega * (1.0 - self.gamma))
        lambda_c = 16.0 / (self.omega * (1.0 - self.gamma) ** 2)
        return beta_c, lambda_c

    def step_size(self, t: int) -> Tuple[float, Optional[float]]:
        if t < 1:
            raise ConfigurationError(f"schedules are defined for t >= 1, got {t}")
        if self.kind == "constant":
            return self.alpha, None
        if self.kind == "td_continuous":
            return float((t + 1) ** -self.sigma_exp), None
        if self.kind == "td_finite":
            beta_c, lambda_c = self.finite_constants
            return beta_c / (lambda_c + t), None
        return self.c_alpha / t, float(t) ** -self.beta_exp

    def kernel_coding(self) -> Tuple[int, float, float, float]:
        """(alpha_kind, a, b, beta_exp) encoding consumed by the loop kernels."""
        if self.kind == "constant":
            return 0, self.alpha, 0.0, 0.0
        if self.kind == "td_continuous":
            return 3, 1.0, self.sigma_exp, 0.0
        if self.kind == "td_finite":
            beta_c, lambda_c = self.finite_constants
            return 2, beta_c, lambda_c, 0.0
        return 1, self.c_alpha, 0.0, self.beta_exp


def critic_step(state: CriticState, tup: TransitionTuple, features,
                method: str, schedule: StepSchedule, *, gamma: float,
                radius: float) -> CriticState:
    """Dispatch one update at schedule index t = state.t + 1."""
    alpha, beta = schedule.step_size(state.t + 1)
    if method == "td0":
        return td0_step(state, tup, features, alpha, gamma=gamma, radius=radius)
    if method == "gtd":
        if beta is None:
            beta = 1.0
        return gtd_step(state, tup, features, alpha, beta, gamma=gamma,
                        radius=radius, reg=schedule.reg)
    if method == "agtd":
        if beta is None:
            beta = 1.0
        return agtd_step(state, tup, features, alpha, beta, gamma=gamma,
                         radius=radius)
    raise ConfigurationError(f"unknown critic method {method!r}")
