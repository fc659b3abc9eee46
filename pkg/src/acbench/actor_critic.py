"""Actor-critic drivers: the generic endpoint-estimator loop and the
batched practical variant for the navigation task.

Both drivers share the bookkeeping contract: one trace row per actor
update, cumulative critic-step accounting, a freeze rule on the actor
norm, and an overflow guard that aborts while preserving the partial
trace.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .critic import CriticState, StepSchedule, critic_step, q_value
from .env_core import sample_geometric_horizon, rollout, sample_critic_tuple
from .errors import ConfigurationError, RunAborted

TC_KINDS = ("linear", "linear_plus_one", "constant")
ETA_KINDS = ("constant", "power")


@dataclass(frozen=True)
class ActorConfig:
    """Settings for one actor-critic run.

    eta is the actor step size; with eta_kind="power" the per-update size
    is eta * k^(-eta_exponent).  tc_kind picks the critic-updates-per-
    actor-update schedule T_C(k).  freeze_threshold halts actor updates
    once ||theta|| reaches it (evaluation continues).
    """

    method: str
    critic_schedule: StepSchedule
    gamma: float = 0.9
    max_iters: int = 100
    eta: float = 1e-4
    eta_kind: str = "constant"
    eta_exponent: float = 0.5
    tc_kind: str = "linear"
    tc_constant: int = 1
    freeze_threshold: float = 100.0
    radius: float = 20.0
    reset_critic: bool = False
    eval_every: int = 10
    n_eval: int = 10
    eval_length: int = 200
    # practical-mode batch shape: rollouts per critic phase and their length
    critic_rollouts: int = 10
    rollout_length: int = 200

    def __post_init__(self):
        if self.method not in ("td0", "gtd", "agtd"):
            raise ConfigurationError(f"unknown critic method {self.method!r}")
        if self.tc_kind not in TC_KINDS:
            raise ConfigurationError(f"unknown T_C schedule {self.tc_kind!r}")
        if self.eta_kind not in ETA_KINDS:
            raise ConfigurationError(f"unknown eta schedule {self.eta_kind!r}")
        if self.eta_kind == "power" and not 0.0 < self.eta_exponent < 1.0:
            raise ConfigurationError("eta exponent must lie in (0, 1)")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigurationError("gamma must lie in (0, 1)")
        if self.tc_constant < 1:
            raise ConfigurationError("tc_constant must be >= 1")

    def eta_at(self, k: int) -> float:
        if self.eta_kind == "power":
            return self.eta * float(k) ** (-self.eta_exponent)
        return self.eta


@dataclass
class RunTrace:
    """Per-actor-update record arrays.  All arrays share one length.

    eval_reward and grad_proxy hold NaN on rows where no evaluation was
    scheduled.  wall holds per-row wall-clock seconds and is excluded
    from on-disk CSVs so reruns stay byte-identical.
    """

    k: np.ndarray
    grad_proxy: np.ndarray
    eval_reward: np.ndarray
    theta_norm: np.ndarray
    xi_norm: np.ndarray
    critic_steps: np.ndarray
    wall: np.ndarray
    probe: np.ndarray | None = None
    aborted: bool = False
    abort_reason: str = ""

    def __len__(self) -> int:
        return int(self.k.shape[0])

    def truncated(self, n: int) -> "RunTrace":
        return RunTrace(
            k=self.k[:n], grad_proxy=self.grad_proxy[:n],
            eval_reward=self.eval_reward[:n], theta_norm=self.theta_norm[:n],
            xi_norm=self.xi_norm[:n], critic_steps=self.critic_steps[:n],
            wall=self.wall[:n],
            probe=None if self.probe is None else self.probe[:n],
            aborted=self.aborted, abort_reason=self.abort_reason)

    @staticmethod
    def empty(n: int, with_probe: bool = False) -> "RunTrace":
        return RunTrace(
            k=np.arange(1, n + 1, dtype=np.int64),
            grad_proxy=np.full(n, np.nan),
            eval_reward=np.full(n, np.nan),
            theta_norm=np.zeros(n),
            xi_norm=np.zeros(n),
            critic_steps=np.zeros(n, dtype=np.int64),
            wall=np.zeros(n),
            probe=np.full(n, np.nan) if with_probe else None)


def critic_effort(tc_kind: str, k: int, constant: int = 1) -> int:
    """Number of critic updates to run before the k-th actor update."""
    if k < 1:
        raise ConfigurationError("actor iteration index starts at 1")
    if tc_kind == "linear":
        return k
    if tc_kind == "linear_plus_one":
        return k + 1
    if tc_kind == "constant":
        return constant
    raise ConfigurationError(f"unknown T_C schedule {tc_kind!r}")


def gradient_estimate(policy, xi: np.ndarray, s, a, gamma: float, features):
    """Endpoint policy-gradient estimate from one geometric-horizon rollout.

    (1/(1-gamma)) * q(xi, phi(s,a)) * score(s,a), shaped like theta.
    """
    q = q_value(xi, features(s, a))
    return policy.score(s, a) * (q / (1.0 - gamma))


def actor_step(theta: np.ndarray, estimate: np.ndarray, eta_k: float,
               freeze_threshold: float = 100.0) -> np.ndarray:
    """Gradient-ascent step; a no-op once ||theta|| reached the threshold."""
    if eta_k < 0:
        raise ConfigurationError("actor step size must be nonnegative")
    if np.linalg.norm(theta) >= freeze_threshold:
        return theta
    return theta + eta_k * estimate


def k_epsilon(grad_sq: np.ndarray, eps: float) -> int:
    """Smallest k (1-based) with min_{m<=k} grad_sq[m] < eps; 0 if never."""
    hit = np.minimum.accumulate(np.asarray(grad_sq, dtype=float)) < eps
    if not hit.any():
        return 0
    return int(np.argmax(hit)) + 1


def _draw(cum_row: np.ndarray, rng) -> int:
    return int(np.searchsorted(cum_row, rng.random(), side="right"))


def _finite_endpoint(m, probs_cum, rng):
    """Endpoint (s_T, a_T) of a Geom(1-gamma) rollout from the start state."""
    horizon = sample_geometric_horizon(m.gamma, rng)
    pcum = m.P.cumsum(axis=2)
    s = m.start
    for _ in range(horizon):
        a = _draw(probs_cum[s], rng)
        s = _draw(pcum[s, a], rng)
    a = _draw(probs_cum[s], rng)
    return s, a


def batch_gradient_estimates(m, policy, features, xi: np.ndarray, n: int,
                             rng) -> np.ndarray:
    """Mean of n independent endpoint gradient estimates, vectorized.

    Simulates n geometric-horizon chains in lockstep and contracts the
    endpoint-pair counts against q-hat and the softmax score, which gives
    exactly the arithmetic mean of the n single-sample estimates.
    """
    probs = policy.probs
    S, A = probs.shape
    horizons = rng.geometric(1.0 - m.gamma, size=n) - 1
    max_h = int(horizons.max()) if n else 0
    state = np.full(n, m.start, dtype=np.int64)
    # state-to-state kernel under the policy, cumulative for inverse-CDF draws
    M = np.einsum("sap,sa->sp", m.P, probs)
    Mcum = M.cumsum(axis=1)
    for t in range(max_h):
        active = horizons > t
        if not active.any():
            break
        u = rng.random(n)   # fixed-shape draw keeps the stream layout stable
        idx = np.flatnonzero(active)
        rows = Mcum[state[idx]]
        state[idx] = (u[idx, None] > rows).sum(axis=1)
    u = rng.random(n)
    action = (u[:, None] > probs.cumsum(axis=1)[state]).sum(axis=1)

    counts = np.zeros((S, A))
    np.add.at(counts, (state, action), 1.0)
    qhat = (features.matrix @ xi).reshape(S, A)
    total = np.zeros((S, A))
    for s in range(S):
        for a in range(A):
            if counts[s, a]:
                total += counts[s, a] * qhat[s, a] * policy.score(s, a)
    return total / (n * (1.0 - m.gamma))


def _check_finite(k: int, theta, xi, trace: RunTrace):
    if np.isfinite(theta).all() and np.isfinite(xi).all():
        return
    part = trace.truncated(k - 1)
    part.aborted = True
    part.abort_reason = f"non-finite parameter at actor update {k}"
    raise RunAborted(part.abort_reason, trace=part)


def run_generic(env, features, policy, config: ActorConfig, seed: int,
                grad_probe=None) -> RunTrace:
    """Generic actor-critic: T_C(k) critic updates, one endpoint estimate,
    one actor update per iteration.

    On finite models the critic consumes presampled stationary tuples
    through the compiled chunk kernel and the evaluation column holds the
    exact objective; on other environments tuples come from geometric-
    horizon restarts and the evaluation column is left NaN.
    """
    from . import oracle

    finite = isinstance(env, oracle.FiniteMdp)
    ss = np.random.SeedSequence(seed)
    critic_rng, actor_rng, _ = [np.random.default_rng(s) for s in ss.spawn(3)]

    theta = np.array(policy.theta, dtype=float, copy=True)
    p = features.dim
    xi = np.zeros(p)
    z = np.zeros(p if config.method == "agtd" else 1)
    y = np.zeros(1)
    method_id = {"td0": 0, "gtd": 1, "agtd": 2}[config.method]
    ak, aa, ab, bexp = config.critic_schedule.kernel_coding()

    n = config.max_iters
    trace = RunTrace.empty(n, with_probe=grad_probe is not None)
    t_global = 0
    cum = 0
    frozen = False
    sched = config.critic_schedule

    for k in range(1, n + 1):
        t0 = time.perf_counter()
        pol = policy.with_theta(theta)
        tc = critic_effort(config.tc_kind, k, config.tc_constant)

        if config.reset_critic:
            xi[:] = 0.0
            t_global = 0
        z[:] = 0.0
        y[:] = 0.0

        if finite:
            pair_idx, next_idx = oracle.presample_tuples(env, pol, tc, critic_rng)
            t_global = K.critic_chunk(
                method_id, xi, z, y, t_global, pair_idx, next_idx,
                features.matrix, env.R.ravel(), config.gamma, config.radius,
                ak, aa, ab, bexp, sched.reg,
                np.empty(0, dtype=np.int64), np.zeros(p), np.empty(0))
        else:
            if config.method == "td0":
                state = CriticState(xi=xi, t=t_global)
            elif config.method == "gtd":
                state = CriticState(xi=xi, z=float(z[0]), t=t_global)
            else:
                state = CriticState(xi=xi, z=z.copy(), y=float(y[0]), t=t_global)
            for _ in range(tc):
                burn = sample_geometric_horizon(config.gamma, critic_rng)
                tup = sample_critic_tuple(env, pol, burn, critic_rng)
                state = critic_step(state, tup, features, config.method,
                                    sched, gamma=config.gamma,
                                    radius=config.radius)
            xi = np.array(state.xi, copy=True)
            if config.method == "agtd":
                z = np.array(state.z, copy=True)
                y[0] = state.y
            elif config.method == "gtd":
                z[0] = state.z
            t_global = state.t
        cum += tc

        _check_finite(k, theta, xi, trace)

        s_T, a_T = (_finite_endpoint(env, pol.probs.cumsum(axis=1), actor_rng)
                    if finite else
                    rollout(env, pol, env.initial_state(),
                            sample_geometric_horizon(config.gamma, actor_rng),
                            actor_rng).endpoint())
        est = gradient_estimate(pol, xi, s_T, a_T, config.gamma, features)
        if not frozen and np.linalg.norm(theta) >= config.freeze_threshold:
            frozen = True
        if not frozen:
            theta = theta + config.eta_at(k) * est

        _check_finite(k, theta, xi, trace)

        i = k - 1
        trace.grad_proxy[i] = np.linalg.norm(est)
        trace.theta_norm[i] = np.linalg.norm(theta)
        trace.xi_norm[i] = np.linalg.norm(xi)
        trace.critic_steps[i] = cum
        if finite:
            trace.eval_reward[i] = oracle.objective(env, pol.with_theta(theta))
        if grad_probe is not None:
            trace.probe[i] = grad_probe(theta)
        trace.wall[i] = time.perf_counter() - t0
    return trace


def run_practical(env, features, policy, config: ActorConfig,
                  seed: int) -> RunTrace:
    """Batched navigation driver: per actor iteration, a block of critic
    rollouts updates xi along every transition, then one actor rollout
    updates theta at every step; evaluation on a fixed cadence.

    grad_proxy holds the mean normalized direction gap between sampled
    evaluation actions and the policy mean, a signal that actually decays
    as the policy sharpens (the raw score-norm statistic has constant
    expectation under a fixed covariance, see grad_norm_proxy).
    """
    from .nav_env import NavEnv

    if not isinstance(env, NavEnv):
        raise ConfigurationError("run_practical drives the navigation task")
    cfg = env.cfg
    ss = np.random.SeedSequence(seed)
    critic_rng, actor_rng, eval_rng = [np.random.default_rng(s) for s in ss.spawn(3)]

    centers = features.centers
    inv2s2 = 1.0 / (2.0 * features.bandwidth ** 2)
    theta = np.ascontiguousarray(policy.theta, dtype=float).copy()
    p = centers.shape[0]
    xi = np.zeros(p)
    method_id = {"td0": 0, "gtd": 1, "agtd": 2}[config.method]
    ak, aa, ab, bexp = config.critic_schedule.kernel_coding()

    n = config.max_iters
    trace = RunTrace.empty(n)
    t_global = 0
    cum = 0
    frozen = 0
    L = config.rollout_length
    nroll = config.critic_rollouts
    eta_scale = config.eta / ((1.0 - config.gamma) * policy.cov)

    for k in range(1, n + 1):
        t0 = time.perf_counter()
        if config.reset_critic:
            xi[:] = 0.0
            t_global = 0
        critic_noise = critic_rng.standard_normal((nroll, L + 1, 2))
        actor_noise = actor_rng.standard_normal((L, 2))
        t_global, frozen = K.nav_iteration(
            method_id, theta, xi, t_global, frozen,
            centers, inv2s2,
            cfg.start[0], cfg.start[1], cfg.target[0], cfg.target[1],
            cfg.inner_radius, cfg.outer_radius, cfg.step_length, cfg.target_tolerance,
            cfg.reward_out, cfg.reward_goal, cfg.reward_step,
            config.gamma, policy.cov, eta_scale, config.freeze_threshold,
            config.radius, ak, aa, ab, bexp, config.critic_schedule.reg,
            critic_noise, actor_noise)
        cum += nroll * L

        i = k - 1
        if not (np.isfinite(theta).all() and np.isfinite(xi).all()):
            part = trace.truncated(i)
            part.aborted = True
            part.abort_reason = f"non-finite parameter at actor update {k}"
            raise RunAborted(part.abort_reason, trace=part)

        if k % config.eval_every == 0:
            noise = eval_rng.standard_normal((config.n_eval, config.eval_length, 2))
            mean_ret, dir_gap, _ = K.nav_eval(
                theta, centers, inv2s2,
                cfg.start[0], cfg.start[1], cfg.target[0], cfg.target[1],
                cfg.inner_radius, cfg.outer_radius, cfg.step_length, cfg.target_tolerance,
                cfg.reward_out, cfg.reward_goal, cfg.reward_step,
                policy.cov, noise)
            trace.eval_reward[i] = mean_ret
            trace.grad_proxy[i] = dir_gap
        trace.theta_norm[i] = np.linalg.norm(theta)
        trace.xi_norm[i] = np.linalg.norm(xi)
        trace.critic_steps[i] = cum
        trace.wall[i] = time.perf_counter() - t0
    return trace


def grad_norm_proxy(policy, trajectories) -> float:
    """Average ||a_t - mean_t|| / cov over evaluation trajectories.

    For a Gaussian policy with fixed covariance this statistic has
    constant expectation E||z|| / sqrt(cov); it is reported for parity
    with the per-transition score norm, not as a convergence signal.
    """
    total = 0.0
    count = 0
    for traj in trajectories:
        for s, a in zip(traj.states[:-1], traj.actions[:-1]):
            total += float(np.linalg.norm(a - policy.mean(s))) / policy.cov
            count += 1
    if count == 0:
        raise ConfigurationError("no transitions in evaluation trajectories")
    return total / count
