"""Timing comparison between the compiled kernels and the numpy fallback.

Run as: python benchmarks/bench_backends.py [--steps N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from acbench import oracle
from acbench._kernels import backend_name, get_backend
from acbench.critic import StepSchedule
from acbench.features import RbfFeatureMap
from acbench.nav_env import NavConfig


def _time(fn, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_critic_chunk(impl, n_steps: int) -> float:
    m = oracle.desk_mdp()
    pol = oracle.uniform_policy(m)
    feats = oracle.desk_features_onehot()
    rng = np.random.default_rng(np.random.SeedSequence(0))
    pair_idx, next_idx = oracle.presample_tuples(m, pol, n_steps, rng)
    pairs = m.n_states * m.n_actions
    phi = np.eye(pairs)
    r_pair = m.R.reshape(-1)
    xi_star = oracle.td_fixed_point(m, pol, feats)
    sched = StepSchedule.gtd(c_alpha=1.0)
    ak, aa, ab, bexp = sched.kernel_coding()
    cks = np.array([n_steps], dtype=np.int64)

    def once():
        xi = np.zeros(pairs)
        z = np.zeros(1)
        y = np.zeros(1)
        err = np.zeros(1)
        impl.critic_chunk(1, xi, z, y, 0, pair_idx, next_idx, phi, r_pair,
                          m.gamma, 20.0, ak, aa, ab, bexp, 0.0, cks,
                          xi_star, err)

    return _time(once)


def bench_nav_iteration(impl, iters: int = 20) -> float:
    cfg = NavConfig()
    feats = RbfFeatureMap.default_grid()
    inv2s2 = 1.0 / (2.0 * feats.bandwidth * feats.bandwidth)
    sched = StepSchedule.gtd(c_alpha=20.0)
    ak, aa, ab, bexp = sched.kernel_coding()
    rng = np.random.default_rng(np.random.SeedSequence(1))

    def once():
        theta = np.zeros((feats.dim, 2))
        xi = np.zeros(feats.dim)
        t_global, frozen = 0, 0
        for _ in range(iters):
            critic_noise = rng.standard_normal((10, 201, 2))
            actor_noise = rng.standard_normal((200, 2))
            t_global, frozen = impl.nav_iteration(
                1, theta, xi, t_global, frozen, feats.centers, inv2s2,
                cfg.start[0], cfg.start[1], cfg.target[0], cfg.target[1],
                cfg.inner_radius, cfg.outer_radius, cfg.step_length,
                cfg.target_tolerance, cfg.reward_out, cfg.reward_goal,
                cfg.reward_step, cfg.gamma, 0.5, 1e-4 / ((1.0 - cfg.gamma) * 0.5),
                100.0, 20.0, ak, aa, ab, bexp, 0.0, critic_noise, actor_noise)

    return _time(once)


def bench_rbf_batch(impl, n_states: int = 20000) -> float:
    feats = RbfFeatureMap.default_grid()
    inv2s2 = 1.0 / (2.0 * feats.bandwidth * feats.bandwidth)
    states = np.random.default_rng(2).uniform(-6, 6, size=(n_states, 2))

    def once():
        impl.rbf_batch(states, feats.centers, inv2s2, True)

    return _time(once)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=10 ** 5,
                        help="critic updates for the chunk benchmark")
    args = parser.parse_args()

    backends = {"python": get_backend("python")}
    try:
        backends["compiled"] = get_backend("compiled")
    except ImportError:
        print("compiled backend unavailable; timing the fallback only")
    print(f"active backend at import: {backend_name()}\n")

    rows = [("critic_chunk", lambda impl: bench_critic_chunk(impl, args.steps)),
            ("nav_iteration", bench_nav_iteration),
            ("rbf_batch", bench_rbf_batch)]
    print(f"{'kernel':<14}" + "".join(f"{name:>12}" for name in backends)
          + ("     speedup" if len(backends) == 2 else ""))
    for label, fn in rows:
        times = {name: fn(impl) for name, impl in backends.items()}
        line = f"{label:<14}" + "".join(f"{times[n]:>11.4f}s" for n in backends)
        if len(times) == 2:
            line += f"{times['python'] / times['compiled']:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
