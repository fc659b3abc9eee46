"""Experiment layer: flat config files, multi-seed runs, CSV traces,
power-law slope fits, and the two comparison figures.

Per-seed trace CSVs use a fixed seven-column schema; an aggregate CSV
holds mean and standard error per evaluation point.  All files are
written with repr-exact float formatting so a rerun under the same
config is byte-identical.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels as K
from . import oracle
from .actor_critic import ActorConfig, RunTrace, run_generic, run_practical
from .critic import StepSchedule
from .errors import ConfigurationError
from .features import RbfFeatureMap
from .nav_env import NavConfig, NavEnv
from .policy import GaussianPolicy, TabularSoftmaxPolicy

CSV_HEADER = "k,grad_proxy,eval_reward,theta_norm,xi_norm,critic_steps,seed"

AGG_HEADER = ("k,grad_proxy_mean,grad_proxy_stderr,eval_reward_mean,"
              "eval_reward_stderr,theta_norm_mean,theta_norm_stderr,"
              "xi_norm_mean,xi_norm_stderr,critic_steps,n_seeds")

_ENVS = ("nav", "finite")
_METHODS = ("td0", "gtd", "agtd")

# Nav critic step scales sigma (alpha_t = c/t) found by calibration; the
# analysis schedules leave this instance constant free.  GTD small keeps
# the policy cautious enough to find and hold the target, A-GTD large
# sharpens the policy early at the cost of its limit point.
_NAV_C_ALPHA = {"gtd": 20.0, "agtd": 100.0}


def parse_seeds(text: str) -> Tuple[int, ...]:
    """Accept "a..b" (inclusive) or a comma list like "0,2,5"."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            a, b = int(lo), int(hi)
        except ValueError as exc:
            raise ConfigurationError(f"bad seed range {text!r}") from exc
        if b < a:
            raise ConfigurationError(f"empty seed range {text!r}")
        return tuple(range(a, b + 1))
    try:
        seeds = tuple(int(p) for p in text.split(",") if p.strip() != "")
    except ValueError as exc:
        raise ConfigurationError(f"bad seed list {text!r}") from exc
    if not seeds:
        raise ConfigurationError("seed list is empty")
    return seeds


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: an environment, a critic method, and seeds.

    Fields mirror the flat key=value config file one to one.  alpha and
    c_alpha left as NaN pick the per-method default for the chosen
    environment.
    """

    env: str = "nav"
    method: str = "gtd"
    seeds: Tuple[int, ...] = tuple(range(10))
    out_dir: str = "results"
    max_iters: int = 2000
    gamma: float = 0.9
    eta: float = 1e-4
    eta_kind: str = "constant"
    eta_exponent: float = 0.5
    alpha: float = float("nan")       # td0 constant step
    c_alpha: float = float("nan")     # gtd/agtd alpha_t = c_alpha / t
    reg: float = 0.0
    radius: float = 20.0
    freeze_threshold: float = 100.0
    reset_critic: bool = False
    tc_kind: str = "constant"
    tc_constant: int = 2000
    eval_every: int = 10
    n_eval: int = 10
    eval_length: int = 200
    critic_rollouts: int = 10
    rollout_length: int = 200
    cov: float = 0.5
    workers: int = 1

    def __post_init__(self):
        if self.env not in _ENVS:
            raise ConfigurationError(f"env must be one of {_ENVS}, got {self.env!r}")
        if self.method not in _METHODS:
            raise ConfigurationError(
                f"method must be one of {_METHODS}, got {self.method!r}")
        if not self.seeds:
            raise ConfigurationError("seed list is empty")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @classmethod
    def from_mapping(cls, mapping: Dict[str, str]) -> "ExperimentConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            key = key.strip()
            if key not in fields:
                raise ConfigurationError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, raw, fields[key].type)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        mapping: Dict[str, str] = {}
        try:
            with open(path, "r", encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    line = line.split("#", 1)[0].strip()
                    if not line:
                        continue
                    if "=" not in line:
                        raise ConfigurationError(
                            f"{path}:{lineno}: expected key=value, got {line!r}")
                    key, _, value = line.partition("=")
                    mapping[key.strip()] = value.strip()
        except OSError as exc:
            raise OSError(f"cannot read config file {path}: {exc}") from exc
        return cls.from_mapping(mapping)


def _coerce(key: str, raw, typ):
    if not isinstance(raw, str):
        return raw
    name = typ if isinstance(typ, str) else getattr(typ, "__name__", str(typ))
    try:
        if key == "seeds":
            return parse_seeds(raw)
        if name.startswith("bool"):
            low = raw.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if name.startswith("int"):
            return int(raw)
        if name.startswith("float"):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {key}: {raw!r}") from exc


def resolve_schedule(cfg: ExperimentConfig,
                     omega: Optional[float] = None) -> StepSchedule:
    """Critic schedule for cfg, filling NaN step scales with defaults."""
    if cfg.method == "td0":
        if cfg.env == "finite":
            if omega is None:
                raise ConfigurationError("finite td0 schedule needs omega")
            return StepSchedule.td_finite(omega, cfg.gamma)
        alpha = 0.05 if math.isnan(cfg.alpha) else cfg.alpha
        return StepSchedule.constant(alpha)
    if math.isnan(cfg.c_alpha):
        c = _NAV_C_ALPHA[cfg.method] if cfg.env == "nav" else 1.0
    else:
        c = cfg.c_alpha
    if cfg.method == "gtd":
        return StepSchedule.gtd(c_alpha=c, reg=cfg.reg)
    return StepSchedule.agtd(c_alpha=c)


def _actor_config(cfg: ExperimentConfig, schedule: StepSchedule) -> ActorConfig:
    return ActorConfig(
        method=cfg.method, critic_schedule=schedule, gamma=cfg.gamma,
        max_iters=cfg.max_iters, eta=cfg.eta, eta_kind=cfg.eta_kind,
        eta_exponent=cfg.eta_exponent, tc_kind=cfg.tc_kind,
        tc_constant=cfg.tc_constant, freeze_threshold=cfg.freeze_threshold,
        radius=cfg.radius, reset_critic=cfg.reset_critic,
        eval_every=cfg.eval_every, n_eval=cfg.n_eval,
        eval_length=cfg.eval_length, critic_rollouts=cfg.critic_rollouts,
        rollout_length=cfg.rollout_length)


def run_one(cfg: ExperimentConfig, seed: int) -> RunTrace:
    """Execute a single seed of cfg and return its trace."""
    if cfg.env == "nav":
        env = NavEnv(NavConfig(gamma=cfg.gamma))
        feats = RbfFeatureMap.default_grid()
        policy = GaussianPolicy(theta=np.zeros((feats.dim, 2)),
                                features=feats, cov=cfg.cov)
        actor = _actor_config(cfg, resolve_schedule(cfg))
        return run_practical(env, feats, policy, actor, seed)
    m = oracle.desk_mdp(cfg.gamma)
    feats = oracle.desk_features_3d()
    policy = TabularSoftmaxPolicy(theta=np.zeros((m.n_states, m.n_actions)))
    omega = oracle.min_eig_omega(m, oracle.uniform_policy(m), feats)
    actor = _actor_config(cfg, resolve_schedule(cfg, omega=omega))
    return run_generic(m, feats, policy, actor, seed)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def trace_csv_text(trace: RunTrace, seed: int) -> str:
    rows = [CSV_HEADER]
    for i in range(len(trace.k)):
        rows.append(",".join([
            str(int(trace.k[i])), _fmt(trace.grad_proxy[i]),
            _fmt(trace.eval_reward[i]), _fmt(trace.theta_norm[i]),
            _fmt(trace.xi_norm[i]), str(int(trace.critic_steps[i])),
            str(int(seed))]))
    return "\n".join(rows) + "\n"


def trace_path(out_dir: str, method: str, seed: int) -> str:
    return os.path.join(out_dir, f"trace_{method}_seed{seed}.csv")


def aggregate_path(out_dir: str, method: str) -> str:
    return os.path.join(out_dir, f"aggregate_{method}.csv")


def _run_one_csv(cfg: ExperimentConfig, seed: int) -> str:
    return trace_csv_text(run_one(cfg, seed), seed)


def run_experiment(cfg: ExperimentConfig) -> Dict[str, object]:
    """Run every seed, write per-seed CSVs plus the aggregate.

    Returns a summary dict with the written paths.  Worker processes
    only compute CSV text; the parent writes files in seed order so
    output bytes never depend on scheduling.
    """
    try:
        os.makedirs(cfg.out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output dir {cfg.out_dir}: {exc}") from exc
    if cfg.workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            texts = list(pool.map(_run_one_csv, [cfg] * len(cfg.seeds), cfg.seeds))
    else:
        texts = [_run_one_csv(cfg, seed) for seed in cfg.seeds]
    paths = []
    for seed, text in zip(cfg.seeds, texts):
        path = trace_path(cfg.out_dir, cfg.method, seed)
        _write(path, text)
        paths.append(path)
    agg = aggregate_path(cfg.out_dir, cfg.method)
    _write(agg, aggregate_csv_text(paths))
    return {"traces": paths, "aggregate": agg, "method": cfg.method,
            "seeds": cfg.seeds}


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_trace_csv(path: str) -> Dict[str, np.ndarray]:
    try:
        data = np.genfromtxt(path, delimiter=",", names=True)
    except OSError as exc:
        raise OSError(f"cannot read trace {path}: {exc}") from exc
    cols = {}
    for name in data.dtype.names:
        cols[name] = np.atleast_1d(data[name])
    expected = CSV_HEADER.split(",")
    if list(data.dtype.names) != expected:
        raise ConfigurationError(
            f"{path}: columns {data.dtype.names} do not match schema")
    return cols


def aggregate_csv_text(trace_paths: Sequence[str]) -> str:
    """Fold per-seed trace files into mean/stderr rows per eval point."""
    if not trace_paths:
        raise ConfigurationError("no trace files to aggregate")
    tables = [read_trace_csv(p) for p in sorted(trace_paths)]
    base = tables[0]
    mask = np.isfinite(base["eval_reward"])
    ks = base["k"][mask].astype(int)
    steps = base["critic_steps"][mask].astype(int)
    for t in tables[1:]:
        m = np.isfinite(t["eval_reward"])
        if not (np.array_equal(t["k"][m].astype(int), ks)
                and np.array_equal(t["critic_steps"][m].astype(int), steps)):
            raise ConfigurationError(
                "seed traces disagree on evaluation points; cannot aggregate")
    n = len(tables)
    out = [AGG_HEADER]
    stats = ("grad_proxy", "eval_reward", "theta_norm", "xi_norm")
    for i in range(len(ks)):
        row = [str(ks[i])]
        for name in stats:
            vals = np.array([t[name][np.isfinite(t["eval_reward"])][i]
                             for t in tables])
            mean = float(vals.mean())
            err = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
            row.append(repr(mean))
            row.append(repr(err))
        row.append(str(steps[i]))
        row.append(str(n))
        out.append(",".join(row))
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class RateFit:
    """Least-squares power-law fit of value against step on log-log axes."""

    slope: float
    intercept: float
    window: Tuple[float, float]
    residual: float
    n_points: int


def fit_rate(t: np.ndarray, value: np.ndarray,
             window: Tuple[float, float]) -> RateFit:
    t = np.asarray(t, dtype=float)
    value = np.asarray(value, dtype=float)
    lo, hi = float(window[0]), float(window[1])
    if not (lo < hi):
        raise ConfigurationError(f"bad fit window ({lo}, {hi})")
    if lo < t.min() or hi > t.max():
        raise ConfigurationError(
            f"window ({lo}, {hi}) outside logged range [{t.min()}, {t.max()}]")
    mask = (t >= lo) & (t <= hi)
    if mask.sum() < 10:
        raise ConfigurationError(
            f"only {int(mask.sum())} points in window, need at least 10")
    tw, vw = t[mask], value[mask]
    if np.any(vw <= 0.0):
        raise ConfigurationError("nonpositive values in fit window")
    slope, intercept = np.polyfit(np.log(tw), np.log(vw), 1)
    resid = np.log(vw) - (slope * np.log(tw) + intercept)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return RateFit(slope=float(slope), intercept=float(intercept),
                   window=(lo, hi), residual=rms, n_points=int(mask.sum()))


_LEGEND = {"td0": "TD(0)", "gtd": "GTD", "agtd": "A-GTD"}
SOLVED_THRESHOLD = -180.0


def emit_plots(aggregates: Dict[str, str], out_dir: str) -> List[str]:
    """Write the proxy and reward comparison figures as SVG.

    aggregates maps method tag to its aggregate CSV path.  Returns the
    two figure paths.
    """
    if not aggregates:
        raise ConfigurationError("no methods given, nothing to plot")
    unknown = set(aggregates) - set(_METHODS)
    if unknown:
        raise ConfigurationError(f"unknown method tags {sorted(unknown)}")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series = {}
    for method, path in aggregates.items():
        try:
            data = np.genfromtxt(path, delimiter=",", names=True)
        except OSError as exc:
            raise OSError(f"cannot read aggregate {path}: {exc}") from exc
        need = ("k", "grad_proxy_mean", "eval_reward_mean")
        for col in need:
            if col not in data.dtype.names:
                raise ConfigurationError(f"{path}: missing column {col}")
        series[method] = data
    os.makedirs(out_dir, exist_ok=True)
    specs = [("grad_proxy_mean", "gradient-norm proxy", "fig_grad_proxy.svg"),
             ("eval_reward_mean", "average evaluation reward",
              "fig_eval_reward.svg")]
    paths = []
    for col, ylabel, fname in specs:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for method in _METHODS:
            if method not in series:
                continue
            data = series[method]
            ax.plot(np.atleast_1d(data["k"]), np.atleast_1d(data[col]),
                    label=_LEGEND[method])
        if col == "eval_reward_mean":
            ax.axhline(SOLVED_THRESHOLD, color="gray", linestyle="--",
                       linewidth=1.0, label="solved")
        ax.set_xlabel("actor updates")
        ax.set_ylabel(ylabel)
        ax.legend()
        fig.tight_layout()
        path = os.path.join(out_dir, fname)
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)
    return paths


def default_checkpoints(n_steps: int, count: int = 60) -> np.ndarray:
    """Log-spaced unique integer checkpoints in [1, n_steps]."""
    if n_steps < 1:
        raise ConfigurationError(f"need at least one step, got {n_steps}")
    raw = np.logspace(0.0, math.log10(n_steps), count)
    return np.unique(np.round(raw).astype(np.int64))


_METHOD_ID = {"td0": 0, "gtd": 1, "agtd": 2}


def critic_error_curves(m, policy, features, method: str,
                        schedule: StepSchedule, seeds: Iterable[int],
                        n_steps: int,
                        checkpoints: Optional[np.ndarray] = None,
                        radius: float = 20.0):
    """Critic-only error curves ||xi_t - xi*|| on a finite MDP.

    Tuples are presampled i.i.d. from the stationary distribution, so
    every seed's stream is identical across compute backends.  Returns
    (checkpoints, errors) with errors shaped (n_seeds, n_checkpoints).
    """
    if method not in _METHOD_ID:
        raise ConfigurationError(f"unknown critic method {method!r}")
    if checkpoints is None:
        checkpoints = default_checkpoints(n_steps)
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    xi_star = oracle.td_fixed_point(m, policy, features)
    p = features.dim
    pairs = m.n_states * m.n_actions
    phi = np.zeros((pairs, p))
    r_pair = np.zeros(pairs)
    for s in range(m.n_states):
        for a in range(m.n_actions):
            idx = features.pair_index(s, a)
            phi[idx] = features(s, a)
            r_pair[idx] = m.R[s, a]
    ak, aa, ab, bexp = schedule.kernel_coding()
    mid = _METHOD_ID[method]
    seeds = list(seeds)
    errors = np.zeros((len(seeds), len(checkpoints)))
    for row, seed in enumerate(seeds):
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        pair_idx, next_idx = oracle.presample_tuples(m, policy, n_steps, rng)
        xi = np.zeros(p)
        z = np.zeros(p if method == "agtd" else 1)
        y = np.zeros(1)
        err = np.zeros(len(checkpoints))
        K.critic_chunk(mid, xi, z, y, 0, pair_idx, next_idx, phi, r_pair,
                       m.gamma, radius, ak, aa, ab, bexp, schedule.reg,
                       checkpoints, xi_star, err)
        errors[row] = err
    return checkpoints, errors
