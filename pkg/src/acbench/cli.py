"""Command-line front end: run experiments, re-aggregate traces, fit
rate slopes, and render the comparison figures.

Exit codes: 0 success, 1 configuration error, 2 aborted run, 3 I/O error.
"""

from __future__ import annotations

import argparse
import glob
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import harness, oracle
from .critic import StepSchedule
from .errors import ConfigurationError, RunAborted


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acbench",
        description="Actor-critic benchmark runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment across seeds")
    run.add_argument("--config", help="flat key=value config file")
    run.add_argument("--seeds", help='seed range "a..b" or list "a,b,c"')
    run.add_argument("--out", help="output directory")
    run.add_argument("--method", choices=("td0", "gtd", "agtd"))
    run.add_argument("--env", choices=("nav", "finite"))

    agg = sub.add_parser("aggregate",
                         help="re-fold per-seed trace CSVs into the aggregate")
    agg.add_argument("--out", required=True, help="directory holding traces")
    agg.add_argument("--method", required=True, choices=("td0", "gtd", "agtd"))

    fit = sub.add_parser("fit", help="critic-only rate fit on the tabular "
                                     "instances (slope of ||xi_t - xi*||)")
    fit.add_argument("--method", required=True, choices=("td0", "gtd", "agtd"))
    fit.add_argument("--seeds", default="0..29")
    fit.add_argument("--steps", type=int, default=10 ** 5)
    fit.add_argument("--window", default="100:100000",
                     help="fit window lo:hi over critic steps")
    fit.add_argument("--out", help="optional CSV path for the mean curve")

    plot = sub.add_parser("plot", help="render figures from aggregate CSVs")
    plot.add_argument("--out", required=True,
                      help="directory holding aggregate_<method>.csv files")
    plot.add_argument("--method", action="append", choices=("td0", "gtd", "agtd"),
                      help="restrict to these methods (repeatable)")
    return parser


def _cmd_run(args) -> int:
    if args.config:
        cfg = harness.ExperimentConfig.from_file(args.config)
    else:
        cfg = harness.ExperimentConfig()
    overrides = {}
    if args.seeds:
        overrides["seeds"] = harness.parse_seeds(args.seeds)
    if args.out:
        overrides["out"] = args.out
    if args.method:
        overrides["method"] = args.method
    if args.env:
        overrides["env"] = args.env
    if overrides:
        import dataclasses
        if "out" in overrides:
            overrides["out_dir"] = overrides.pop("out")
        cfg = dataclasses.replace(cfg, **overrides)
    summary = harness.run_experiment(cfg)
    for path in summary["traces"]:
        print(path)
    print(summary["aggregate"])
    return 0


def _cmd_aggregate(args) -> int:
    pattern = os.path.join(args.out, f"trace_{args.method}_seed*.csv")
    paths = sorted(glob.glob(pattern))
    if not paths:
        raise ConfigurationError(f"no trace files match {pattern}")
    text = harness.aggregate_csv_text(paths)
    out_path = harness.aggregate_path(args.out, args.method)
    harness._write(out_path, text)
    print(out_path)
    return 0


def _rate_setup(method: str):
    """Instance + schedule used for the critic-only rate check."""
    if method == "td0":
        m = oracle.desk_mdp()
        feats = oracle.desk_features_onehot()
        pol = oracle.uniform_policy(m)
        omega = oracle.min_eig_omega(m, pol, feats)
        return m, feats, pol, StepSchedule.td_finite(omega, m.gamma)
    m = oracle.rate_mdp()
    feats = oracle.rate_features()
    pol = oracle.uniform_policy(m)
    if method == "gtd":
        return m, feats, pol, StepSchedule.gtd(c_alpha=oracle.RATE_C_ALPHA_GTD)
    return m, feats, pol, StepSchedule.agtd(c_alpha=oracle.RATE_C_ALPHA_AGTD)


def _cmd_fit(args) -> int:
    lo, _, hi = args.window.partition(":")
    try:
        window = (float(lo), float(hi))
    except ValueError as exc:
        raise ConfigurationError(f"bad window {args.window!r}") from exc
    seeds = harness.parse_seeds(args.seeds)
    m, feats, pol, sched = _rate_setup(args.method)
    cks, errs = harness.critic_error_curves(
        m, pol, feats, args.method, sched, seeds, args.steps)
    mean = errs.mean(axis=0)
    fit = harness.fit_rate(cks, mean, window)
    print(f"method={args.method} seeds={len(seeds)} steps={args.steps}")
    print(f"slope={fit.slope:.4f} intercept={fit.intercept:.4f} "
          f"residual={fit.residual:.4f} points={fit.n_points}")
    if args.out:
        rows = ["t,mean_error"]
        rows += [f"{int(t)},{repr(float(v))}" for t, v in zip(cks, mean)]
        harness._write(args.out, "\n".join(rows) + "\n")
        print(args.out)
    return 0


def _cmd_plot(args) -> int:
    methods = args.method or ("td0", "gtd", "agtd")
    aggregates = {}
    for method in methods:
        path = harness.aggregate_path(args.out, method)
        if os.path.exists(path):
            aggregates[method] = path
    if not aggregates:
        raise ConfigurationError(
            f"no aggregate CSVs for {tuple(methods)} under {args.out}")
    for path in harness.emit_plots(aggregates, args.out):
        print(path)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "aggregate": _cmd_aggregate,
                "fit": _cmd_fit, "plot": _cmd_plot}
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except RunAborted as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
