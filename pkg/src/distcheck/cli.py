"""``distcheck`` command line.

Precedence for experiment settings: explicit flag > ``--config`` JSON field >
built-in default. The seed comes from ``--seed``, else ``DISTCHECK_SEED``,
else the config file, else 0. Exit codes: 0 success, 1 failed suite or
accounting mismatch, 2 invalid configuration.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from . import harness
from .harness import BenchConfig, ConfigError, ExperimentConfig, InstanceRun
from .lemmas import SUITES

COMMAND_NAMES = {"test-uniformity": "uniformity", "test-identity": "identity",
                 "test-closeness-l2": "closeness-l2"}


def _tester_override(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        raise argparse.ArgumentTypeError(f"bad value for {key}: {value!r}") from None
    return key.strip(), parsed


def _grid(text: str, cast=float):
    try:
        return tuple(cast(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--k", type=int, help="domain size")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="master seed (fallback: $DISTCHECK_SEED)")
    p.add_argument("--qme-backend", choices=("ideal", "mom"))
    p.add_argument("--qme-noise", help="zero | uniform | adv-high | adv-low | adv-to:<x>")
    p.add_argument("--instance", action="append", default=[],
                   help="[ROLE=]P[,Q][@NOISE], e.g. alt=subset:5000@adv-to:0 (repeatable)")
    p.add_argument("--string-oracle", help="file with a string oracle; tested as an alt instance")
    p.add_argument("--tester", action="append", type=_tester_override, default=[],
                   metavar="KEY=VALUE", help="tester constant override (repeatable)")
    p.add_argument("--out", help="CSV of per-trial rows")
    p.add_argument("--plot", help="SVG of accept rates")
    p.add_argument("--verdicts", help="JSON lines, one verdict per trial")
    p.add_argument("--wall-time", action="store_true", default=None,
                   help="add a wall_time column (makes the CSV run-dependent)")
    p.add_argument("--jobs", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distcheck", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test-uniformity", help="test p = U_k in one of four regimes")
    _common(p)
    p.add_argument("--regime", choices=harness.REGIMES)

    p = sub.add_parser("test-identity", help="test p = q for a known reference q")
    _common(p)
    p.add_argument("--reference", help="pmf as a one-line JSON array")

    p = sub.add_parser("test-closeness-l2", help="tolerant l2 closeness of two codes")
    _common(p)

    p = sub.add_parser("validate-lemmas", help="run the exhaustive identity/bound suites")
    p.add_argument("--suite", action="append", choices=SUITES + ("all",),
                   help="suite to run (repeatable; default all)")

    p = sub.add_parser("bench-scaling", help="minimal budgets over a grid and a log-log slope")
    p.add_argument("--regime", choices=("large", "classical", "giant"), default="large")
    p.add_argument("--sweep", choices=("k", "theta"), default="k")
    p.add_argument("--k-grid", type=lambda s: _grid(s, int))
    p.add_argument("--theta-grid", "--param-grid", dest="param_grid", type=_grid)
    p.add_argument("--k", type=int, help="fixed k for a theta sweep")
    p.add_argument("--gamma", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--r", type=int, help="r for the giant-regime r-to-1 alternative")
    p.add_argument("--target", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--budget-cap", type=int)
    p.add_argument("--bootstrap", type=int)
    p.add_argument("--out")
    p.add_argument("--plot")
    return parser


def experiment_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    command = COMMAND_NAMES[args.command]
    seed = args.seed if args.seed is not None else harness.env_seed(cfg.master_seed)
    instances = tuple(InstanceRun.parse(x) for x in args.instance) or None
    if args.string_oracle:
        instances = (instances or cfg.instances) + (InstanceRun(string_oracle=args.string_oracle),)
    tester = dict(cfg.tester)
    tester.update(dict(args.tester))
    reference = None
    if getattr(args, "reference", None):
        reference = tuple(harness.load_pmf(args.reference).probs)
    return cfg.with_overrides(
        command=command, regime=getattr(args, "regime", None), k=args.k,
        epsilon=args.epsilon, gamma=args.gamma, tau=args.tau, theta=args.theta,
        instances=instances, reference=reference, tester=tester,
        qme_backend=args.qme_backend, qme_noise=args.qme_noise, trials=args.trials,
        master_seed=seed, jobs=args.jobs, out=args.out, plot=args.plot,
        wall_time=args.wall_time).validate()


def cmd_test(args) -> int:
    cfg = experiment_from_args(args)
    result = harness.run_trials(cfg)
    harness.emit(result)
    if args.verdicts:
        harness.write_text(args.verdicts, "".join(
            json.dumps(asdict(r), sort_keys=True) + "\n" for r in result.reports))
    for s in result.summaries:
        print(s.line())
    if not result.accounting_ok:
        print("accounting mismatch: code uses differ from the declared cost", file=sys.stderr)
        return 1
    return 0


def cmd_lemmas(args) -> int:
    suites = args.suite or ["all"]
    if "all" in suites:
        suites = list(SUITES)
    results, ok = harness.run_lemma_suites(suites)
    for r in results:
        print(r.line())
    print("all suites passed" if ok else "suite failure")
    return 0 if ok else 1


def cmd_bench(args) -> int:
    param = {"large": args.gamma if args.gamma is not None else args.theta,
             "classical": args.epsilon, "giant": args.theta}[args.regime]
    kw = {"regime": args.regime, "sweep": args.sweep, "k_grid": args.k_grid,
          "param_grid": args.param_grid, "k": args.k, "param": param, "target": args.target,
          "trials": args.trials, "budget_cap": args.budget_cap, "bootstrap": args.bootstrap,
          "rto1_r": args.r}
    seed = args.seed if args.seed is not None else harness.env_seed(0)
    bc = BenchConfig(master_seed=seed, **{k: v for k, v in kw.items() if v is not None})
    result = harness.bench_scaling(bc)
    if args.out:
        harness.write_text(args.out, harness.bench_csv(result))
    if args.plot:
        harness.write_text(args.plot, harness.bench_svg(result))
    for r in result.rows:
        flag = "" if r.reached else "  (unreached, excluded from fit)"
        print(f"k={r.k} param={r.param:g} budget={r.budget} cost={r.cost} "
              f"rate={r.success_rate:.3f}{flag}")
    if result.fit is None:
        print("not enough reached points for a fit")
        return 1
    f = result.fit
    print(f"slope {f.slope:.4f} (95% bootstrap [{f.ci_low:.4f}, {f.ci_high:.4f}], {f.points} points)")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in COMMAND_NAMES:
            return cmd_test(args)
        if args.command == "validate-lemmas":
            return cmd_lemmas(args)
        return cmd_bench(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
