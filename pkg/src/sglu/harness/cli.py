"""Command-line entry point: ``sglu <command> [flags]``.

Commands ``bound``, ``plan`` and ``verify`` print JSON; the experiment
commands print CSV rows with the fixed schema of
:data:`sglu.harness.config.CSV_COLUMNS`. Exit status is 0 on success, 1 on
usage or parameter errors, 2 when a planner cannot meet its target and 3 when
verification fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

from sglu import accountant, verify
from sglu.accountant import BoundSource, Hyperparams, PlannerError
from sglu.data import load_csv, normalize_rows, synthetic_split, truncate_to_multiple
from sglu.harness import experiments
from sglu.harness.config import (
    TARGET_EPS_GRID,
    TRADEOFF_BATCHES,
    TRADEOFF_SIGMAS,
    WORKLOADS,
    burn_in,
    default_lam,
    parse_batch_size,
    read_config_file,
)
from sglu.model import LogisticModel

EXIT_OK, EXIT_USAGE, EXIT_PLANNER, EXIT_VERIFY = 0, 1, 2, 3

PNSGD_MODES = ("nonconvergent", "convergent", "random_batch", "convex_only", "sequential")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(raw: str) -> list[float]:
    return [float(v) for v in raw.split(",") if v.strip()]


def _str_list(raw: str) -> list[str]:
    return [v.strip() for v in raw.split(",") if v.strip()]


def _epochs(raw: str) -> float:
    value = float(raw)
    if value < 0 or (math.isfinite(value) and value != int(value)):
        raise argparse.ArgumentTypeError(f"epochs must be a non-negative integer or inf, got {raw}")
    return value


def _synthetic(raw: str) -> tuple[int, int, float]:
    parts = raw.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("--synthetic takes n,d,margin")
    return int(parts[0]), int(parts[1]), float(parts[2])


def _alpha(raw: str):
    if raw == "auto":
        return raw
    value = float(raw)
    if not value > 1:
        raise argparse.ArgumentTypeError(f"alpha must exceed 1 or be 'auto', got {raw}")
    return value


# --------------------------------------------------------------------------- parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; command-line flags take precedence")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write output here instead of standard output")


def _add_constants(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workload", choices=sorted(WORKLOADS),
                   help="take n, lambda and d from a named feature set")
    p.add_argument("--n", type=int, help="dataset size")
    p.add_argument("--lam", type=float, help="l2 weight (default 1e-6 * n)")
    p.add_argument("--dim", type=int, help="feature dimension")
    p.add_argument("--R", type=float, default=100.0, help="projection radius")
    p.add_argument("--M", type=float, default=1.0, help="gradient clipping radius")
    p.add_argument("--delta", type=float, help="DP delta (default 1/n)")


def _add_data(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", help="training CSV: features then a label column")
    p.add_argument("--test-dataset", help="evaluation CSV (default: the training data)")
    p.add_argument("--synthetic", type=_synthetic, metavar="N,D,MARGIN",
                   help="generate separable data instead of reading CSVs")
    p.add_argument("--test-size", type=int, help="synthetic evaluation rows (default N)")
    p.add_argument("--class-pair", type=_str_list, metavar="NEG,POS",
                   help="label tags mapped to -1 and +1")
    p.add_argument("--lam", type=float, help="l2 weight (default 1e-6 * n)")
    p.add_argument("--R", type=float, default=100.0, help="projection radius")
    p.add_argument("--M", type=float, default=1.0, help="gradient clipping radius")
    p.add_argument("--delta", type=float, help="DP delta (default 1/n)")
    p.add_argument("--trials", type=int, default=20)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sglu", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bound", help="evaluate one unlearning bound (JSON)")
    _add_common(p)
    _add_constants(p)
    p.add_argument("--mode", choices=PNSGD_MODES + ("lu",), default="convergent")
    p.add_argument("--batch-size", default="full")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--K", type=_epochs, required=True, help="unlearning epochs")
    p.add_argument("--epochs", type=_epochs, help="learning epochs T (inf = converged)")
    p.add_argument("--alpha", type=_alpha, default="auto")
    p.add_argument("--z", type=float, help="running W-infinity budget (sequential mode)")
    p.add_argument("--S", type=int, default=1, help="points per request (lu mode)")

    p = sub.add_parser("plan", help="plan sigma, K or a sequential schedule (JSON)")
    _add_common(p)
    _add_constants(p)
    p.add_argument("--mode", choices=("nonconvergent", "convergent", "random_batch",
                                      "convex_only"), default="nonconvergent")
    p.add_argument("--batch-size", default="full")
    p.add_argument("--sigma", type=float, help="fixed noise: plan K instead of sigma")
    p.add_argument("--target-eps", type=float, required=True)
    p.add_argument("--epochs", type=_epochs, help="learning epochs T")
    p.add_argument("--k-budget", type=int, default=1)
    p.add_argument("--requests", type=int, default=1,
                   help="with --sigma and more than one request, plan a sequential schedule")

    p = sub.add_parser("learn", help="train and report accuracy (CSV)")
    _add_common(p)
    _add_data(p)
    p.add_argument("--batch-size", default="128")
    p.add_argument("--sigma", type=float)
    p.add_argument("--target-eps", type=float, help="plan sigma for --k-budget epochs")
    p.add_argument("--k-budget", type=int, default=1)
    p.add_argument("--epochs", type=int)

    p = sub.add_parser("unlearn-one", help="one request, sigma planned per target (CSV)")
    _add_common(p)
    _add_data(p)
    p.add_argument("--batch-size", default="128")
    p.add_argument("--target-eps", type=_float_list, default=list(TARGET_EPS_GRID))
    p.add_argument("--k-budget", type=int, default=1)
    p.add_argument("--epochs", type=int)

    p = sub.add_parser("sequential", help="a stream of single-point requests (CSV)")
    _add_common(p)
    _add_data(p)
    p.add_argument("--batch-size", default="128")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--target-eps", type=float, default=1.0)
    p.add_argument("--requests", type=int, default=100)
    p.add_argument("--epochs", type=int)

    p = sub.add_parser("tradeoff", help="sweep sigma and batch size (CSV)")
    _add_common(p)
    _add_data(p)
    p.add_argument("--sigma", type=_float_list, default=list(TRADEOFF_SIGMAS))
    p.add_argument("--batch-size", type=_str_list, default=list(TRADEOFF_BATCHES))
    p.add_argument("--target-eps", type=float, default=0.01)

    p = sub.add_parser("baselines", help="SGLU against D2D and LU accountants (CSV)")
    _add_common(p)
    _add_constants(p)
    p.add_argument("--batch-size", default="full")
    p.add_argument("--sigma", type=float, default=0.03)
    p.add_argument("--target-eps", type=float, default=1.0)
    p.add_argument("--requests", type=int, default=100)
    p.add_argument("--d2d-steps", type=_float_list, default=[1, 5])
    p.add_argument("--lu-group", type=int, default=10)

    p = sub.add_parser("verify", help="run the oracle suites (JSON)")
    _add_common(p)
    p.add_argument("--quick", action="store_true", help="fewer configurations per suite")
    p.add_argument("--bound-scale", type=float, default=1.0,
                   help="scale the accountant's bound on the oracle side (fault injection)")
    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = _subparser(parser, args.command)
        known = {a.dest for a in sub._actions}
        try:
            values = read_config_file(args.config)
        except (OSError, ValueError) as exc:
            sub.error(str(exc))
        unknown = sorted(set(values) - known)
        if unknown:
            sub.error(f"unknown config keys: {', '.join(unknown)}")
        # string defaults go through each flag's type conversion
        sub.set_defaults(**values)
        for action in sub._actions:
            if action.dest in values:
                action.required = False
        args = parser.parse_args(argv)
    return args


# --------------------------------------------------------------------------- helpers


def _constants(args) -> tuple[int, float, int | None, float]:
    """``(n, lam, d, delta)`` from ``--workload`` and explicit overrides."""
    w = WORKLOADS.get(args.workload) if args.workload else None
    n = args.n if args.n is not None else (w.n if w else None)
    if n is None:
        raise UsageError("need --n or --workload")
    lam = args.lam if args.lam is not None else (w.lam if w else default_lam(n))
    d = args.dim if args.dim is not None else (w.d if w else None)
    delta = args.delta if args.delta is not None else 1.0 / n
    return n, lam, d, delta


def _load_bench(args, b_max: int | None) -> experiments.Workbench:
    if args.synthetic and args.dataset:
        raise UsageError("give either --dataset or --synthetic, not both")
    if args.synthetic:
        n, d, margin = args.synthetic
        test_size = args.test_size if args.test_size is not None else n
        train, test = synthetic_split(n, test_size, d, margin, args.seed)
    elif args.dataset:
        pair = args.class_pair
        train = normalize_rows(load_csv(args.dataset, class_pair=pair))
        test = normalize_rows(load_csv(args.test_dataset, class_pair=pair)) if args.test_dataset else None
    else:
        raise UsageError("need --dataset or --synthetic")
    if b_max is not None and b_max < train.n:
        train = truncate_to_multiple(train, b_max)
    lam = args.lam if args.lam is not None else default_lam(train.n)
    return experiments.Workbench(train, test, LogisticModel(lam, train.dim, args.M))


def _batch_size(raw, n: int) -> int:
    try:
        return parse_batch_size(raw, n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, default=_json_default)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _json_default(value):
    if isinstance(value, BoundSource):
        return value.value
    if hasattr(value, "item"):
        return value.item()
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _finite(x):
    return int(x) if math.isfinite(x) else "inf"


def _hyper_dict(h: Hyperparams) -> dict:
    return dataclasses.asdict(h)


# --------------------------------------------------------------------------- commands


def cmd_bound(args) -> int:
    n, lam, _, delta = _constants(args)
    b = _batch_size(args.batch_size, n)
    h = Hyperparams.for_logistic(n, b, lam, args.sigma, M=args.M, R=args.R)
    T = args.epochs if args.epochs is not None else (
        math.inf if args.mode in ("convergent", "sequential") else burn_in(b, n))
    if args.mode == "lu":
        def fn(a):
            return accountant.baselines._lu_eps(h.m, h.M, n, h.sigma, h.eta, args.S, args.K, a)
    else:
        if args.mode == "sequential" and args.z is None:
            raise UsageError("--mode sequential needs --z")
        fn = accountant.epsilon_fn(h, args.K, mode=BoundSource(args.mode), T=T, z=args.z)
    if args.alpha == "auto":
        alpha, eps_dp = accountant.optimize_alpha(fn, delta, vectorized=True)
    else:
        alpha = args.alpha
        eps_dp = None
    eps = float(fn(alpha))
    if eps_dp is None:
        eps_dp = accountant.ru_to_dp(eps, alpha, delta)
    _emit_json({"mode": args.mode, "alpha": alpha, "epsilon": eps, "delta": delta,
                "eps_dp": eps_dp, "K": _finite(args.K), "T": _finite(T),
                "hyperparams": _hyper_dict(h)}, args.out)
    return EXIT_OK


def cmd_plan(args) -> int:
    n, lam, _, delta = _constants(args)
    b = _batch_size(args.batch_size, n)
    mode = BoundSource(args.mode)
    T = args.epochs if args.epochs is not None else burn_in(b, n)
    h = Hyperparams.for_logistic(n, b, lam, args.sigma or 1.0, M=args.M, R=args.R)
    payload = {"mode": mode.value, "target_eps": args.target_eps, "delta": delta, "T": _finite(T)}
    if args.sigma is None:
        sigma = accountant.sigma_search(h, T, args.k_budget, args.target_eps, delta, mode=mode)
        hs = h.replace(sigma=sigma)
        alpha, eps = accountant.converted_epsilon(hs, args.k_budget, delta, mode=mode, T=T)
        payload.update(sigma=sigma, K=args.k_budget, alpha=alpha, eps_dp=eps)
    elif args.requests > 1:
        plan = accountant.sequential_plan(h, args.requests, args.target_eps, delta)
        payload.update(mode="sequential", sigma=args.sigma, T="inf", ks=list(plan.ks),
                       zs=list(plan.zs), eps_dp=list(plan.eps_dp),
                       cumulative_epochs=plan.cumulative_epochs)
    else:
        k = accountant.least_k(h, T, args.target_eps, delta, mode=mode)
        alpha, eps = accountant.converted_epsilon(h, k, delta, mode=mode, T=T)
        payload.update(sigma=args.sigma, K=k, alpha=alpha, eps_dp=eps)
    payload["hyperparams"] = _hyper_dict(h.replace(sigma=payload["sigma"]))
    _emit_json(payload, args.out)
    return EXIT_OK


def cmd_learn(args) -> int:
    b_raw = args.batch_size
    bench = _load_bench(args, None if str(b_raw).lower() == "full" else int(b_raw))
    b = _batch_size(b_raw, bench.n)
    T = args.epochs if args.epochs is not None else burn_in(b, bench.n)
    sigma = args.sigma
    if (sigma is None) == (args.target_eps is None):
        raise UsageError("give exactly one of --sigma and --target-eps")
    if sigma is None:
        delta = args.delta if args.delta is not None else 1.0 / bench.n
        sigma = accountant.sigma_search(bench.hyperparams(b, 1.0, R=args.R), T, args.k_budget,
                                        args.target_eps, delta)
    row = experiments.learn_only(bench, b=b, sigma=sigma, T=T, trials=args.trials,
                                 seed=args.seed, R=args.R)
    experiments.write_rows([row], args.out)
    return EXIT_OK


def cmd_unlearn_one(args) -> int:
    b_raw = args.batch_size
    bench = _load_bench(args, None if str(b_raw).lower() == "full" else int(b_raw))
    b = _batch_size(b_raw, bench.n)
    rows = experiments.unlearn_one(bench, b=b, targets=args.target_eps, delta=args.delta,
                                   T=args.epochs, k_budget=args.k_budget, trials=args.trials,
                                   seed=args.seed, R=args.R)
    experiments.write_rows(rows, args.out)
    return EXIT_OK


def cmd_sequential(args) -> int:
    b_raw = args.batch_size
    bench = _load_bench(args, None if str(b_raw).lower() == "full" else int(b_raw))
    b = _batch_size(b_raw, bench.n)
    rows, _ = experiments.sequential(bench, b=b, sigma=args.sigma, target=args.target_eps,
                                     requests=args.requests, delta=args.delta, T=args.epochs,
                                     trials=args.trials, seed=args.seed, R=args.R)
    experiments.write_rows(rows, args.out)
    return EXIT_OK


def cmd_tradeoff(args) -> int:
    numeric = [int(v) for v in args.batch_size if v.lower() != "full"]
    bench = _load_bench(args, max(numeric) if numeric else None)
    sizes = [_batch_size(v, bench.n) for v in args.batch_size]
    rows = experiments.tradeoff(bench, sigmas=args.sigma, batch_sizes=sizes,
                                target=args.target_eps, delta=args.delta, trials=args.trials,
                                seed=args.seed, R=args.R)
    experiments.write_rows(rows, args.out)
    return EXIT_OK


def cmd_baselines(args) -> int:
    n, lam, d, delta = _constants(args)
    if d is None:
        raise UsageError("baselines need the feature dimension: --dim or --workload")
    b = _batch_size(args.batch_size, n)
    rows = experiments.baselines(n=n, lam=lam, d=d, b=b, sigma=args.sigma,
                                 target=args.target_eps, requests=args.requests, delta=delta,
                                 M=args.M, R=args.R, d2d_steps=[int(s) for s in args.d2d_steps],
                                 lu_group=args.lu_group)
    experiments.write_rows(rows, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify.run_suite(quick=args.quick, seed=args.seed, bound_scale=args.bound_scale)
    _emit_json(report, args.out)
    if not report["ok"]:
        for name, suite in report["suites"].items():
            if suite["failures"]:
                print(f"verify: {name} failed: {suite['first_failure']}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {
    "bound": cmd_bound,
    "plan": cmd_plan,
    "learn": cmd_learn,
    "unlearn-one": cmd_unlearn_one,
    "sequential": cmd_sequential,
    "tradeoff": cmd_tradeoff,
    "baselines": cmd_baselines,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors and --help this way
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except PlannerError as exc:
        print(f"sglu {args.command}: planner failure: {exc}", file=sys.stderr)
        return EXIT_PLANNER
    except (UsageError, ValueError, OSError) as exc:
        print(f"sglu {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
