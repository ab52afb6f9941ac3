"""Command-line entry point.

Exit codes: 0 success (or Robust for certify), 1 Unknown/Reject,
2 usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .attacks import fgsm, min_pgd, min_random, pgd
from .data import gen_synthetic, load_dataset, save_csv
from .errors import RobustvalError
from .evaluation import evaluate, write_report
from .network import load_network, save_network
from .radius import SearchParams, approximate_radius, batch_radii
from .train import train_sgd
from .validators import bootstrap_window, window_step
from .zonotope import is_robust

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_USAGE = 2
EXIT_DATA = 3

REFERENCE_DEFAULTS = {
    "up": 0.256,
    "tol": 0.001,
    "epsilon": [0.1, 0.05],
    "threshold": 0.01,
    "window_size": 50,
    "sigma0": 0.014,
    "sigma1": 0.001,
}


def _echo_config(args: argparse.Namespace) -> None:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print(json.dumps({"config": cfg, "version": __version__}, default=str), flush=True)


def _search_params(args) -> SearchParams:
    return SearchParams(up=args.up, e=args.tol, domain=args.domain)


def cmd_train(args) -> int:
    ds = load_dataset(args.dataset, args.format)
    net, stats = train_sgd(ds, args.architecture, args.epochs, args.lr,
                           args.seed, activation=args.activation)
    save_network(net, args.out)
    print(json.dumps({"stats": stats, "network": args.out}))
    return EXIT_OK


def cmd_gen_data(args) -> int:
    ds = gen_synthetic(args.classes, args.dims, args.per_class, args.spread, args.seed)
    save_csv(ds, args.out)
    print(json.dumps({"samples": len(ds), "out": args.out}))
    return EXIT_OK


def cmd_attack(args) -> int:
    net = load_network(args.network)
    ds = load_dataset(args.dataset, args.format)
    attacks = {
        "fgsm": lambda x, y: fgsm(net, x, y, args.epsilon[0]),
        "pgd": lambda x, y: pgd(net, x, y, args.epsilon[0]),
        "minpgd": lambda x, y: min_pgd(net, x, y),
        "random": lambda x, y: min_random(net, x, y, seed=args.seed),
    }
    run = attacks[args.attack]
    with open(args.out, "w") as fh:
        for i, (x, y) in enumerate(zip(ds.inputs, ds.labels)):
            r = run(x, int(y))
            fh.write(json.dumps({
                "id": i,
                "attack": args.attack,
                "success": r.success,
                "original_label": r.original_label,
                "adversarial_label": r.adversarial_label,
                "perturbation_linf": r.perturbation_linf,
                "adversarial": r.adversarial.tolist(),
            }) + "\n")
    return EXIT_OK


def cmd_radius(args) -> int:
    net = load_network(args.network)
    ds = load_dataset(args.dataset, args.format)
    results = batch_radii(net, list(ds.inputs), _search_params(args), args.jobs)
    for i, r in enumerate(results):
        print(json.dumps({
            "id": i,
            "radius": r.radius,
            "iterations": r.iterations,
            "probes": r.probes,
            "wall_time": r.wall_time,
            "hit_upper": r.hit_upper,
            "error": r.error,
        }))
    return EXIT_OK


def cmd_certify(args) -> int:
    net = load_network(args.network)
    ds = load_dataset(args.dataset, args.format)
    verdict = is_robust(net, ds.inputs[args.index], args.delta, args.domain)
    print(json.dumps({"robust": verdict.robust, "delta": args.delta}))
    return EXIT_OK if verdict.robust else EXIT_REJECT


def cmd_validate(args) -> int:
    net = load_network(args.network)
    params = _search_params(args)
    stream = open(args.dataset) if args.dataset else sys.stdin
    try:
        bootstrap: list[float] = []
        state = None
        if args.bootstrap_radii:
            with open(args.bootstrap_radii) as fh:
                bootstrap = [float(line) for line in fh if line.strip()]
            state = bootstrap_window(bootstrap, args.window_size, args.sigma0, args.sigma1)
        for line in stream:
            line = line.strip()
            if not line:
                continue
            x = np.array([float(v) for v in line.split(",")], dtype=np.float64)
            radius = approximate_radius(net, x, params).radius
            if state is None:
                bootstrap.append(radius)
                print(json.dumps({"radius": radius, "accepted": True,
                                  "reason": "Bootstrap"}), flush=True)
                if len(bootstrap) >= args.window_size:
                    state = bootstrap_window(bootstrap, args.window_size,
                                             args.sigma0, args.sigma1)
                continue
            decision, state = window_step(state, radius)
            print(json.dumps({
                "radius": radius,
                "accepted": decision.accepted,
                "reason": decision.reason.value,
                "p_before": decision.p_before,
                "p_after": decision.p_after,
            }), flush=True)
    finally:
        if stream is not sys.stdin:
            stream.close()
    return EXIT_OK


def cmd_evaluate(args) -> int:
    net = load_network(args.network)
    ds = load_dataset(args.dataset, args.format)
    report = evaluate(net, ds, _search_params(args), n_per_category=args.per_category,
                      parallelism=args.jobs, seed=args.seed)
    write_report(report, args.out)
    print(json.dumps({
        "out": args.out,
        "separation_ratio": report.separation_ratio,
        "valid_pvalue": report.valid_pvalue,
    }))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustval")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=True):
        if dataset:
            p.add_argument("--dataset", required=True)
            p.add_argument("--format", choices=["csv", "idx"], default="csv")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train a dense fixture network")
    common(p)
    p.add_argument("--architecture", default="3x30,10")
    p.add_argument("--activation", choices=["relu", "sigmoid", "tanh"], default="relu")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("gen-data", help="generate a synthetic clustered dataset")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--dims", type=int, default=8)
    p.add_argument("--per-class", type=int, default=250)
    p.add_argument("--spread", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("attack", help="run an attack over a dataset")
    common(p)
    p.add_argument("--network", required=True)
    p.add_argument("--attack", choices=["fgsm", "pgd", "minpgd", "random"], default="fgsm")
    p.add_argument("--epsilon", type=float, action="append")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attack)

    def search_flags(p):
        p.add_argument("--up", type=float, default=REFERENCE_DEFAULTS["up"])
        p.add_argument("--tol", type=float, default=REFERENCE_DEFAULTS["tol"])
        p.add_argument("--domain", choices=["zonotope", "interval"], default="zonotope")

    p = sub.add_parser("radius", help="approximate robustness radius per input")
    common(p)
    p.add_argument("--network", required=True)
    search_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_radius)

    p = sub.add_parser("certify", help="single is_robust query (exit 0 robust, 1 unknown)")
    common(p)
    p.add_argument("--network", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--domain", choices=["zonotope", "interval"], default="zonotope")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("validate", help="stream inputs, one decision per line")
    p.add_argument("--network", required=True)
    p.add_argument("--dataset", help="file of flattened inputs, one csv line each; stdin if omitted")
    p.add_argument("--bootstrap-radii", help="file of trusted radii, one per line")
    search_flags(p)
    p.add_argument("--threshold", type=float, default=REFERENCE_DEFAULTS["threshold"])
    p.add_argument("--window-size", type=int, default=REFERENCE_DEFAULTS["window_size"])
    p.add_argument("--sigma0", type=float, default=REFERENCE_DEFAULTS["sigma0"])
    p.add_argument("--sigma1", type=float, default=REFERENCE_DEFAULTS["sigma1"])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("evaluate", help="full evaluation report")
    common(p)
    p.add_argument("--network", required=True)
    search_flags(p)
    p.add_argument("--per-category", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "epsilon", None) is None and hasattr(args, "epsilon"):
        args.epsilon = list(REFERENCE_DEFAULTS["epsilon"])
    _echo_config(args)
    try:
        return args.func(args)
    except RobustvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
