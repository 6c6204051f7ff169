"""Benchmark CLI: gen | precompute | run | sweep | verify.

All numeric parameters are flags; a JSON config file may supply defaults
via --config, with explicit flags overriding. Outputs are files: generated
instances (instance.json + stream.jsonl + pred.jsonl + gen_meta.json), a
precomputation store directory, per-run steps.jsonl + summary.json, and
sweep.csv.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import harness, scheduler, stream as stream_mod, verify as verify_mod
from .oracle import CountingOracle, load_instance, save_instance
from .scheduler import FrameworkConfig, PrecomputationStore


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with default flag values")
    parser.add_argument("--seed", type=int, default=0)


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k", type=int, default=4)
    parser.add_argument("--eps", type=float, default=0.1)
    parser.add_argument("--w", type=int, default=0)
    parser.add_argument("--variant", default="full",
                        choices=["warmup", "main", "full", "baseline-dynamic"])
    parser.add_argument("--known-eta", type=int, default=None,
                        help="true error (warm-up variant)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynsubmax",
        description="dynamic submodular maximization with update-time predictions")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.sub_map = {}  # command -> subparser, for config-file defaults

    g = sub.add_parser("gen", help="generate an instance, stream, predictions")
    parser.sub_map["gen"] = g
    _add_common(g)
    g.add_argument("--universe", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--corrupt", type=int, default=0)
    g.add_argument("--jitter", type=int, default=0)
    g.add_argument("--w", type=int, default=0)
    g.add_argument("--phantoms", type=int, default=0)
    g.add_argument("--mean-lifetime", type=int, default=None)
    g.add_argument("--function", default="coverage",
                   choices=["coverage", "weighted", "modular"])
    g.add_argument("--items", type=int, default=None)
    g.add_argument("--out")

    p = sub.add_parser("precompute", help="build and persist a store")
    parser.sub_map["precompute"] = p
    _add_common(p)
    _add_run_flags(p)
    p.add_argument("--instance")
    p.add_argument("--pred")
    p.add_argument("--stream", help="used only to infer n")
    p.add_argument("--n", type=int, help="stream length if no --stream")
    p.add_argument("--out")

    r = sub.add_parser("run", help="run one experiment (plus replicas)")
    parser.sub_map["run"] = r
    _add_common(r)
    _add_run_flags(r)
    r.add_argument("--instance")
    r.add_argument("--stream")
    r.add_argument("--pred")
    r.add_argument("--store", help="precomputation store directory")
    r.add_argument("--replicas", type=int, default=1)
    r.add_argument("--ratio-stride", type=int, default=1)
    r.add_argument("--opt-mode", default="auto",
                   choices=["auto", "brute", "greedy", "none"])
    r.add_argument("--out")

    s = sub.add_parser("sweep", help="grid sweep with replicas, CSV out")
    parser.sub_map["sweep"] = s
    _add_common(s)
    _add_run_flags(s)
    s.add_argument("--param", required=True, choices=["eta", "w", "k"])
    s.add_argument("--values", required=True,
                   help="comma-separated grid values")
    s.add_argument("--universe", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--jitter", type=int, default=0)
    s.add_argument("--function", default="coverage",
                   choices=["coverage", "weighted", "modular"])
    s.add_argument("--replicas", type=int, default=1)
    s.add_argument("--ratio-stride", type=int, default=16)
    s.add_argument("--opt-mode", default="greedy",
                   choices=["auto", "brute", "greedy", "none"])
    s.add_argument("--out")

    v = sub.add_parser("verify", help="run a property suite")
    parser.sub_map["verify"] = v
    _add_common(v)
    v.add_argument("suite", choices=list(verify_mod.SUITES))
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--updates", type=int, default=None)
    v.add_argument("--instances", type=int, default=None)
    v.add_argument("--seeds-per-instance", type=int, default=None)
    v.add_argument("--eps", type=float, default=None)
    return parser


REQUIRED = {"gen": ("universe", "n", "out"),
            "precompute": ("instance", "pred", "out"),
            "run": ("instance", "stream", "out"),
            "sweep": ("param", "values", "universe", "n", "out"),
            "verify": ()}


def _apply_config(argv: list[str], parser: argparse.ArgumentParser) -> argparse.Namespace:
    peek, _ = parser.parse_known_args(argv)
    if getattr(peek, "config", None):
        with open(peek.config) as fh:
            defaults = json.load(fh)
        target = parser.sub_map[peek.command]
        target.set_defaults(**{k.replace("-", "_"): v
                               for k, v in defaults.items()})
    args = parser.parse_args(argv)
    missing = [name for name in REQUIRED[args.command]
               if getattr(args, name, None) is None]
    if missing:
        parser.error(f"{args.command} is missing: "
                     + ", ".join(f"--{m}" for m in missing))
    return args


def cmd_gen(args: argparse.Namespace) -> int:
    os.makedirs(args.out, exist_ok=True)
    spec = harness.GenSpec(universe=args.universe, n=args.n, w=args.w,
                           corrupt=args.corrupt, jitter=args.jitter,
                           function=args.function, n_items=args.items,
                           mean_lifetime=args.mean_lifetime,
                           phantoms=args.phantoms)
    oracle, gen = spec.build(args.seed)
    save_instance(oracle, os.path.join(args.out, "instance.json"))
    stream_mod.save_stream(gen.stream, os.path.join(args.out, "stream.jsonl"))
    stream_mod.save_predictions(gen.pred, os.path.join(args.out, "pred.jsonl"))
    meta = {"schema": 1, "eta": gen.eta, "w": args.w, "n": args.n,
            "universe": args.universe, "seed": args.seed,
            "corrupted": list(gen.corrupted), "phantoms": list(gen.phantoms)}
    with open(os.path.join(args.out, "gen_meta.json"), "w") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
    print(f"wrote instance with eta={gen.eta} to {args.out}")
    return 0


def cmd_precompute(args: argparse.Namespace) -> int:
    oracle = load_instance(args.instance)
    pred = stream_mod.load_predictions(args.pred, args.w)
    if args.stream:
        n = stream_mod.load_stream(args.stream).n
    elif args.n:
        n = args.n
    else:
        print("precompute needs --stream or --n", file=sys.stderr)
        return 2
    config = FrameworkConfig(k=args.k, eps=args.eps, w=args.w,
                             variant=args.variant, seed=args.seed,
                             known_eta=args.known_eta)
    config.validate()
    counting = CountingOracle(oracle)
    if args.variant == "baseline-dynamic":
        print("baseline-dynamic has no precomputation phase", file=sys.stderr)
        return 2
    if args.variant == "warmup":
        if args.known_eta is None:
            print("warm-up precompute needs --known-eta", file=sys.stderr)
            return 2
        store = scheduler.warmup_precomputations(
            counting, pred, n, args.k, args.known_eta, args.w, args.eps,
            seed=args.seed)
        os.makedirs(args.out, exist_ok=True)
        scheduler.save_warmup_store(store,
                                    os.path.join(args.out, "warmup.json"))
        print(f"warm-up store: {sum(len(p) for p in store)} pairs, "
              f"{counting.total('precompute')} precompute queries "
              f"-> {args.out}")
        return 0
    if args.variant == "main":
        store = scheduler.main_store(counting, pred, config, n, oracle.universe)
    else:
        store = scheduler.precomputations_full(counting, pred, config, n,
                                               oracle.universe)
    store.save(args.out)
    print(f"store: {store.total_checkpoints()} checkpoints, "
          f"{counting.total('precompute')} precompute queries -> {args.out}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    oracle = load_instance(args.instance)
    stream = stream_mod.load_stream(args.stream)
    pred = (stream_mod.load_predictions(args.pred, args.w)
            if args.pred else None)
    store = None
    warmup_store = None
    if args.store:
        warmup_path = os.path.join(args.store, "warmup.json")
        if os.path.exists(warmup_path):
            warmup_store = scheduler.load_warmup_store(warmup_path)
        else:
            store = PrecomputationStore.load(args.store)
    summaries = []
    for rep in range(args.replicas):
        config = FrameworkConfig(k=args.k, eps=args.eps, w=args.w,
                                 variant=args.variant,
                                 seed=args.seed + rep,
                                 known_eta=args.known_eta)
        out_dir = (args.out if args.replicas == 1
                   else os.path.join(args.out, f"rep{rep:03d}"))
        result = harness.run_experiment(
            oracle, stream, pred, config, out_dir=out_dir,
            ratio_stride=args.ratio_stride, opt_mode=args.opt_mode,
            store=store, warmup_store=warmup_store)
        summaries.append(result.summary)
        print(f"replica {rep}: amortized stream queries "
              f"{result.summary['amortized_stream_queries']:.2f}, "
              f"ratio_mean {result.summary['ratio_mean']}")
    if args.replicas > 1:
        with open(os.path.join(args.out, "replicas.json"), "w") as fh:
            json.dump(summaries, fh, sort_keys=True, indent=2)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    values = [float(v) for v in args.values.split(",")]
    spec = harness.GenSpec(universe=args.universe, n=args.n, w=args.w,
                           jitter=args.jitter, function=args.function)
    config = FrameworkConfig(k=args.k, eps=args.eps, w=args.w,
                             variant=args.variant, seed=args.seed,
                             known_eta=args.known_eta)
    rows, _ = harness.sweep(spec, config, args.param, values, args.replicas,
                            ratio_stride=args.ratio_stride,
                            opt_mode=args.opt_mode,
                            out_csv=os.path.join(args.out, "sweep.csv"))
    failures = sum(row["errors"] for row in rows)
    print(f"sweep complete: {len(rows)} cells, {failures} failed replicas")
    return 0 if failures == 0 else 1


def cmd_verify(args: argparse.Namespace) -> int:
    kwargs = {"seed": args.seed}
    if args.suite in ("oracle", "robust") and args.trials is not None:
        kwargs["trials"] = args.trials
    if args.suite == "engine" and args.updates is not None:
        kwargs["updates"] = args.updates
    if args.suite == "approx":
        if args.instances is not None:
            kwargs["instances"] = args.instances
        if args.seeds_per_instance is not None:
            kwargs["seeds"] = args.seeds_per_instance
        if args.eps is not None:
            kwargs["eps"] = args.eps
        kwargs["progress"] = True
    ok, lines = verify_mod.run_suite(args.suite, **kwargs)
    for line in lines:
        print(line)
    print(f"suite {args.suite}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = _apply_config(argv if argv is not None else sys.argv[1:], parser)
    handlers = {"gen": cmd_gen, "precompute": cmd_precompute, "run": cmd_run,
                "sweep": cmd_sweep, "verify": cmd_verify}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
