"""Runnable property suites: oracle, stream, engine, robust, scheduler, approx.

Each suite returns (ok, report lines) and is exposed through the CLI, which
exits nonzero on failure. The suites are desk-scale versions of the checks
the test suite runs at full acceptance scale.
"""

from __future__ import annotations

import math
import random
from itertools import combinations
from typing import Callable, Iterable, List, Optional, Tuple

from .baselines import brute_force_opt, eager_greedy, lazy_greedy, subset_count
from .engine import DynamicEngine
from .oracle import (CountingOracle, ModularOracle, check_monotone_submodular,
                     random_coverage)
from .robust import robust1_from_dynamic, robust1_standalone, verify_strongly_robust
from .scheduler import FrameworkConfig, run_framework
from .stream import gen_instance, online_error_series, prediction_error
from .harness import RatioBaseline, run_experiment

SUITES = ("oracle", "stream", "engine", "robust", "scheduler", "approx")


def check_engine_properties(engine: DynamicEngine,
                            raw_value: Callable[[frozenset], float],
                            exhaustive_limit: int = 14,
                            tol: float = 1e-9) -> Optional[str]:
    """Threshold-ladder contract at the engine's current state.

    Property 1 (exact): f(SOL) >= |SOL| * gamma / (2k).
    Property 2 (exhaustive when the active set is small and the solution is
    short): every S in the active set with |S| <= k satisfies
    f_SOL(S) < |S| gamma/(2k) + eps (1+eps)/(1-eps) gamma + tol.
    Plus feasibility and capacity invariants. Returns None or a failure.
    """
    view = engine.inspect()
    sol = view.sol
    if not sol <= view.active:
        return "solution outside active set"
    if len(sol) > engine.k:
        return "solution exceeds k"
    floor = len(sol) * engine.gamma / (2 * engine.k)
    f_sol = raw_value(sol)
    if f_sol < floor - tol:
        return f"value property: f(SOL)={f_sol} < {floor}"
    for level, cap in enumerate(view.capacities):
        if len(view.buffers[level]) > cap:
            return f"buffer at level {level} over capacity"
        for (i, lv), bucket in view.buckets.items():
            if lv == level and len(bucket) > cap:
                return f"bucket ({i},{lv}) over capacity"
    union_sel = set()
    for entries in view.selected.values():
        union_sel.update(e for e, _ in entries)
    if union_sel != set(sol):
        return "selected cells do not union to the solution"
    if (len(view.active) <= exhaustive_limit
            and len(sol) < (1 - engine.eps) * engine.k):
        slack = engine.eps * (1 + engine.eps) / (1 - engine.eps) * engine.gamma
        per = engine.gamma / (2 * engine.k)
        for size in range(1, engine.k + 1):
            for combo in combinations(sorted(view.active), size):
                gain = raw_value(sol | set(combo)) - f_sol
                if gain >= size * per + slack + tol:
                    return (f"saturation property: f_SOL({combo})={gain} >= "
                            f"{size * per + slack}")
    return None


def verify_oracle(trials: int = 10_000, seed: int = 0) -> Tuple[bool, List[str]]:
    lines = []
    ok = True
    families = {
        "coverage": random_coverage(200, 500, seed, weighted=False),
        "weighted": random_coverage(60, 150, seed + 1, weighted=True),
        "modular": ModularOracle({e: (e % 7) + 1 for e in range(50)}),
    }
    for name, oracle in families.items():
        res = check_monotone_submodular(oracle, trials=trials, seed=seed)
        ok &= res.ok
        lines.append(f"{'PASS' if res.ok else 'FAIL'} {name}: "
                     f"{res.monotone_violations} monotone / "
                     f"{res.submodular_violations} submodular violations "
                     f"in {trials} trials")
    return ok, lines


def verify_stream(seed: int = 0) -> Tuple[bool, List[str]]:
    lines = []
    ok = True
    cases = [(40, 80, 0, 0, 0), (40, 80, 2, 0, 0), (60, 120, 3, 7, 2),
             (60, 120, 0, 12, 3), (100, 200, 4, 25, 4)]
    for i, (universe, n, w, corrupt, jitter) in enumerate(cases):
        gen = gen_instance(universe, n, w, corrupt, min(jitter, w),
                           seed=seed + i)
        eta = prediction_error(gen.stream, gen.pred)
        good = eta == gen.eta == corrupt
        series = online_error_series(gen.stream, gen.pred)
        good &= all(a <= b for a, b in zip(series, series[1:]))
        good &= series[-1] == eta
        bound = eta + 2 * w
        for t in range(1, n + 1):
            vhat = gen.pred.predicted_set(t)
            vt = gen.stream.active_set(t)
            if len(vhat - vt) > bound:
                good = False
                break
        # elements ever entering the unpredicted active part, counted once
        entered = set()
        prev_v2: frozenset = frozenset()
        for t in range(1, n + 1):
            vt = gen.stream.active_set(t)
            v2 = vt - gen.pred.predicted_set(t)
            entered.update(v2 - prev_v2)
            prev_v2 = v2
        good &= len(entered) <= 2 * eta
        ok &= good
        lines.append(f"{'PASS' if good else 'FAIL'} case {i}: eta={eta}, "
                     f"|unpredicted entries|={len(entered)} <= {2 * eta}")
    return ok, lines


def verify_engine(updates: int = 2000, seed: int = 0,
                  exhaustive_limit: int = 14) -> Tuple[bool, List[str]]:
    rng = random.Random(seed)
    lines = []
    ok = True
    done = 0
    instance = 0
    while done < updates:
        instance += 1
        n_elem = rng.randint(8, exhaustive_limit)
        oracle = random_coverage(n_elem, 3 * n_elem, seed * 997 + instance)
        _, opt = brute_force_opt(oracle.evaluate, oracle.universe, 3)
        if opt <= 0:
            continue
        eps = rng.choice([0.1, 0.2, 0.45])
        gamma = opt / (1 + eps)
        engine = DynamicEngine(oracle.evaluate, k=3, gamma=gamma, eps=eps,
                               capacity_base=n_elem, seed=seed + instance)
        engine.end_init_batch()
        present: List[int] = []
        absent = sorted(oracle.universe)
        rng.shuffle(absent)
        for _ in range(min(60, updates - done)):
            if absent and (not present or rng.random() < 0.6):
                elem = absent.pop()
                engine.insert(elem)
                present.append(elem)
            else:
                elem = present.pop(rng.randrange(len(present)))
                absent.insert(0, elem)
                engine.delete(elem)
            done += 1
            failure = check_engine_properties(engine, oracle.evaluate,
                                              exhaustive_limit)
            if failure:
                ok = False
                lines.append(f"FAIL instance {instance}: {failure}")
                break
        else:
            continue
        break
    lines.append(f"{'PASS' if ok else 'FAIL'} engine: {done} updates checked")
    return ok, lines


def verify_robust(trials: int = 500, seed: int = 0) -> Tuple[bool, List[str]]:
    oracle = random_coverage(14, 40, seed, weighted=False)
    elems = sorted(oracle.universe)
    k, d, eps = 3, 2, 0.5
    _, opt = brute_force_opt(oracle.evaluate, elems, k)
    gamma = opt / (1 + eps)

    def builder(build_seed: int):
        engine = DynamicEngine(oracle.evaluate, k, gamma, min(eps, 0.45),
                               capacity_base=len(elems), seed=build_seed)
        for a in elems:
            engine.insert(a)
        engine.end_init_batch()
        return robust1_from_dynamic(engine.inspect(), k, d, eps)

    summary = verify_strongly_robust(builder, oracle.evaluate, elems, d, eps,
                                     gamma, k, trials=trials, seed=seed)
    lines = [
        f"{'PASS' if summary.size_ok else 'FAIL'} size bullets "
        f"(C_R measured {summary.c_r_measured:.3f})",
        f"{'PASS' if summary.value_ok else 'FAIL'} value floor",
        f"{'PASS' if summary.saturation_ok else 'FAIL'} saturation clause "
        f"({summary.saturation_checked} short-core builds)",
        f"{'PASS' if summary.robustness_ok else 'FAIL'} robustness "
        + ", ".join(f"{mode}={ratio:.4f}"
                    for mode, ratio in sorted(summary.robustness.items())),
    ]
    return summary.ok, lines


def verify_scheduler(seed: int = 0) -> Tuple[bool, List[str]]:
    lines = []
    ok = True
    for i, variant in enumerate(("warmup", "main", "full", "baseline-dynamic")):
        oracle = random_coverage(16, 40, seed + i)
        gen = gen_instance(16, 40, w=1, corrupt=2, jitter=1, seed=seed + i)
        config = FrameworkConfig(k=3, eps=0.2, w=1, variant=variant,
                                 seed=seed + i, known_eta=gen.eta)
        counting = CountingOracle(oracle)
        max_ops = {}
        steps = 0
        for step in run_framework(counting, gen.stream, gen.pred, config):
            steps += 1
        good = steps == gen.stream.n
        if variant == "baseline-dynamic":
            good &= counting.total("precompute") == 0
        ok &= good
        lines.append(f"{'PASS' if good else 'FAIL'} {variant}: {steps} steps, "
                     f"pre={counting.total('precompute')} "
                     f"stream={counting.total('stream')}")
    return ok, lines


def verify_approx(instances: int = 100, seeds: int = 20, eps: float = 0.1,
                  threshold: float = 0.35, variant: str = "full",
                  seed: int = 0, progress: bool = False) -> Tuple[bool, List[str]]:
    """Small-instance approximation sweep against exact optima.

    For each instance the score is the mean over algorithm seeds of the
    worst per-step ratio f(S_t)/OPT_t; the suite passes when every
    instance's score clears the threshold.
    """
    rng = random.Random(seed)
    lines = []
    ok = True
    worst = math.inf
    for inst in range(instances):
        universe = rng.randint(10, 18)
        # inserts happen at most once, so n is capped by 2|V| within n <= 60
        n = rng.randint(20, min(60, 2 * universe))
        k = rng.randint(2, 4)
        w = rng.choice([0, 2])
        eta_target = rng.choice([0, 2, 5])
        oracle = random_coverage(universe, 3 * universe, seed * 131 + inst)
        gen = gen_instance(universe, n, w,
                           corrupt=min(eta_target, max(0, universe - 2)),
                           jitter=min(1, w), seed=seed * 977 + inst)
        baseline = RatioBaseline(oracle.evaluate, k, mode="brute")
        min_ratios = []
        for s in range(seeds):
            config = FrameworkConfig(k=k, eps=eps, w=w, variant=variant,
                                     seed=s, known_eta=gen.eta)
            result = run_experiment(oracle, gen.stream, gen.pred, config,
                                    baseline=baseline)
            if result.summary["ratio_min"] is not None:
                min_ratios.append(result.summary["ratio_min"])
        score = sum(min_ratios) / len(min_ratios) if min_ratios else 1.0
        worst = min(worst, score)
        if score < threshold:
            ok = False
            lines.append(f"FAIL instance {inst}: mean min-ratio {score:.4f}")
        if progress and (inst + 1) % 10 == 0:
            print(f"  ... {inst + 1}/{instances} instances, "
                  f"worst score {worst:.4f}")
    lines.append(f"{'PASS' if ok else 'FAIL'} approx: worst instance score "
                 f"{worst:.4f} vs threshold {threshold}")
    return ok, lines


def run_suite(name: str, **kwargs) -> Tuple[bool, List[str]]:
    if name == "oracle":
        return verify_oracle(**kwargs)
    if name == "stream":
        return verify_stream(**kwargs)
    if name == "engine":
        return verify_engine(**kwargs)
    if name == "robust":
        return verify_robust(**kwargs)
    if name == "scheduler":
        return verify_scheduler(**kwargs)
    if name == "approx":
        return verify_approx(**kwargs)
    raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
