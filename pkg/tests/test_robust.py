"""Core/reserve extraction, the two-stage interface, and the verifier."""

import json
import math
import random

import pytest

from dynsubmax.baselines import brute_force_opt, lazy_greedy
from dynsubmax.engine import DynamicEngine
from dynsubmax.oracle import ModularOracle, random_coverage
from dynsubmax.robust import (StronglyRobustPair, load_pairs, reserve_budget,
                              robust1_from_dynamic, robust1_standalone,
                              robust2, save_pairs, verify_strongly_robust)


class CountingFn:
    def __init__(self, fn):
        self.fn = fn
        self.calls = 0

    def __call__(self, subset):
        self.calls += 1
        return self.fn(subset)


def built_view(seed=0, n_elem=14, k=3, eps=0.45, capacity_base=None):
    oracle = random_coverage(n_elem, 3 * n_elem, seed)
    _, opt = brute_force_opt(oracle.evaluate, oracle.universe, k)
    gamma = opt / (1 + eps)
    fn = CountingFn(oracle.evaluate)
    engine = DynamicEngine(fn, k=k, gamma=gamma, eps=eps,
                           capacity_base=capacity_base or n_elem, seed=seed)
    for a in sorted(oracle.universe):
        engine.insert(a)
    engine.end_init_batch()
    return oracle, engine, fn


def test_cutoff_levels_partition_by_capacity():
    # capacity base 1024, d=10, eps=0.5, k=5: cutoff 25, so levels with
    # capacities 1024..32 feed the core and capacities <= 25 feed the reserve
    oracle, engine, _ = built_view(seed=1, n_elem=20, k=5, capacity_base=1024)
    view = engine.inspect()
    assert view.capacities[0] == 1024
    pair = robust1_from_dynamic(view, k=5, d=10, eps=0.5)
    cutoff = 10 / 0.5 + 5
    expect_q = set()
    expect_r = set()
    for level, cap in enumerate(view.capacities):
        sel = view.sel_by_level(level)
        if cap > cutoff:
            assert cap >= 32
            expect_q.update(sel)
        else:
            assert cap <= 25
            expect_r.update(sel)
            expect_r.update(view.buffers[level])
    assert pair.Q == expect_q
    assert pair.R == expect_r


def test_d_zero_specialization():
    oracle, engine, _ = built_view(seed=2)
    pair = robust1_from_dynamic(engine.inspect(), k=3, d=0, eps=0.5)
    cutoff = 3.0
    deep = [lv for lv, cap in enumerate(engine.capacities) if cap <= cutoff]
    assert pair.d == 0
    # only trailing levels feed the reserve
    assert all(cap <= cutoff for lv, cap in enumerate(engine.capacities)
               if lv in deep)


def test_extraction_is_query_free():
    _, engine, fn = built_view(seed=3)
    before = fn.calls
    for d in (0, 2, 5):
        robust1_from_dynamic(engine.inspect(), k=3, d=d, eps=0.5)
    assert fn.calls == before


def test_extraction_invariants_many_builds():
    for seed in range(15):
        oracle, engine, _ = built_view(seed=seed)
        view = engine.inspect()
        pair = robust1_from_dynamic(view, k=3, d=2, eps=0.5)
        assert len(pair.Q) <= 3
        f_q = oracle.evaluate(pair.Q)
        assert f_q >= len(pair.Q) * pair.gamma / (2 * 3) - 1e-9
        assert len(pair.R) <= reserve_budget(2, 0.5, 3)
        # partition discipline: every selected element is in Q or in R
        all_selected = set()
        for entries in view.selected.values():
            all_selected.update(e for e, _ in entries)
        assert all_selected <= (pair.Q | pair.R)
        assert pair.Q | pair.R <= view.active


def test_standalone_empty_and_modular():
    assert robust1_standalone(ModularOracle({}).evaluate, [], 3, 2, 0.5) == []
    k = 4
    oracle = ModularOracle({e: 5.0 for e in range(k)})
    pairs = robust1_standalone(oracle.evaluate, range(k), k, d=0, eps=0.45,
                               seed=1)
    # every identical-weight element clears gamma/(2k) for the bracketing
    # guesses, so the whole ground set survives into some pair's core or
    # reserve and stage two recovers the full value with no deletions
    assert pairs and any(pair.Q | pair.R == frozenset(range(k))
                         for pair in pairs)
    best = robust2(oracle.evaluate, pairs, D=(), k=k)
    assert oracle.evaluate(best) == oracle.evaluate(range(k))


def test_standalone_query_budget_measured():
    oracle = random_coverage(30, 90, seed=5)
    fn = CountingFn(oracle.evaluate)
    k, eps = 3, 0.45
    robust1_standalone(fn, oracle.universe, k, d=2, eps=eps, seed=2)
    size = len(oracle.universe)
    budget = 40 * size * (k + math.log(k + 1) * math.log(size + 1) / eps)
    assert fn.calls <= budget


def test_robust2_degenerate_cases():
    oracle = random_coverage(12, 30, seed=6)
    pairs = robust1_standalone(oracle.evaluate, oracle.universe, 3, d=2,
                               eps=0.45, seed=3)
    full = max(pairs, key=lambda p: len(p.Q))
    if len(full.Q) == 3:
        got = robust2(oracle.evaluate, [full], D=(), k=3)
        assert got == full.Q
    everything = set().union(*[p.Q | p.R for p in pairs])
    assert robust2(oracle.evaluate, pairs, D=everything, k=3) == frozenset()


def test_robust2_feasible_and_disjoint_from_deletions():
    rng = random.Random(7)
    oracle = random_coverage(14, 40, seed=7)
    pairs = robust1_standalone(oracle.evaluate, oracle.universe, 3, d=2,
                               eps=0.45, seed=4)
    for _ in range(25):
        deleted = set(rng.sample(sorted(oracle.universe), rng.randint(0, 6)))
        got = robust2(oracle.evaluate, pairs, deleted, k=3)
        assert len(got) <= 3 and not (got & deleted)


def test_robust2_against_restricted_brute_force():
    # two-stage answer vs the exact optimum of the surviving summary
    rng = random.Random(8)
    eps = 0.1
    threshold = 0.5 - eps - 0.05
    for case in range(20):
        oracle = random_coverage(12, 36, seed=100 + case)
        elems = sorted(oracle.universe)
        pairs = robust1_standalone(oracle.evaluate, elems, 3, d=2, eps=eps,
                                   seed=case)
        for _ in range(5):
            deleted = set(rng.sample(elems, 2))
            got = robust2(oracle.evaluate, pairs, deleted, k=3)
            survivors = set(elems) - deleted
            _, opt = brute_force_opt(oracle.evaluate, survivors, 3)
            if opt > 0:
                assert oracle.evaluate(got) >= threshold * opt


def test_verifier_d_zero_trivially_robust():
    oracle = random_coverage(10, 30, seed=9)
    elems = sorted(oracle.universe)
    _, opt = brute_force_opt(oracle.evaluate, elems, 3)
    gamma = opt / 1.5

    def builder(seed):
        engine = DynamicEngine(oracle.evaluate, 3, gamma, 0.45,
                               capacity_base=len(elems), seed=seed)
        for a in elems:
            engine.insert(a)
        engine.end_init_batch()
        return robust1_from_dynamic(engine.inspect(), 3, 0, 0.5)

    summary = verify_strongly_robust(builder, oracle.evaluate, elems, d=0,
                                     eps=0.5, gamma=gamma, k=3, trials=40)
    assert summary.ok, summary.failures
    assert summary.robustness["adversarial"] == pytest.approx(1.0)


def test_verifier_modular_closed_form():
    weights = {e: float(1 + (e % 5)) for e in range(12)}
    oracle = ModularOracle(weights)
    elems = sorted(weights)
    k, d, eps = 3, 2, 0.5
    gamma = sum(sorted(weights.values())[-k:]) / (1 + eps)

    def builder(seed):
        engine = DynamicEngine(oracle.evaluate, k, gamma, 0.45,
                               capacity_base=len(elems), seed=seed)
        for a in elems:
            engine.insert(a)
        engine.end_init_batch()
        return robust1_from_dynamic(engine.inspect(), k, d, eps)

    rng = random.Random(11)
    for trial in range(30):
        pair = builder(trial)
        deleted = set(rng.sample(elems, d))
        # additive case: survivors' value is the exact difference
        expect = sum(weights[e] for e in pair.Q - deleted)
        assert oracle.evaluate(pair.Q - deleted) == pytest.approx(expect)


def test_verifier_full_run_small():
    oracle = random_coverage(14, 40, seed=12)
    elems = sorted(oracle.universe)
    k, d, eps = 3, 2, 0.5
    _, opt = brute_force_opt(oracle.evaluate, elems, k)
    gamma = opt / (1 + eps)

    def builder(seed):
        engine = DynamicEngine(oracle.evaluate, k, gamma, 0.45,
                               capacity_base=len(elems), seed=seed)
        for a in elems:
            engine.insert(a)
        engine.end_init_batch()
        return robust1_from_dynamic(engine.inspect(), k, d, eps)

    summary = verify_strongly_robust(builder, oracle.evaluate, elems, d=d,
                                     eps=eps, gamma=gamma, k=k, trials=60)
    assert summary.ok, summary.failures


def test_verifier_exercises_short_core_saturation():
    # two elements clear the bottom rung, the rest sit far below it: the
    # core stays short and the saturation clause is checked exhaustively
    weights = {0: 10.0, 1: 10.0}
    weights.update({e: 0.5 for e in range(2, 14)})
    oracle = ModularOracle(weights)
    elems = sorted(weights)
    k, d, eps, gamma = 3, 2, 0.5, 16.0

    def builder(seed):
        engine = DynamicEngine(oracle.evaluate, k, gamma, 0.45,
                               capacity_base=len(elems), seed=seed)
        for a in elems:
            engine.insert(a)
        engine.end_init_batch()
        return robust1_from_dynamic(engine.inspect(), k, d, eps)

    pair = builder(0)
    assert len(pair.Q) < k
    summary = verify_strongly_robust(builder, oracle.evaluate, elems, d=d,
                                     eps=eps, gamma=gamma, k=k, trials=40)
    assert summary.saturation_checked == 40
    assert summary.ok, summary.failures


def test_grid_debug_dump_is_json():
    _, engine, _ = built_view(seed=21)
    dump = engine.inspect().to_debug_json()
    json.dumps(dump)
    assert dump["solution"] and dump["levels"]
    assert len(dump["levels"]) == len(engine.capacities)


def test_pair_json_round_trip(tmp_path):
    pair = StronglyRobustPair(Q=frozenset({1, 2}), R=frozenset({3, 4, 5}),
                              d=2, eps=0.5, gamma=3.5, k=3)
    path = tmp_path / "pairs.json"
    save_pairs([pair], str(path))
    loaded = load_pairs(str(path))[0]
    assert (loaded.Q, loaded.R, loaded.d, loaded.eps, loaded.gamma,
            loaded.k) == (pair.Q, pair.R, 2, 0.5, 3.5, 3)
    raw = json.loads(path.read_text())
    assert set(raw[0]) == {"Q", "R", "d", "eps", "gamma", "k"}
