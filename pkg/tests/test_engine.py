"""Dynamic engine: counters, threshold ladder, repairs, selection law."""

import math
import random

import pytest
from scipy.stats import chisquare

from dynsubmax.engine import DynamicEngine, EngineError, threshold_ladder
from dynsubmax.oracle import ModularOracle, random_coverage
from dynsubmax.baselines import brute_force_opt
from dynsubmax.verify import check_engine_properties


class CountingFn:
    """Wraps a raw evaluate so tests can count engine queries."""

    def __init__(self, fn):
        self.fn = fn
        self.calls = 0

    def __call__(self, subset):
        self.calls += 1
        return self.fn(subset)


def coverage_engine(seed=0, k=3, n_elem=12, eps=0.2):
    oracle = random_coverage(n_elem, 3 * n_elem, seed)
    _, opt = brute_force_opt(oracle.evaluate, oracle.universe, k)
    gamma = opt / (1 + eps)
    fn = CountingFn(oracle.evaluate)
    engine = DynamicEngine(fn, k=k, gamma=gamma, eps=eps,
                           capacity_base=n_elem, seed=seed)
    return oracle, engine, fn


def test_parameter_validation():
    fn = ModularOracle({1: 1.0}).evaluate
    with pytest.raises(EngineError):
        DynamicEngine(fn, k=0, gamma=1.0, eps=0.2)
    with pytest.raises(EngineError):
        DynamicEngine(fn, k=1, gamma=0.0, eps=0.2)
    with pytest.raises(EngineError):
        DynamicEngine(fn, k=1, gamma=1.0, eps=0.5)


def test_threshold_ladder_shape():
    for k, eps in [(1, 0.2), (5, 0.5 - 1e-9), (16, 0.1), (34, 0.45)]:
        # keep eps strictly inside (0, 1/2) for the ladder contract
        eps = min(eps, 0.45)
        ladder = threshold_ladder(gamma=1.0, eps=eps, k=k)
        floor = 1.0 / (2 * k)
        assert ladder[0] == 0.5
        assert ladder[-1] >= floor > ladder[-1] / (1 + eps)
        assert all(a > b for a, b in zip(ladder, ladder[1:]))


def test_init_batch_counters():
    _, engine, _ = coverage_engine()
    assert engine.solution() == frozenset()
    for a in range(5):
        engine.insert(a)
    assert engine.ops_total == 5 and engine.ops_star == 0
    engine.end_init_batch()
    engine.end_init_batch()  # idempotent
    assert engine.ops_star == 0
    engine.insert(10)
    assert engine.ops_star == 1 and engine.ops_total == 6


def test_single_valuable_insert_enters_solution():
    oracle = random_coverage(12, 36, seed=4)
    best = max(sorted(oracle.universe), key=lambda a: oracle.evaluate([a]))
    best_val = oracle.evaluate([best])
    # gamma chosen so the element clears the top rung gamma/2
    engine = DynamicEngine(oracle.evaluate, k=3, gamma=1.5 * best_val,
                           eps=0.2, capacity_base=12, seed=4)
    engine.end_init_batch()
    engine.insert(best)
    assert best in engine.solution()


def test_insert_then_delete_empties():
    _, engine, _ = coverage_engine(seed=5)
    engine.end_init_batch()
    engine.insert(3)
    engine.delete(3)
    assert engine.solution() == frozenset()
    assert engine.active == set()


def test_modular_fills_к_of_identical_elements():
    weight = 2.0
    k = 4
    oracle = ModularOracle({e: weight for e in range(k + 5)})
    engine = DynamicEngine(oracle.evaluate, k=k, gamma=k * weight, eps=0.2,
                           capacity_base=k + 5, seed=1)
    engine.end_init_batch()
    for e in range(k + 5):
        engine.insert(e)
    assert len(engine.solution()) == k


def test_state_errors_leave_engine_unchanged():
    _, engine, _ = coverage_engine(seed=6)
    engine.end_init_batch()
    engine.insert(1)
    before = (engine.solution(), frozenset(engine.active), engine.ops_total)
    with pytest.raises(EngineError):
        engine.insert(1)
    with pytest.raises(EngineError):
        engine.delete(99)
    after = (engine.solution(), frozenset(engine.active), engine.ops_total)
    assert before == after


def test_solution_and_inspect_are_query_free():
    _, engine, fn = coverage_engine(seed=7)
    engine.end_init_batch()
    for a in range(8):
        engine.insert(a)
    baseline = fn.calls
    for _ in range(5):
        engine.solution()
        view = engine.inspect()
    assert fn.calls == baseline
    assert view.sol == engine.solution()


def test_inspect_view_consistency():
    oracle, engine, _ = coverage_engine(seed=8)
    engine.end_init_batch()
    rng = random.Random(8)
    present = []
    absent = sorted(oracle.universe)
    for _ in range(40):
        if absent and (not present or rng.random() < 0.6):
            e = absent.pop()
            engine.insert(e)
            present.append(e)
        else:
            e = present.pop(rng.randrange(len(present)))
            absent.insert(0, e)
            engine.delete(e)
        view = engine.inspect()
        union_sel = set()
        for entries in view.selected.values():
            union_sel.update(x for x, _ in entries)
        assert union_sel == set(view.sol) == set(engine.solution())
        assert sum(len(b) for b in view.buffers) <= sum(view.capacities)
        for level, cap in enumerate(view.capacities):
            assert len(view.buffers[level]) <= cap


def test_random_updates_keep_threshold_properties():
    rng = random.Random(9)
    oracle, engine, _ = coverage_engine(seed=9, n_elem=12)
    engine.end_init_batch()
    present = []
    absent = sorted(oracle.universe)
    rng.shuffle(absent)
    for step in range(50):
        if absent and (not present or rng.random() < 0.6):
            e = absent.pop()
            engine.insert(e)
            present.append(e)
        else:
            e = present.pop(rng.randrange(len(present)))
            absent.insert(0, e)
            engine.delete(e)
        failure = check_engine_properties(engine, oracle.evaluate)
        assert failure is None, f"step {step}: {failure}"


def test_value_floor_exact_over_many_states():
    # value property holds exactly (coverage values are integers)
    for seed in range(6):
        oracle, engine, _ = coverage_engine(seed=20 + seed)
        engine.end_init_batch()
        rng = random.Random(seed)
        pool = sorted(oracle.universe)
        rng.shuffle(pool)
        for e in pool:
            engine.insert(e)
            sol = engine.solution()
            floor = len(sol) * engine.gamma / (2 * engine.k)
            assert oracle.evaluate(sol) >= floor - 1e-9


def test_same_seed_same_trajectory():
    runs = []
    for _ in range(2):
        oracle, engine, _ = coverage_engine(seed=11)
        engine.end_init_batch()
        trace = []
        for e in sorted(oracle.universe):
            engine.insert(e)
            trace.append(tuple(sorted(engine.solution())))
        runs.append(trace)
    assert runs[0] == runs[1]


def test_uniform_selection_chi_square():
    # symmetric instance: identical modular weights, k = 1; the single
    # selection must be uniform over all eligible elements
    m = 12
    weight = 3.0
    oracle = ModularOracle({e: weight for e in range(m)})
    counts = [0] * m
    for seed in range(1000):
        engine = DynamicEngine(oracle.evaluate, k=1, gamma=weight, eps=0.2,
                               capacity_base=m, seed=seed)
        for e in range(m):
            engine.insert(e)
        engine.end_init_batch()
        sol = engine.solution()
        assert len(sol) == 1
        counts[next(iter(sol))] += 1
    _, p_value = chisquare(counts)
    assert p_value > 0.01, counts


def test_selection_entries_record_pool_sizes():
    m = 10
    oracle = ModularOracle({e: 1.0 for e in range(m)})
    engine = DynamicEngine(oracle.evaluate, k=2, gamma=2.0, eps=0.2,
                           capacity_base=m, seed=3)
    for e in range(m):
        engine.insert(e)
    engine.end_init_batch()
    view = engine.inspect()
    pools = [size for entries in view.selected.values()
             for _, size in entries]
    assert pools and all(1 <= p <= m for p in pools)


def test_capacity_doubling_keeps_invariants():
    oracle = random_coverage(64, 160, seed=13)
    fn = CountingFn(oracle.evaluate)
    engine = DynamicEngine(fn, k=4, gamma=8.0, eps=0.2,
                           capacity_base=8, seed=13)
    engine.end_init_batch()
    for e in sorted(oracle.universe):
        engine.insert(e)
    assert engine.capacity_base >= 64
    assert engine.active == set(oracle.universe)
    failure = check_engine_properties(engine, oracle.evaluate,
                                      exhaustive_limit=0)
    assert failure is None, failure


def test_deletion_of_unselected_is_query_free():
    oracle, engine, fn = coverage_engine(seed=14)
    engine.end_init_batch()
    for e in sorted(oracle.universe):
        engine.insert(e)
    outside = sorted(set(engine.active) - engine.solution())
    baseline = fn.calls
    engine.delete(outside[0])
    assert fn.calls == baseline
