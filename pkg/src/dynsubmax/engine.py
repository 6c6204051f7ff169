"""Fully dynamic threshold-ladder maximizer with bucketed random peeling.

The engine maintains a feasible solution (at most k elements) for a monotone
submodular function under insertions and deletions, parameterized by a value
guess gamma. Internally it keeps:

- a threshold ladder tau_0 = gamma/2 >= ... >= tau_R = gamma/(2k), spaced
  geometrically by (1 + eps);
- levels 0..T with geometrically halving capacities c_l = capacity_base/2^l,
  each holding a buffer of resting elements;
- per (threshold, level) a bucket snapshot (the eligible pool observed when
  that cell was last built) and the ordered selections made from it, each
  selection recording the eligible-pool size it was drawn from.

A rebuild from level l merges everything resting or selected at levels l
and deeper into one candidate pool and sweeps levels shallow-to-deep and,
within a level, thresholds high-to-low. The eligible pool for a threshold
is refiltered after every pick (a marginal per surviving element per
round, served by a per-epoch cache so one oracle call covers all
thresholds at the same solution state), and picks are uniformly random
among eligibles. Selection at a level pauses for a threshold once its
eligible pool fits the next level's capacity; whatever is still eligible
at the bottom rung then descends a level and the sweep continues, so every
selection recorded at a level was drawn from a pool larger than half that
level's capacity. That is the property deletion-robust extraction trusts:
a uniformly random pick from a large pool is unlikely to be any fixed
small deletion set's victim. At the deepest level selection runs until the
pool empties or the solution fills.

Elements that fall below the bottom threshold rest in the buffer of the
level where they fell out; since the bottom rung is exactly gamma/(2k),
every resting element (while the solution is short) has been certified to
add less than gamma/(2k) on top of a subset of the current solution, which
is what the short-solution saturation property needs.

Updates repair locally: an insertion rests at the deepest level or, if it
clears the bottom rung while the solution is short, triggers a rebuild at
the deepest level whose capacity holds the whole suffix of content below
it (a binary-counter cascade, so rebuild work is geometrically amortized,
and content at level l never exceeds its capacity capacity_base/2^l).
Deleting a selected element rebuilds from its level; deleting anything
else is a pure scrub with no oracle queries. The capacity base doubles
(with a full rebuild) when the active set outgrows it.

All randomness flows from one seeded PRNG, so runs are reproducible; all
oracle traffic flows through the injected value function.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Tuple

INF = float("inf")


class EngineError(ValueError):
    """Invalid parameters or an update violating engine preconditions."""


@dataclass(frozen=True)
class GridView:
    """Read-only snapshot of the engine internals; built without queries."""

    k: int
    gamma: float
    eps: float
    capacity_base: float
    capacities: Tuple[float, ...]
    thresholds: Tuple[float, ...]
    selected: Dict[Tuple[int, int], Tuple[Tuple[int, int], ...]]  # (thr, level)
    buckets: Dict[Tuple[int, int], FrozenSet[int]]
    buffers: Tuple[FrozenSet[int], ...]
    sol: FrozenSet[int]
    active: FrozenSet[int]
    snapshot_id: int

    def sel_by_level(self, level: int) -> FrozenSet[int]:
        out = set()
        for (_, lv), entries in self.selected.items():
            if lv == level:
                out.update(e for e, _ in entries)
        return frozenset(out)

    def to_debug_json(self) -> dict:
        """Levels -> thresholds -> bucket/selected ids; diagnostic only, no
        stable wire format guaranteed."""
        levels = []
        for lv, cap in enumerate(self.capacities):
            cells = {}
            for i in range(len(self.thresholds)):
                sel = list(self.selected.get((i, lv), ()))
                bucket = sorted(self.buckets.get((i, lv), ()))
                if sel or bucket:
                    cells[str(i)] = {"selected": [[e, p] for e, p in sel],
                                     "bucket": bucket}
            levels.append({"level": lv, "capacity": cap,
                           "buffer": sorted(self.buffers[lv]),
                           "thresholds": cells})
        return {"capacity_base": self.capacity_base, "k": self.k,
                "gamma": self.gamma, "eps": self.eps,
                "thresholds": list(self.thresholds),
                "solution": sorted(self.sol), "levels": levels,
                "snapshot": self.snapshot_id}

    def rest_by_level(self, level: int) -> FrozenSet[int]:
        """Bucket/buffer content unioned over thresholds at one level."""
        out = set(self.buffers[level])
        for (_, lv), bucket in self.buckets.items():
            if lv == level:
                out.update(bucket)
        return frozenset(out)


def threshold_ladder(gamma: float, eps: float, k: int) -> Tuple[float, ...]:
    """Geometric ladder from gamma/2 down to exactly gamma/(2k)."""
    floor = gamma / (2 * k)
    count = math.ceil(math.log(k) / math.log1p(eps)) if k > 1 else 0
    ladder = [max(gamma / 2 * (1 + eps) ** (-i), floor) for i in range(count + 1)]
    return tuple(ladder)


class DynamicEngine:
    def __init__(self, value_fn: Callable[[frozenset], float], k: int,
                 gamma: float, eps: float, capacity_base: int | None = None,
                 seed: int = 0):
        if not isinstance(k, int) or k < 1:
            raise EngineError(f"cardinality constraint k={k} must be >= 1")
        if not gamma > 0:
            raise EngineError(f"threshold parameter gamma={gamma} must be positive")
        if not 0 < eps < 0.5:
            raise EngineError(f"accuracy eps={eps} must lie in (0, 1/2)")
        self._value = value_fn
        self.k = k
        self.gamma = gamma
        self.eps = eps
        self.thresholds = threshold_ladder(gamma, eps, k)
        self._tau_bottom = self.thresholds[-1]
        self._rng = random.Random(seed)
        self._set_capacity(max(int(capacity_base or 0), 2 * k, 1))

        self.active: set = set()
        self._pending: set = set()
        self._sol: set = set()
        self._home: Dict[int, int] = {}  # resting or selected -> level
        self.ops_total = 0
        self.ops_star = 0
        self._init_open = True

        self._sol_value: float | None = 0.0
        self._marg: Dict[int, float] = {}   # fresh marginals at current solution
        self._ubound: Dict[int, float] = {}  # upper bounds, valid while sol grows
        self._dirty: set = set(range(self.n_levels))
        self._snapshot = 0

    # -- level arrays ------------------------------------------------------

    def _set_capacity(self, base: int) -> None:
        self.capacity_base = base
        self.n_levels = math.ceil(math.log2(base)) + 1 if base > 1 else 1
        self.capacities = tuple(base / 2 ** l for l in range(self.n_levels))
        R = len(self.thresholds)
        self._buffers: List[set] = [set() for _ in range(self.n_levels)]
        self._sel: List[List[List[Tuple[int, int]]]] = [
            [[] for _ in range(R)] for _ in range(self.n_levels)]
        self._entry: List[List[FrozenSet[int]]] = [
            [frozenset() for _ in range(R)] for _ in range(self.n_levels)]

    # -- marginal cache ----------------------------------------------------

    def _bump_epoch(self) -> None:
        self._sol_value = None
        self._marg.clear()

    def _sol_value_now(self) -> float:
        if self._sol_value is None:
            self._sol_value = self._value(self._sol)
        return self._sol_value

    def _fresh(self, elem: int) -> float:
        m = self._marg.get(elem)
        if m is None:
            m = self._value(self._sol | {elem}) - self._sol_value_now()
            self._marg[elem] = m
            self._ubound[elem] = m
        return m

    # -- public update surface ----------------------------------------------

    def insert(self, elem: int) -> None:
        if elem in self.active:
            raise EngineError(f"element {elem} already present")
        self.active.add(elem)
        self.ops_total += 1
        if self._init_open:
            self._pending.add(elem)
            return
        self.ops_star += 1
        eligible = False
        if len(self._sol) < self.k:
            eligible = self._fresh(elem) >= self._tau_bottom
        deepest = self.n_levels - 1
        self._buffers[deepest].add(elem)
        self._home[elem] = deepest
        self._dirty.add(deepest)
        if eligible or len(self._buffers[deepest]) > self.capacities[deepest]:
            self._construct(self._cascade_start(deepest))

    def delete(self, elem: int) -> None:
        if elem not in self.active:
            raise EngineError(f"element {elem} not present")
        self.active.remove(elem)
        self.ops_total += 1
        if self._init_open:
            self._pending.discard(elem)
            return
        self.ops_star += 1
        level = self._home.pop(elem, None)
        if elem in self._sol:
            self._sol.remove(elem)
            for per_thr in self._sel[level]:
                for pos, (e, _) in enumerate(per_thr):
                    if e == elem:
                        per_thr.pop(pos)
                        break
            self._dirty.add(level)
            self._ubound.clear()  # marginals may rise once a selection leaves
            self._bump_epoch()
            self._construct(self._cascade_start(level))
        elif level is not None:
            self._buffers[level].discard(elem)
            self._dirty.add(level)
        # bucket snapshots are scrubbed lazily: views intersect with `active`

    def end_init_batch(self) -> None:
        if not self._init_open:
            return
        self._init_open = False
        if not self._pending:
            return
        deepest = self.n_levels - 1
        for elem in self._pending:
            self._buffers[deepest].add(elem)
            self._home[elem] = deepest
        self._pending.clear()
        self._dirty.add(deepest)
        # batch initialization is a full build at the top level
        self._construct(self._cascade_start(0))

    def solution(self) -> frozenset:
        return frozenset(self._sol)

    def inspect(self) -> GridView:
        self._snapshot += 1
        active = frozenset(self.active)
        selected = {}
        buckets = {}
        for lv in range(self.n_levels):
            for i in range(len(self.thresholds)):
                if self._sel[lv][i]:
                    selected[(i, lv)] = tuple(self._sel[lv][i])
                if self._entry[lv][i]:
                    buckets[(i, lv)] = self._entry[lv][i] & active
        return GridView(
            k=self.k, gamma=self.gamma, eps=self.eps,
            capacity_base=self.capacity_base, capacities=self.capacities,
            thresholds=self.thresholds, selected=selected, buckets=buckets,
            buffers=tuple(frozenset(b) for b in self._buffers),
            sol=frozenset(self._sol), active=active, snapshot_id=self._snapshot)

    # -- checkpoint support (used by the precomputation driver) -------------

    def level_payload(self, level: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        """(selected elements, resting elements) homed at one level."""
        sel = sorted(e for per_thr in self._sel[level] for e, _ in per_thr)
        return tuple(sel), tuple(sorted(self._buffers[level]))

    def take_dirty(self) -> set:
        dirty, self._dirty = self._dirty, set()
        return dirty

    # -- reconstruction ------------------------------------------------------

    def _suffix_count(self, level: int) -> int:
        total = 0
        for lv in range(level, self.n_levels):
            total += len(self._buffers[lv])
            total += sum(len(p) for p in self._sel[lv])
        return total

    def _cascade_start(self, damage_level: int) -> int:
        suffix = 0
        for lv in range(self.n_levels - 1, -1, -1):
            suffix += len(self._buffers[lv]) + sum(len(p) for p in self._sel[lv])
            if lv <= damage_level and suffix <= self.capacities[lv]:
                return lv
        # content outgrew the base: double (full rebuild)
        total = len(self.active)
        base = self.capacity_base
        while total > base:
            base *= 2
        pool = set(self._home)
        sol_torn = bool(self._sol)
        self._sol.clear()
        self._set_capacity(base)
        deepest = self.n_levels - 1
        for elem in pool:
            self._buffers[deepest].add(elem)
            self._home[elem] = deepest
        if sol_torn:
            self._ubound.clear()
        self._bump_epoch()
        self._dirty = set(range(self.n_levels))
        return 0

    def _construct(self, start: int) -> None:
        pool: List[int] = []
        sol_torn = False
        for lv in range(start, self.n_levels):
            pool.extend(self._buffers[lv])
            self._buffers[lv].clear()
            for i, per_thr in enumerate(self._sel[lv]):
                for e, _ in per_thr:
                    pool.append(e)
                    self._sol.remove(e)
                    sol_torn = True
                self._sel[lv][i] = []
                self._entry[lv][i] = frozenset()
            self._dirty.add(lv)
        for e in pool:
            self._home.pop(e, None)
        if sol_torn:
            self._ubound.clear()
        self._bump_epoch()
        if not pool:
            return

        rng = self._rng
        ubound = self._ubound
        level = start
        current: List[int] = sorted(pool)
        while current:
            heap = [(-ubound.get(e, INF), e) for e in current]
            heapq.heapify(heap)
            eligible: List[int] = []
            next_cap = (self.capacities[level + 1]
                        if level + 1 < self.n_levels else 0.0)
            full = False
            for i, tau in enumerate(self.thresholds):
                while heap and -heap[0][0] >= tau:
                    _, e = heapq.heappop(heap)
                    m = self._fresh(e)
                    if m >= tau:
                        eligible.append(e)
                    else:
                        heapq.heappush(heap, (-m, e))
                self._entry[level][i] = frozenset(eligible)
                while (eligible and len(self._sol) < self.k
                       and len(eligible) > next_cap):
                    pick = rng.randrange(len(eligible))
                    chosen = eligible.pop(pick)
                    self._sel[level][i].append((chosen, len(eligible) + 1))
                    self._sol.add(chosen)
                    self._home[chosen] = level
                    self._bump_epoch()
                    survivors = []
                    for e in eligible:
                        m = self._fresh(e)
                        if m >= tau:
                            survivors.append(e)
                        else:
                            heapq.heappush(heap, (-m, e))
                    eligible = survivors
                if len(self._sol) >= self.k:
                    full = True
                    break
            if full or level == self.n_levels - 1:
                for _, e in heap:
                    self._buffers[level].add(e)
                    self._home[e] = level
                for e in eligible:
                    self._buffers[level].add(e)
                    self._home[e] = level
                return
            for _, e in heap:
                self._buffers[level].add(e)
                self._home[e] = level
            current = eligible
            level += 1
