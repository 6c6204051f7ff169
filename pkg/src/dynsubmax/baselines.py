"""Reference maximizers: greedy (lazy and eager), exact enumeration, and a
prediction-free dynamic maximizer built from guess-banded engines.

`lazy_greedy` is the standard stale-marginal priority queue; `eager_greedy`
recomputes every marginal each round and exists as an independent oracle for
testing the lazy variant. `brute_force_opt` enumerates all subsets up to
size k behind a work guard and is the ground truth for approximation-ratio
measurements.

`GridDynamic` answers "maintain a good solution with no predictions": it
keeps one `DynamicEngine` per value band gamma_j = (1+eps)^j, routes each
element to the bands where its singleton value is relevant
(eps*gamma/k <= f(a) <= 2*gamma), and returns the best per-band solution.
The band grid is anchored at absolute powers of (1+eps), so it never moves
as elements come and go and needs no precomputation; the singleton lookup
on first contact with an element is the only extra query an update costs.
"""

from __future__ import annotations

import heapq
import math
from itertools import combinations
from typing import Callable, Dict, Iterable, List, Tuple

from .engine import DynamicEngine


class GuardError(ValueError):
    """Enumeration size guard tripped."""


def lazy_greedy(value_fn: Callable[[frozenset], float], candidates: Iterable[int],
                k: int, base: Iterable[int] = ()) -> Tuple[frozenset, float]:
    """Greedy augmentation of `base` from `candidates`, lazily re-evaluated.

    Ties break toward the smaller element id, matching `eager_greedy`.
    Returns (selected including base, value of selection).
    """
    selected = set(base)
    current = value_fn(selected) if selected else 0.0
    pool = [c for c in sorted(set(candidates)) if c not in selected]
    heap: List[Tuple[float, int]] = [(-math.inf, c) for c in pool]
    heapq.heapify(heap)
    while heap and len(selected) < k:
        _, elem = heapq.heappop(heap)
        gain = value_fn(selected | {elem}) - current
        if gain <= 0:
            # monotone f: every remaining gain is also <= its stale key; once
            # the best fresh gain is 0 nothing can improve the value
            if not heap or -heap[0][0] <= 0:
                break
            continue
        if not heap or (gain, -elem) >= (-heap[0][0], -heap[0][1]):
            selected.add(elem)
            current += gain
        else:
            heapq.heappush(heap, (-gain, elem))
    return frozenset(selected), current


def eager_greedy(value_fn: Callable[[frozenset], float], candidates: Iterable[int],
                 k: int) -> Tuple[frozenset, float]:
    selected: set = set()
    current = 0.0
    pool = sorted(set(candidates))
    for _ in range(k):
        best_gain, best_elem = 0.0, None
        for elem in pool:  # ascending ids: first max wins, matching lazy ties
            if elem in selected:
                continue
            gain = value_fn(selected | {elem}) - current
            if gain > best_gain:
                best_gain, best_elem = gain, elem
        if best_elem is None or best_gain <= 0:
            break
        selected.add(best_elem)
        current += best_gain
    return frozenset(selected), current


def subset_count(n: int, k: int) -> int:
    return sum(math.comb(n, i) for i in range(min(n, k) + 1))


def brute_force_opt(value_fn: Callable[[frozenset], float], candidates: Iterable[int],
                    k: int, guard: int = 1_000_000) -> Tuple[frozenset, float]:
    """Exact max over subsets of size <= k by enumeration."""
    pool = sorted(set(candidates))
    total = subset_count(len(pool), k)
    if total > guard:
        raise GuardError(
            f"{total} subsets of {len(pool)} elements exceeds guard {guard}")
    best, best_val = frozenset(), 0.0
    for size in range(1, min(k, len(pool)) + 1):
        for combo in combinations(pool, size):
            val = value_fn(frozenset(combo))
            if val > best_val:
                best, best_val = frozenset(combo), val
    return best, best_val


class GridDynamic:
    """Prediction-free dynamic maximizer over an absolute guess ladder.

    Band j holds the elements a with eps*g_j/k <= f(a) <= 2*g_j for
    g_j = (1+eps)^j; each band runs its own engine and `solution()` returns
    the best band solution (one query per non-empty band to compare them).
    """

    def __init__(self, value_fn: Callable[[frozenset], float], k: int, eps: float,
                 seed: int = 0, engine_eps: float | None = None):
        self._value = value_fn
        self.k = k
        self.eps = eps
        self._engine_eps = engine_eps if engine_eps is not None else min(eps, 0.45)
        self._seed = seed
        self._engines: Dict[int, DynamicEngine] = {}
        self._bands: Dict[int, Tuple[int, ...]] = {}
        self._singleton: Dict[int, float] = {}
        self._band_cache: Dict[int, Tuple[frozenset, float]] = {}
        self.active: set = set()
        self.insert_calls = 0
        self.delete_calls = 0

    def _band_range(self, value: float) -> Tuple[int, ...]:
        if value <= 0:
            return ()
        lo = math.ceil(math.log(value / 2) / math.log1p(self.eps))
        hi = math.floor(math.log(self.k * value / self.eps) / math.log1p(self.eps))
        return tuple(range(lo, hi + 1))

    def _engine(self, band: int) -> DynamicEngine:
        eng = self._engines.get(band)
        if eng is None:
            eng = DynamicEngine(self._value, self.k, (1 + self.eps) ** band,
                                self._engine_eps, capacity_base=2 * self.k,
                                seed=self._seed * 1_000_003 + band)
            eng.end_init_batch()
            self._engines[band] = eng
        return eng

    def insert(self, elem: int) -> None:
        self.insert_calls += 1
        self.active.add(elem)
        if elem not in self._singleton:
            self._singleton[elem] = self._value(frozenset((elem,)))
            self._bands[elem] = self._band_range(self._singleton[elem])
        for band in self._bands[elem]:
            self._engine(band).insert(elem)
            self._band_cache.pop(band, None)

    def delete(self, elem: int) -> None:
        self.delete_calls += 1
        self.active.remove(elem)
        for band in self._bands.get(elem, ()):
            self._engines[band].delete(elem)
            self._band_cache.pop(band, None)

    def solution(self) -> frozenset:
        """Best per-band solution; untouched bands reuse their cached value."""
        best, best_val = frozenset(), -1.0
        for band in sorted(self._engines):
            cached = self._band_cache.get(band)
            if cached is None:
                sol = self._engines[band].solution()
                cached = (sol, self._value(sol) if sol else 0.0)
                self._band_cache[band] = cached
            sol, val = cached
            if sol and val > best_val:
                best, best_val = sol, val
        return best
