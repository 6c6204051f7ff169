"""Value oracles for monotone submodular set functions, with query metering.

Ground-set elements are plain ints. An oracle family is shipped for each of
the standard test settings:

- coverage: f(S) = total weight of the items covered by the elements of S.
  Items are kept as bit positions, so an unweighted evaluation is a single
  OR + popcount over python ints.
- modular: f(S) = sum of per-element weights (the additive special case).

Every shipped oracle is normalized (f(empty) == 0 structurally; a family
whose raw empty-set value is nonzero must subtract it once at construction),
monotone, and submodular; the sampler `check_monotone_submodular`
spot-checks the last two on random triples.

`CountingOracle` wraps a value oracle and charges every `evaluate` call to a
(phase, tag) counter, where phase is "precompute" or "stream". A `marginal`
is two evaluations and therefore two queries; all algorithm variants and
baselines in this package are metered through the same rules, so query
comparisons between them are like-for-like.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Mapping, Tuple

PHASE_PRECOMPUTE = "precompute"
PHASE_STREAM = "stream"
_PHASES = (PHASE_PRECOMPUTE, PHASE_STREAM)


class OracleError(ValueError):
    """Invalid oracle construction or evaluation outside the universe."""


class ValueOracle:
    """Monotone submodular set function over an integer ground set."""

    def __init__(self, universe: Iterable[int]):
        self.universe = frozenset(universe)

    def evaluate(self, subset: Iterable[int]) -> float:
        raise NotImplementedError

    def singleton(self, elem: int) -> float:
        return self.evaluate((elem,))


class CoverageOracle(ValueOracle):
    """Weighted coverage function over a finite item ground set.

    `covered` maps each element to the set of item ids it covers. Item
    weights default to 1.0. Internally items are packed into bit positions;
    the unweighted case evaluates with one popcount.
    """

    def __init__(self, covered: Mapping[int, Iterable[int]],
                 item_weights: Mapping[int, float] | None = None):
        super().__init__(covered.keys())
        items = sorted({it for its in covered.values() for it in its})
        self._item_pos = {it: i for i, it in enumerate(items)}
        self._items = items
        if item_weights is not None:
            for it, wt in item_weights.items():
                if wt < 0:
                    raise OracleError(f"negative item weight {wt} for item {it}")
        self._weighted = item_weights is not None and any(
            item_weights.get(it, 1.0) != 1.0 for it in items)
        self._weights = [float(item_weights.get(it, 1.0)) if item_weights else 1.0
                         for it in items]
        self._masks: Dict[int, int] = {}
        for elem, its in covered.items():
            m = 0
            for it in its:
                m |= 1 << self._item_pos[it]
            self._masks[int(elem)] = m

    def evaluate(self, subset: Iterable[int]) -> float:
        m = 0
        masks = self._masks
        try:
            for e in subset:
                m |= masks[e]
        except KeyError as exc:
            raise OracleError(f"element {exc.args[0]} outside universe") from exc
        if not self._weighted:
            return float(m.bit_count())
        total = 0.0
        weights = self._weights
        while m:
            low = m & -m
            total += weights[low.bit_length() - 1]
            m ^= low
        return total

    def covered_items(self, elem: int) -> frozenset:
        m = self._masks[elem]
        out = []
        while m:
            low = m & -m
            out.append(self._items[low.bit_length() - 1])
            m ^= low
        return frozenset(out)

    def to_definition(self) -> dict:
        defn = {"elements": [{"id": e, "items": sorted(self.covered_items(e))}
                             for e in sorted(self.universe)]}
        if self._weighted:
            defn["item_weights"] = {str(it): self._weights[self._item_pos[it]]
                                    for it in self._items}
        return defn


class ModularOracle(ValueOracle):
    """Additive function f(S) = sum of element weights."""

    def __init__(self, weights: Mapping[int, float]):
        super().__init__(weights.keys())
        for e, wt in weights.items():
            if wt < 0:
                raise OracleError(f"negative weight {wt} for element {e}")
        self._weights = {int(e): float(w) for e, w in weights.items()}

    def evaluate(self, subset: Iterable[int]) -> float:
        total = 0.0
        seen = set()
        weights = self._weights
        try:
            for e in subset:
                if e not in seen:
                    seen.add(e)
                    total += weights[e]
        except KeyError as exc:
            raise OracleError(f"element {exc.args[0]} outside universe") from exc
        return total


def make_coverage(definition: Mapping) -> CoverageOracle:
    """Build a coverage oracle from a parsed instance definition.

    Expected shape: {"elements": [{"id": int, "items": [int, ...]}, ...],
    "item_weights": {item: weight}} with item_weights optional.
    """
    covered = {}
    for row in definition["elements"]:
        covered[int(row["id"])] = [int(it) for it in row["items"]]
    weights = definition.get("item_weights")
    if weights is not None:
        weights = {int(it): float(w) for it, w in weights.items()}
    return CoverageOracle(covered, weights)


def load_instance(path: str) -> ValueOracle:
    """Load an oracle from a JSON instance file (coverage or modular)."""
    with open(path) as fh:
        defn = json.load(fh)
    if defn.get("kind") == "modular":
        return ModularOracle({int(e): float(w) for e, w in defn["weights"].items()})
    return make_coverage(defn)


def save_instance(oracle: ValueOracle, path: str) -> None:
    if isinstance(oracle, CoverageOracle):
        defn = oracle.to_definition()
    elif isinstance(oracle, ModularOracle):
        defn = {"kind": "modular",
                "weights": {str(e): oracle._weights[e] for e in sorted(oracle.universe)}}
    else:
        raise OracleError(f"cannot serialize oracle type {type(oracle).__name__}")
    with open(path, "w") as fh:
        json.dump(defn, fh, sort_keys=True)


def random_coverage(n_elements: int, n_items: int, seed: int,
                    items_per_element: Tuple[int, int] = (1, 6),
                    weighted: bool = False) -> CoverageOracle:
    """Random bipartite coverage instance; each element covers a small item set."""
    rng = random.Random(seed)
    lo, hi = items_per_element
    covered = {}
    for e in range(n_elements):
        deg = rng.randint(lo, min(hi, n_items))
        covered[e] = rng.sample(range(n_items), deg)
    weights = None
    if weighted:
        weights = {it: rng.randint(1, 8) for it in range(n_items)}
    return CoverageOracle(covered, weights)


class CountingOracle:
    """Metered front-end for a ValueOracle.

    Counters are keyed (phase, tag) and only ever increase; one `evaluate`
    call is one query. Determinism: repeated evaluations of the same set
    return bit-identical values (the inner oracles are pure).
    """

    def __init__(self, inner: ValueOracle):
        self.inner = inner
        self._counts: Dict[Tuple[str, str], int] = {}

    @property
    def universe(self) -> frozenset:
        return self.inner.universe

    def evaluate(self, subset: Iterable[int], phase: str, tag: str) -> float:
        if phase not in _PHASES:
            raise OracleError(f"unknown phase {phase!r}")
        key = (phase, tag)
        self._counts[key] = self._counts.get(key, 0) + 1
        return self.inner.evaluate(subset)

    def marginal(self, elem: int, subset: Iterable[int], phase: str, tag: str) -> float:
        base = set(subset)
        with_elem = self.evaluate(base | {elem}, phase, tag)
        without = self.evaluate(base, phase, tag)
        return with_elem - without

    def raw_evaluate(self, subset: Iterable[int]) -> float:
        """Unmetered evaluation, for metrics and test assertions only."""
        return self.inner.evaluate(subset)

    def total(self, phase: str | None = None) -> int:
        if phase is None:
            return sum(self._counts.values())
        return sum(v for (p, _), v in self._counts.items() if p == phase)

    def query_report(self) -> dict:
        by_tag = {f"{p}/{t}": v for (p, t), v in sorted(self._counts.items())}
        return {
            "by_tag": by_tag,
            "precompute_total": self.total(PHASE_PRECOMPUTE),
            "stream_total": self.total(PHASE_STREAM),
            "total": self.total(),
        }

    def channel(self, phase: str, tag: str, base: Iterable[int] = ()) -> "QueryChannel":
        return QueryChannel(self, phase, tag, base)


class QueryChannel:
    """Oracle view bound to one (phase, tag), optionally shifted by a base set.

    With a base set B the channel exposes g(S) = f(S | B) - f(B), which is
    again normalized, monotone, and submodular. f(B) is paid once at
    construction; afterwards each `value` call costs one query.
    """

    __slots__ = ("oracle", "phase", "tag", "base", "_base_value")

    def __init__(self, oracle: CountingOracle, phase: str, tag: str,
                 base: Iterable[int] = ()):
        self.oracle = oracle
        self.phase = phase
        self.tag = tag
        self.base = frozenset(base)
        self._base_value = (oracle.evaluate(self.base, phase, tag)
                            if self.base else 0.0)

    def value(self, subset: Iterable[int]) -> float:
        if self.base:
            return self.oracle.evaluate(self.base.union(subset), self.phase,
                                        self.tag) - self._base_value
        return self.oracle.evaluate(subset, self.phase, self.tag)

    def marginal(self, elem: int, subset: Iterable[int]) -> float:
        base = set(subset)
        return self.value(base | {elem}) - self.value(base)

    def rebased(self, base: Iterable[int]) -> "QueryChannel":
        return QueryChannel(self.oracle, self.phase, self.tag, base)


@dataclass
class PropertyCheckResult:
    trials: int
    monotone_violations: int = 0
    submodular_violations: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.monotone_violations == 0 and self.submodular_violations == 0


def check_monotone_submodular(oracle: ValueOracle, trials: int = 10_000,
                              seed: int = 0, tol: float = 1e-9) -> PropertyCheckResult:
    """Sample random (S, T, a) with S subset of T, a outside T, and check both
    f(T) >= f(S) - tol and f_S(a) >= f_T(a) - tol."""
    rng = random.Random(seed)
    elems = sorted(oracle.universe)
    res = PropertyCheckResult(trials=trials)
    if not elems:
        return res
    for _ in range(trials):
        t_size = rng.randint(0, len(elems))
        T = rng.sample(elems, t_size)
        s_size = rng.randint(0, len(T))
        S = rng.sample(T, s_size)
        fS = oracle.evaluate(S)
        fT = oracle.evaluate(T)
        if fT < fS - tol:
            res.monotone_violations += 1
            if len(res.failures) < 5:
                res.failures.append(("monotone", tuple(S), tuple(T)))
        outside = [e for e in elems if e not in set(T)]
        if outside:
            a = rng.choice(outside)
            gain_S = oracle.evaluate(set(S) | {a}) - fS
            gain_T = oracle.evaluate(set(T) | {a}) - fT
            if gain_S < gain_T - tol:
                res.submodular_violations += 1
                if len(res.failures) < 5:
                    res.failures.append(("submodular", tuple(S), tuple(T), a))
    return res
