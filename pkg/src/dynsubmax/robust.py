"""Deletion-robust core/reserve pairs and their verification.

A pair (Q, R) is (d, eps, gamma)-strongly robust for constraint k when:

- Size: |Q| <= k and |R| = O(eps^-2 (d + k) log k); the tested constant is
  |R| <= 8 * eps^-2 * (d + k) * log2(k + 1), and the realized constant is
  measured and reported.
- Value: f(Q) >= |Q| * gamma / (2k); and when |Q| < k, every S outside R
  satisfies f_Q(S) < |S| * gamma / (2k) + eps * (1+eps)/(1-eps) * gamma.
- Robustness: for any deletion set D with |D| <= d, the expected value of
  f(Q \\ D) over the construction's randomness is at least (1 - eps) f(Q).

`robust1_from_dynamic` reads such a pair off a dynamic engine snapshot with
zero oracle queries: selections made at levels whose capacity exceeds
d/eps + k form Q (each was drawn uniformly from a pool larger than half
that capacity, so no single deletion set of size d is likely to hit it);
everything still held at the smaller levels - buckets, buffers, and the
deep selections - forms the reserve R.

`robust1_standalone` provides the same interface over a static ground set:
it brackets the optimum with a lazy-greedy value, builds one engine per
guess on a geometric grid covering [g(1-1/e), g/(1-1/e)], and extracts a
pair from each. `robust2` answers the second stage: greedily patch Q \\ D
from R \\ D and keep the best pair's answer.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Dict, Iterable, List, Sequence, Tuple

from .baselines import lazy_greedy
from .engine import DynamicEngine, GridView


@dataclass(frozen=True)
class StronglyRobustPair:
    Q: frozenset
    R: frozenset
    d: float
    eps: float
    gamma: float
    k: int
    provenance: str = ""

    def to_json(self) -> dict:
        return {"Q": sorted(self.Q), "R": sorted(self.R), "d": self.d,
                "eps": self.eps, "gamma": self.gamma, "k": self.k}

    @classmethod
    def from_json(cls, data: dict, provenance: str = "") -> "StronglyRobustPair":
        return cls(Q=frozenset(data["Q"]), R=frozenset(data["R"]), d=data["d"],
                   eps=data["eps"], gamma=data["gamma"], k=int(data["k"]),
                   provenance=provenance)


def reserve_budget(d: float, eps: float, k: int) -> float:
    """Tested ceiling on |R| (the recorded constant is 8)."""
    return 8.0 * (d + k) * math.log2(k + 1) / (eps * eps)


def robust1_from_dynamic(view: GridView, k: int, d: float,
                         eps: float) -> StronglyRobustPair:
    """Partition an engine snapshot into (Q, R) by level capacity.

    Levels with capacity > d/eps + k contribute their selections to Q;
    every other level contributes all of its content (selections, resting
    elements, and thereby all bucket members homed there) to R. Pure
    bookkeeping: no oracle queries.
    """
    cutoff = d / eps + k
    Q: set = set()
    R: set = set()
    for level, cap in enumerate(view.capacities):
        sel = view.sel_by_level(level)
        if cap > cutoff:
            Q.update(sel)
        else:
            R.update(sel)
            R.update(view.buffers[level])
    return StronglyRobustPair(Q=frozenset(Q), R=frozenset(R), d=d, eps=eps,
                              gamma=view.gamma, k=k,
                              provenance=f"snapshot:{view.snapshot_id}")


def gamma_grid(anchor: float, eps: float) -> Tuple[float, ...]:
    """Geometric guesses covering [anchor*(1-1/e), anchor/(1-1/e)]."""
    if anchor <= 0:
        return ()
    lo = anchor * (1 - 1 / math.e)
    hi = anchor / (1 - 1 / math.e)
    out = []
    g = lo
    while g < hi * (1 + eps):
        out.append(g)
        g *= 1 + eps
    return tuple(out)


def robust1_standalone(value_fn: Callable[[frozenset], float], V: Iterable[int],
                       k: int, d: float, eps: float,
                       seed: int = 0) -> List[StronglyRobustPair]:
    """Stage-one robust summaries over a static ground set, one per guess.

    The engine's ladder accuracy is clamped below 1/2; the pair's eps (used
    for the extraction cutoff and the robustness target) is the caller's.
    """
    elems = sorted(set(V))
    if not elems:
        return []
    _, anchor = lazy_greedy(value_fn, elems, k)
    if anchor <= 0:
        return []
    pairs = []
    engine_eps = min(eps, 0.45)
    for j, gamma in enumerate(gamma_grid(anchor, eps)):
        eng = DynamicEngine(value_fn, k, gamma, engine_eps,
                            capacity_base=max(len(elems), 2 * k),
                            seed=seed * 10_007 + j)
        for a in elems:
            eng.insert(a)
        eng.end_init_batch()
        pair = robust1_from_dynamic(eng.inspect(), k, d, eps)
        pairs.append(pair)
    return pairs


def robust2(value_fn: Callable[[frozenset], float],
            pairs: Sequence[StronglyRobustPair] | StronglyRobustPair,
            D: Iterable[int], k: int) -> frozenset:
    """Stage two: survivors of Q seeded, greedily topped up from R, best pair wins."""
    if isinstance(pairs, StronglyRobustPair):
        pairs = [pairs]
    deleted = frozenset(D)
    best: frozenset = frozenset()
    best_val = -1.0
    for pair in pairs:
        seed_set = pair.Q - deleted
        reserve = (pair.R - deleted) - seed_set
        got, val = lazy_greedy(value_fn, reserve, k, base=seed_set)
        if val > best_val:
            best, best_val = got, val
    return best


@dataclass
class RobustSummary:
    trials: int
    size_ok: bool = True
    value_ok: bool = True
    saturation_ok: bool = True
    saturation_checked: int = 0
    robustness: Dict[str, float] = field(default_factory=dict)
    robustness_ok: bool = True
    c_r_measured: float = 0.0
    mean_q_value: float = 0.0
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (self.size_ok and self.value_ok and self.saturation_ok
                and self.robustness_ok)


def verify_strongly_robust(builder: Callable[[int], StronglyRobustPair],
                           value_fn: Callable[[frozenset], float],
                           V: Iterable[int], d: int, eps: float, gamma: float,
                           k: int, trials: int = 200, seed: int = 0,
                           delta_stat: float = 0.05,
                           tol: float = 1e-9) -> RobustSummary:
    """Re-run a randomized pair construction and check all three bullets.

    Size and value are asserted per build. The short-core saturation clause
    is checked exhaustively over S outside R with |S| <= k (ground sets are
    expected to be small). Robustness is checked in expectation against the
    adversarial deletion set (the d largest singletons) and against random
    deletion sets, with statistical slack `delta_stat`.
    """
    elems = sorted(set(V))
    rng = random.Random(seed)
    summary = RobustSummary(trials=trials)
    by_single = sorted(elems, key=lambda a: (-value_fn(frozenset((a,))), a))
    adversarial = frozenset(by_single[:d])
    sum_q: float = 0.0
    sum_survive: Dict[str, float] = {"adversarial": 0.0, "random": 0.0}
    budget = reserve_budget(d, eps, k)
    slack = eps * (1 + eps) / (1 - eps) * gamma

    for trial in range(trials):
        pair = builder(seed * 65_537 + trial)
        if len(pair.Q) > k or len(pair.R) > budget:
            summary.size_ok = False
            summary.failures.append(
                f"trial {trial}: |Q|={len(pair.Q)} |R|={len(pair.R)}")
        if budget > 0:
            summary.c_r_measured = max(
                summary.c_r_measured, 8.0 * len(pair.R) / budget)
        fq = value_fn(pair.Q)
        if fq < len(pair.Q) * gamma / (2 * k) - tol:
            summary.value_ok = False
            summary.failures.append(f"trial {trial}: f(Q)={fq} below floor")
        if len(pair.Q) < k:
            summary.saturation_checked += 1
            outside = [a for a in elems if a not in pair.R]
            for size in range(1, k + 1):
                for combo in combinations(outside, size):
                    gain = value_fn(pair.Q | set(combo)) - fq
                    if gain >= size * gamma / (2 * k) + slack + tol:
                        summary.saturation_ok = False
                        summary.failures.append(
                            f"trial {trial}: f_Q({combo})={gain} too high")
                        break
                if not summary.saturation_ok:
                    break
        sum_q += fq
        sum_survive["adversarial"] += value_fn(pair.Q - adversarial)
        random_d = frozenset(rng.sample(elems, min(d, len(elems))))
        sum_survive["random"] += value_fn(pair.Q - random_d)

    summary.mean_q_value = sum_q / max(trials, 1)
    for mode, total in sum_survive.items():
        ratio = total / sum_q if sum_q > 0 else 1.0
        summary.robustness[mode] = ratio
        if ratio < 1 - eps - delta_stat:
            summary.robustness_ok = False
            summary.failures.append(f"{mode} robustness ratio {ratio:.4f}")
    return summary


def save_pairs(pairs: Sequence[StronglyRobustPair], path: str) -> None:
    with open(path, "w") as fh:
        json.dump([p.to_json() for p in pairs], fh, sort_keys=True)


def load_pairs(path: str) -> List[StronglyRobustPair]:
    with open(path) as fh:
        return [StronglyRobustPair.from_json(row) for row in json.load(fh)]
