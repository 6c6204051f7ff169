"""The dynamic-with-predictions framework and its three subroutine pairs.

The framework separates a precomputation phase (queries spent against the
predicted sets before the stream starts) from a streaming phase. At each
step t the active elements split into the predicted part (those also inside
the widened prediction window) and the unpredicted part, the online error
eta_t is updated, and the configured update subroutine produces S_t.

Variants:

- warmup: every step's predicted set gets its own stage-one robust summary
  with deletion budget eta + 2w (the true error must be supplied); at
  stream time stage two patches it against the actually-missing predicted
  elements, a guess-banded dynamic maximizer tracks the unpredicted
  elements, and the better of the two answers wins.
- main: phase-based updating against a guess grid, without value banding
  (every guess sees the whole stream).
- full: phase-based updating where each guess gamma only ever sees elements
  whose singleton value is compatible with it (eps*gamma/k <= f(a) <=
  2*gamma), plus a halving grid of error guesses; the answer is the best
  per-guess solution.
- baseline-dynamic: the prediction-free guess-banded maximizer, spending
  zero precomputation queries.

Phase discipline (main/full): a phase fixes a base set B = Q and an engine
over f shifted by B with constraint k - |B|; the engine absorbs
(R intersect predicted-active) union unpredicted-active in its
initialization batch, and the phase restarts once the engine has taken more
than eta_old/2 + w post-batch operations. Every pair consumed at a phase
start was extracted with deletion budget d = 2*(eta_guess + 2w); asserted.

Precomputation for main/full drives one engine per guess over the predicted
stream and journals compact per-level checkpoints (copy-on-write, so
unchanged levels share storage across time). A core/reserve pair for any
(t, gamma, h) is assembled from the checkpoint at or before t by the
level-capacity cutoff d/eps + k with d = 2(h + 2w); assembly is query-free,
so one drive of the engine serves every error guess h.
"""

from __future__ import annotations

import json
import logging
import math
import os
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .baselines import GridDynamic
from .engine import DynamicEngine
from .oracle import CountingOracle, PHASE_PRECOMPUTE, PHASE_STREAM, QueryChannel
from .robust import StronglyRobustPair, robust1_standalone, robust2
from .stream import PredictionTable, UpdateStream, online_error_series

log = logging.getLogger(__name__)

VARIANTS = ("warmup", "main", "full", "baseline-dynamic")
ENGINE_EPS_CAP = 0.45  # ladder accuracy stays inside (0, 1/2)


class ConfigError(ValueError):
    """Invalid framework configuration."""


@dataclass
class FrameworkConfig:
    k: int
    eps: float
    w: int
    variant: str
    seed: int = 0
    known_eta: Optional[int] = None  # warm-up assumes the error is known

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if not 0 < self.eps < 0.5:
            raise ConfigError("eps must lie in (0, 1/2)")
        if self.w < 0 or self.k < 1:
            raise ConfigError("need w >= 0 and k >= 1")


# ---------------------------------------------------------------------------
# guess grids
# ---------------------------------------------------------------------------

@dataclass
class GuessGrids:
    gammas: Tuple[float, ...]
    error_guesses: Tuple[float, ...]  # n/2^i, descending
    singleton: Dict[int, float]
    k: int
    eps: float
    n: int
    w: int
    _per_elem: Dict[int, Tuple[int, ...]] = field(default_factory=dict)

    def active_for(self, elem: int, gamma: float) -> bool:
        value = self.singleton[elem]
        return self.eps * gamma / self.k <= value <= 2 * gamma

    def gamma_indices(self, elem: int) -> Tuple[int, ...]:
        got = self._per_elem.get(elem)
        if got is None:
            got = tuple(j for j, g in enumerate(self.gammas)
                        if self.active_for(elem, g))
            self._per_elem[elem] = got
        return got

    def max_indices_per_element(self) -> int:
        return math.ceil(math.log(2 * self.k / self.eps)
                         / math.log1p(self.eps)) + 1

    def eta_guess(self, eta_t: float) -> float:
        """Smallest error guess at least eta_t; clamps at the top guess."""
        best = None
        for h in self.error_guesses:
            if h >= eta_t and (best is None or h < best):
                best = h
        if best is not None:
            return best
        log.warning("online error %s exceeds the largest guess %s; clamping",
                    eta_t, max(self.error_guesses))
        return max(self.error_guesses)


def guess_grids(channel: QueryChannel, V: Iterable[int], k: int, eps: float,
                n: int, w: int) -> GuessGrids:
    """Value grid from singleton anchors plus the halving error-guess grid.

    Costs |V| singleton queries and one f(V) query on the given channel.
    Zero-value elements never satisfy the band predicate, so the value grid
    anchors at the smallest positive singleton.
    """
    elems = sorted(set(V))
    if not elems:
        raise ConfigError("guess grids need a nonempty ground set")
    singleton = {a: channel.value(frozenset((a,))) for a in elems}
    f_all = channel.value(frozenset(elems))
    positive = [v for v in singleton.values() if v > 0]
    gammas: List[float] = []
    if positive:
        g = min(positive)
        while True:
            gammas.append(g)
            if g >= f_all:
                break
            g *= 1 + eps
    i_max = max(0, math.floor(math.log2(n / max(k - 2 * w, 1))))
    guesses = tuple(n / 2 ** i for i in range(i_max + 1))
    return GuessGrids(gammas=tuple(gammas), error_guesses=guesses,
                      singleton=singleton, k=k, eps=eps, n=n, w=w)


# ---------------------------------------------------------------------------
# precomputation journals and store
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SliceCheckpoint:
    t: int
    capacities: Tuple[float, ...]
    levels: Tuple[Tuple[Tuple[int, ...], Tuple[int, ...]], ...]  # (sel, rest)
    snapshot_id: int


class SliceJournal:
    """Checkpointed evolution of one guess's engine over the predicted stream."""

    def __init__(self, gamma: float):
        self.gamma = gamma
        self.checkpoints: List[SliceCheckpoint] = []
        self._times: List[int] = []
        self.update_count = 0

    def add(self, cp: SliceCheckpoint) -> None:
        self.checkpoints.append(cp)
        self._times.append(cp.t)

    def state_at(self, t: int) -> Optional[SliceCheckpoint]:
        pos = bisect_right(self._times, t)
        return self.checkpoints[pos - 1] if pos else None


def assemble_pair(cp: SliceCheckpoint, k: int, d: float, eps: float,
                  gamma: float) -> StronglyRobustPair:
    """Query-free extraction from a checkpoint: capacity cutoff d/eps + k.

    Selections at levels above the cutoff form the core; everything held at
    the smaller levels (including their selections) forms the reserve.
    """
    cutoff = d / eps + k
    Q: List[int] = []
    R: List[int] = []
    for cap, (sel, rest) in zip(cp.capacities, cp.levels):
        if cap > cutoff:
            Q.extend(sel)
        else:
            R.extend(sel)
            R.extend(rest)
    return StronglyRobustPair(Q=frozenset(Q), R=frozenset(R), d=d, eps=eps,
                              gamma=gamma, k=k,
                              provenance=f"slice:{cp.snapshot_id}@t{cp.t}")


def drive_predicted_slice(channel: QueryChannel, k: int, gamma: float, eps: float,
                          deltas: Sequence[Tuple[Sequence[int], Sequence[int]]],
                          n: int, seed: int) -> SliceJournal:
    """Run one engine over a predicted sub-stream, journaling checkpoints.

    `deltas[t]` lists the elements entering/leaving the predicted set at t
    (already restricted to this guess's band). Checkpoints share unchanged
    level payloads with their predecessor.
    """
    engine = DynamicEngine(channel.value, k, gamma, min(eps, ENGINE_EPS_CAP),
                           capacity_base=2 * k, seed=seed)
    engine.end_init_batch()
    journal = SliceJournal(gamma)
    prev_caps: Tuple[float, ...] = ()
    prev_levels: Tuple = ()
    snapshot = 0
    for t in range(1, n + 1):
        entering, leaving = deltas[t] if t < len(deltas) else ((), ())
        changed = False
        for a in entering:
            if a not in engine.active:
                engine.insert(a)
                changed = True
                journal.update_count += 1
        for a in leaving:
            if a in engine.active:
                engine.delete(a)
                changed = True
                journal.update_count += 1
        if not changed:
            continue
        dirty = engine.take_dirty()
        caps = engine.capacities
        if caps != prev_caps or len(prev_levels) != engine.n_levels:
            levels = tuple(engine.level_payload(l) for l in range(engine.n_levels))
        else:
            levels = tuple(engine.level_payload(l) if l in dirty else prev_levels[l]
                           for l in range(engine.n_levels))
        snapshot += 1
        journal.add(SliceCheckpoint(t=t, capacities=caps, levels=levels,
                                    snapshot_id=snapshot))
        prev_caps, prev_levels = caps, levels
    return journal


def slice_deltas(pred: PredictionTable, n: int,
                 elements: Iterable[int]) -> List[Tuple[List[int], List[int]]]:
    """Predicted-set enter/leave lists restricted to the given elements."""
    deltas: List[Tuple[List[int], List[int]]] = [([], []) for _ in range(n + 1)]
    for a in set(elements):
        lo, hi = pred.window(a)
        lo = max(lo, 1)
        if lo > n or hi < lo:
            continue
        deltas[lo][0].append(a)
        if hi + 1 <= n:
            deltas[hi + 1][1].append(a)
    for ent, leav in deltas:
        ent.sort()
        leav.sort()
    return deltas


class PrecomputationStore:
    """Per-(t, guess, error-guess) core/reserve pairs behind lazy assembly."""

    def __init__(self, grids: GuessGrids, k: int, eps: float, w: int, n: int):
        self.grids = grids
        self.k = k
        self.eps = eps
        self.w = w
        self.n = n
        self.journals: Dict[int, SliceJournal] = {}
        self._pair_cache: Dict[Tuple[int, int, float], StronglyRobustPair] = {}

    def pair(self, t: int, gamma_idx: int, h: float) -> StronglyRobustPair:
        d = 2 * (h + 2 * self.w)
        gamma = self.grids.gammas[gamma_idx]
        journal = self.journals.get(gamma_idx)
        cp = journal.state_at(t) if journal else None
        if cp is None:
            return StronglyRobustPair(frozenset(), frozenset(), d, self.eps,
                                      gamma, self.k, provenance="empty")
        key = (gamma_idx, cp.snapshot_id, h)
        pair = self._pair_cache.get(key)
        if pair is None:
            pair = assemble_pair(cp, self.k, d, self.eps, gamma)
            self._pair_cache[key] = pair
        return pair

    def total_checkpoints(self) -> int:
        return sum(len(j.checkpoints) for j in self.journals.values())

    # -- persistence (delta-encoded JSON per guess) --------------------------

    def save(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        meta = {"schema": 1, "n": self.n, "k": self.k, "eps": self.eps,
                "w": self.w, "gammas": list(self.grids.gammas),
                "error_guesses": list(self.grids.error_guesses),
                "singleton": {str(a): v for a, v in self.grids.singleton.items()}}
        with open(os.path.join(directory, "meta.json"), "w") as fh:
            json.dump(meta, fh, sort_keys=True)
        for idx, journal in self.journals.items():
            rows = []
            prev_caps: Tuple[float, ...] = ()
            prev_levels: Tuple = ()
            for cp in journal.checkpoints:
                row: dict = {"t": cp.t, "id": cp.snapshot_id}
                if cp.capacities != prev_caps:
                    row["caps"] = list(cp.capacities)
                row["levels"] = {
                    str(l): [list(cp.levels[l][0]), list(cp.levels[l][1])]
                    for l in range(len(cp.levels))
                    if l >= len(prev_levels) or cp.levels[l] is not prev_levels[l]}
                rows.append(row)
                prev_caps, prev_levels = cp.capacities, cp.levels
            blob = {"gamma": journal.gamma, "updates": journal.update_count,
                    "checkpoints": rows}
            with open(os.path.join(directory, f"slice_{idx:04d}.json"), "w") as fh:
                json.dump(blob, fh)

    @classmethod
    def load(cls, directory: str) -> "PrecomputationStore":
        with open(os.path.join(directory, "meta.json")) as fh:
            meta = json.load(fh)
        grids = GuessGrids(gammas=tuple(meta["gammas"]),
                           error_guesses=tuple(meta["error_guesses"]),
                           singleton={int(a): v
                                      for a, v in meta["singleton"].items()},
                           k=meta["k"], eps=meta["eps"], n=meta["n"], w=meta["w"])
        store = cls(grids, meta["k"], meta["eps"], meta["w"], meta["n"])
        for name in sorted(os.listdir(directory)):
            if not name.startswith("slice_"):
                continue
            idx = int(name[len("slice_"):-len(".json")])
            with open(os.path.join(directory, name)) as fh:
                blob = json.load(fh)
            journal = SliceJournal(blob["gamma"])
            journal.update_count = blob["updates"]
            caps: Tuple[float, ...] = ()
            levels: List = []
            for row in blob["checkpoints"]:
                if "caps" in row:
                    caps = tuple(row["caps"])
                    levels = [((), ())] * len(caps)
                else:
                    levels = list(levels)
                for l_str, (sel, rest) in row["levels"].items():
                    levels[int(l_str)] = (tuple(sel), tuple(rest))
                journal.add(SliceCheckpoint(t=row["t"], capacities=caps,
                                            levels=tuple(levels),
                                            snapshot_id=row["id"]))
            store.journals[idx] = journal
        return store


def precomputations_main(channel: QueryChannel, k: int, pred: PredictionTable,
                         n: int, w: int, gamma: float, h: float, eps: float,
                         seed: int = 0,
                         elements: Optional[Iterable[int]] = None
                         ) -> Tuple[SliceJournal, Dict[int, StronglyRobustPair]]:
    """Drive one engine over the predicted stream; extract a pair per step.

    Extraction parameters: deletion budget d = 2(h + 2w) at the given guess.
    Returns the journal (engine-update accounting) plus the per-step pairs
    for every t where the engine holds at least one element.
    """
    elems = set(elements) if elements is not None else set(pred.elements)
    deltas = slice_deltas(pred, n, elems)
    journal = drive_predicted_slice(channel, k, gamma, eps, deltas, n, seed)
    pairs: Dict[int, StronglyRobustPair] = {}
    d = 2 * (h + 2 * w)
    for t in range(1, n + 1):
        cp = journal.state_at(t)
        if cp is None:
            continue
        if not any(sel or rest for sel, rest in cp.levels):
            continue
        pairs[t] = assemble_pair(cp, k, d, eps, gamma)
    return journal, pairs


def precomputations_full(oracle: CountingOracle, pred: PredictionTable,
                         config: FrameworkConfig, n: int,
                         universe: Iterable[int]) -> PrecomputationStore:
    """Build the full store: one journal per qualifying guess.

    A guess qualifies when some element of its value band is ever predicted.
    One journal serves all error guesses, since the error guess only moves
    the extraction cutoff, never the engine.
    """
    channel = oracle.channel(PHASE_PRECOMPUTE, "grids")
    grids = guess_grids(channel, universe, config.k, config.eps, n, config.w)
    store = PrecomputationStore(grids, config.k, config.eps, config.w, n)
    by_gamma: Dict[int, List[int]] = {}
    for a in sorted(pred.elements):
        lo, hi = pred.window(a)
        if max(lo, 1) > n or hi < max(lo, 1):
            continue
        for idx in grids.gamma_indices(a):
            by_gamma.setdefault(idx, []).append(a)
    for idx, members in sorted(by_gamma.items()):
        deltas = slice_deltas(pred, n, members)
        eng_channel = oracle.channel(PHASE_PRECOMPUTE, f"slice{idx}")
        store.journals[idx] = drive_predicted_slice(
            eng_channel, config.k, grids.gammas[idx], config.eps, deltas, n,
            seed=config.seed * 7_919 + idx)
    return store


def save_warmup_store(store: List[List[StronglyRobustPair]], path: str) -> None:
    with open(path, "w") as fh:
        json.dump([[pair.to_json() for pair in pairs] for pairs in store], fh)


def load_warmup_store(path: str) -> List[List[StronglyRobustPair]]:
    with open(path) as fh:
        raw = json.load(fh)
    return [[StronglyRobustPair.from_json(row) for row in pairs]
            for pairs in raw]


def warmup_precomputations(oracle: CountingOracle, pred: PredictionTable,
                           n: int, k: int, eta: int, w: int, eps: float,
                           seed: int = 0) -> List[List[StronglyRobustPair]]:
    """Per-step stage-one robust summaries with deletion budget eta + 2w.

    Index 0 is unused padding so the list aligns with 1-based steps.
    """
    channel = oracle.channel(PHASE_PRECOMPUTE, "warmup")
    deltas = pred.predicted_deltas(n)
    current: set = set()
    out: List[List[StronglyRobustPair]] = [[]]
    d = eta + 2 * w
    for t in range(1, n + 1):
        entering, leaving = deltas[t]
        current.update(entering)
        current.difference_update(leaving)
        if current:
            out.append(robust1_standalone(channel.value, current, k, d, eps,
                                          seed=seed * 4_099 + t))
        else:
            out.append([])
    return out


# ---------------------------------------------------------------------------
# streaming-phase subroutines
# ---------------------------------------------------------------------------

class NullEngine:
    """Stands in when the phase base already fills the constraint (k-|B|=0).

    Keeps the active set and the operation counters; never queries.
    """

    def __init__(self):
        self.active: set = set()
        self.ops_total = 0
        self.ops_star = 0
        self._init_open = True

    def insert(self, elem: int) -> None:
        self.active.add(elem)
        self.ops_total += 1
        if not self._init_open:
            self.ops_star += 1

    def delete(self, elem: int) -> None:
        self.active.discard(elem)
        self.ops_total += 1
        if not self._init_open:
            self.ops_star += 1

    def end_init_batch(self) -> None:
        self._init_open = False

    def solution(self) -> frozenset:
        return frozenset()


@dataclass
class PhaseState:
    base: frozenset
    engine: DynamicEngine | NullEngine
    eta_old: float
    started_at: int
    gamma: float
    pair_d: float
    restarts: int = 0


def phase_needs_restart(state: Optional[PhaseState], w: int) -> bool:
    return state is None or state.engine.ops_star > state.eta_old / 2 + w


def updatesol_main(channel: QueryChannel, k: int, eps: float, w: int,
                   state: Optional[PhaseState],
                   pair_provider: Callable[[], StronglyRobustPair], t: int,
                   eta_prime: float, active_g: Iterable[int],
                   v1_g: Iterable[int], v_true: frozenset, gamma: float,
                   seed: int = 0,
                   deltas: Optional[Tuple[Sequence[int], Sequence[int]]] = None,
                   prev_g: Optional[Iterable[int]] = None
                   ) -> Tuple[PhaseState, frozenset]:
    """One step of the phase-based subroutine for a single guess.

    `active_g`/`v1_g` are this guess's views of V_t and of the predicted
    active part (their difference is the unpredicted part). The phase
    restarts when it is new or the engine exceeded eta_old/2 + w post-batch
    operations; restarting rebases on the precomputed core and batch-loads
    (reserve ∩ predicted-active) ∪ unpredicted-active. Otherwise the step's
    delta is forwarded to the engine: `deltas` gives (insertions,
    deletions) directly, or they are derived from `prev_g`, the view at
    t - 1. The answer is (base ∪ engine solution) ∩ V_t.
    """
    if phase_needs_restart(state, w):
        pair = pair_provider()
        assert pair.d == 2 * (eta_prime + 2 * w), \
            f"pair built with d={pair.d}, phase needs {2 * (eta_prime + 2 * w)}"
        base = pair.Q
        k_rem = k - len(base)
        v1_set = set(v1_g)
        batch = (pair.R & v1_set) | (set(active_g) - v1_set)
        if k_rem <= 0:
            engine: DynamicEngine | NullEngine = NullEngine()
        else:
            shifted = channel.rebased(base) if base else channel
            engine = DynamicEngine(shifted.value, k_rem, gamma * k_rem / k,
                                   min(eps, ENGINE_EPS_CAP),
                                   capacity_base=max(2 * k_rem, len(batch)),
                                   seed=seed * 524_287 + t)
        for a in sorted(batch):
            engine.insert(a)
        engine.end_init_batch()
        state = PhaseState(base=base, engine=engine, eta_old=eta_prime,
                           started_at=t, gamma=gamma, pair_d=pair.d,
                           restarts=(state.restarts + 1) if state else 0)
    else:
        engine = state.engine
        if deltas is None:
            prev = set(prev_g or ())
            now = set(active_g)
            ins, dels = sorted(now - prev), sorted(prev - now)
        else:
            ins, dels = deltas
        for a in ins:
            if a not in engine.active:
                engine.insert(a)
        for a in dels:
            if a in engine.active:
                engine.delete(a)
    sol = state.engine.solution()
    return state, (state.base | sol) & v_true


@dataclass
class StepDiagnostics:
    """Per-guess diagnostics from one step of the full/main variants."""

    rows: List[Tuple[float, float, int, bool]] = field(default_factory=list)
    # (gamma, value of the guess's answer, phase start time, restarted now)


class FullState:
    """Per-guess phases plus incrementally maintained per-guess views."""

    def __init__(self):
        self.phases: Dict[int, PhaseState] = {}
        self.active_g: Dict[int, set] = {}
        self.v1_g: Dict[int, set] = {}
        self.last_answer: Dict[int, Tuple[frozenset, float]] = {}


# ---------------------------------------------------------------------------
# the framework loop
# ---------------------------------------------------------------------------

@dataclass
class FrameworkStep:
    t: int
    solution: frozenset
    active: frozenset
    eta_t: int
    stream_queries: int
    precompute_queries: int
    diagnostics: Optional[StepDiagnostics] = None


def run_framework(oracle: CountingOracle, stream: UpdateStream,
                  pred: Optional[PredictionTable], config: FrameworkConfig,
                  store: Optional[PrecomputationStore] = None,
                  warmup_store: Optional[List[List[StronglyRobustPair]]] = None,
                  ) -> Iterator[FrameworkStep]:
    """Precompute (unless a store is supplied), then stream, yielding the
    per-step solution with live query attribution. Feasibility (S_t inside
    V_t, |S_t| <= k) is asserted on every step."""
    config.validate()
    n = stream.n
    if config.variant != "baseline-dynamic":
        if pred is None:
            raise ConfigError(f"variant {config.variant} needs predictions")
        missing = stream.elements - pred.elements
        if missing:
            raise ConfigError(
                f"predictions missing stream elements: {sorted(missing)[:5]}")
        if pred.w != config.w:
            raise ConfigError("prediction table w differs from config w")

    grids = None
    if config.variant in ("main", "full"):
        if store is None:
            universe = oracle.universe
            if config.variant == "main":
                store = main_store(oracle, pred, config, n, universe)
            else:
                store = precomputations_full(oracle, pred, config, n, universe)
        grids = store.grids
    elif config.variant == "warmup":
        if warmup_store is None:
            if config.known_eta is None:
                raise ConfigError("warm-up variant needs known_eta")
            warmup_store = warmup_precomputations(
                oracle, pred, n, config.k, config.known_eta, config.w,
                config.eps, seed=config.seed)

    channel = oracle.channel(PHASE_STREAM, "updatesol")
    eta_series = (online_error_series(stream, pred)
                  if pred is not None else [0] * n)

    v_true: set = set()
    vhat: set = set()
    v1: set = set()
    pred_deltas = pred.predicted_deltas(n) if pred is not None else None
    full_state = FullState()
    dyn: Optional[GridDynamic] = None
    baseline: Optional[GridDynamic] = None

    def band_update(elem: int, add_active: bool | None = None,
                    add_v1: bool | None = None) -> None:
        for idx in grids.gamma_indices(elem):
            if add_active is not None:
                view = full_state.active_g.setdefault(idx, set())
                (view.add if add_active else view.discard)(elem)
            if add_v1 is not None:
                view = full_state.v1_g.setdefault(idx, set())
                (view.add if add_v1 else view.discard)(elem)

    for t in range(1, n + 1):
        event = stream.events[t - 1]
        if pred_deltas is not None:
            entering, leaving = pred_deltas[t]
            for a in entering:
                vhat.add(a)
                if a in v_true:
                    v1.add(a)
                    if grids is not None:
                        band_update(a, add_v1=True)
            for a in leaving:
                vhat.discard(a)
                if a in v1:
                    v1.discard(a)
                    if grids is not None:
                        band_update(a, add_v1=False)
        if event.op == "ins":
            v_true.add(event.elem)
            in_hat = event.elem in vhat
            if in_hat:
                v1.add(event.elem)
            if grids is not None:
                band_update(event.elem, add_active=True,
                            add_v1=True if in_hat else None)
        else:
            v_true.remove(event.elem)
            was_v1 = event.elem in v1
            v1.discard(event.elem)
            if grids is not None:
                band_update(event.elem, add_active=False,
                            add_v1=False if was_v1 else None)
        eta_t = eta_series[t - 1]
        frozen_true = frozenset(v_true)

        diag = None
        if config.variant == "baseline-dynamic":
            if baseline is None:
                baseline = GridDynamic(channel.value, config.k, config.eps,
                                       seed=config.seed)
            if event.op == "ins":
                baseline.insert(event.elem)
            else:
                baseline.delete(event.elem)
            solution = baseline.solution()
        elif config.variant == "warmup":
            frozen_v1 = frozenset(v1)
            dyn, solution = warmup_updatesol(
                channel, config.k, config.eps, dyn, warmup_store[t], t,
                frozen_v1, frozen_true - frozen_v1, frozenset(vhat),
                seed=config.seed)
        else:
            if config.variant == "main":
                touched: Iterable[int] = range(len(grids.gammas))
            else:
                touched = grids.gamma_indices(event.elem)
            event_delta = (([event.elem], []) if event.op == "ins"
                           else ([], [event.elem]))
            diag = StepDiagnostics()
            eta_prime = grids.eta_guess(eta_t)
            for idx in touched:
                active_view = full_state.active_g.get(idx, set())
                phase = full_state.phases.get(idx)
                if phase is None and not active_view:
                    full_state.last_answer.pop(idx, None)
                    continue
                v1_view = full_state.v1_g.get(idx, set())
                before = phase.restarts if phase else -1
                phase, answer = updatesol_main(
                    channel, config.k, config.eps, config.w, phase,
                    (lambda t=t, idx=idx, h=eta_prime:
                     store.pair(t, idx, h)), t, eta_prime, active_view,
                    v1_view, frozen_true, grids.gammas[idx],
                    seed=config.seed * 31 + idx + 1, deltas=event_delta)
                full_state.phases[idx] = phase
                value = channel.value(answer) if answer else 0.0
                full_state.last_answer[idx] = (answer, value)
                diag.rows.append((grids.gammas[idx], value, phase.started_at,
                                  phase.restarts != before))
            solution = frozenset()
            best_val = -1.0
            for idx, (answer, value) in full_state.last_answer.items():
                if not full_state.active_g.get(idx):
                    continue
                assert answer <= frozen_true, "stale cached answer"
                if value > best_val:
                    solution, best_val = answer, value

        assert solution <= frozen_true, f"step {t}: answer outside active set"
        assert len(solution) <= config.k, f"step {t}: answer exceeds k"
        yield FrameworkStep(
            t=t, solution=solution, active=frozen_true, eta_t=eta_t,
            stream_queries=oracle.total(PHASE_STREAM),
            precompute_queries=oracle.total(PHASE_PRECOMPUTE),
            diagnostics=diag)


def warmup_updatesol(channel: QueryChannel, k: int, eps: float,
                     dyn: Optional[GridDynamic],
                     pairs_t: Sequence[StronglyRobustPair], t: int,
                     v1: frozenset, v2: frozenset, vhat: frozenset,
                     seed: int = 0) -> Tuple[GridDynamic, frozenset]:
    """Stage-two answer over predictions vs. dynamic answer over the rest."""
    s1 = robust2(channel.value, list(pairs_t), vhat - v1, k)
    if dyn is None:
        dyn = GridDynamic(channel.value, k, eps, seed=seed)
    for a in sorted(v2 - dyn.active):
        dyn.insert(a)
    for a in sorted(dyn.active - v2):
        dyn.delete(a)
    s2 = dyn.solution()
    v1_val = channel.value(s1) if s1 else 0.0
    v2_val = channel.value(s2) if s2 else 0.0
    return dyn, (s1 if v1_val >= v2_val else s2)


def main_store(oracle: CountingOracle, pred: PredictionTable,
               config: FrameworkConfig, n: int,
               universe: Iterable[int]) -> PrecomputationStore:
    """Store for the unsliced variant: every guess sees the whole predicted
    stream (no value banding)."""
    channel = oracle.channel(PHASE_PRECOMPUTE, "grids")
    grids = guess_grids(channel, universe, config.k, config.eps, n, config.w)
    grids._per_elem = {a: tuple(range(len(grids.gammas)))
                       for a in grids.singleton}
    store = PrecomputationStore(grids, config.k, config.eps, config.w, n)
    members = sorted(pred.elements)
    for idx, gamma in enumerate(grids.gammas):
        deltas = slice_deltas(pred, n, members)
        eng_channel = oracle.channel(PHASE_PRECOMPUTE, f"slice{idx}")
        store.journals[idx] = drive_predicted_slice(
            eng_channel, config.k, gamma, config.eps, deltas, n,
            seed=config.seed * 7_919 + idx)
    return store
