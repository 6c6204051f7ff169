"""Update streams, insertion/deletion-time predictions, and derived sets.

Time is discrete, one event per step t = 1..n. The true stream determines
active sets V_t; a prediction table assigns each element a predicted
insertion time and deletion time, widened by a tolerance window w:

    predicted_at(a, t)  <=>  t_ins_hat(a) <= t + w  and  t_del_hat(a) >= t - w

Times bound the active interval inclusively on both ends: an element's
insertion time is the first step it is active and its deletion time is the
last step it is active (one less than its deletion event's step). Under
this convention exact predictions at w = 0 make the predicted sets equal
the active sets at every step, and the overlap bound below is exact.

An element is mispredicted when its true insertion or deletion time misses
the prediction by more than w; the prediction error eta counts mispredicted
elements. Elements never deleted get deletion time n + 1, and elements
predicted but never inserted get insertion time n + 1, so the error is
total. The online error eta_t counts the mispredictions confirmable from
the first t events alone; it is nondecreasing and reaches eta at t = n.

The generator produces well-formed streams with predictions that are exact
up to a jitter <= w except on a prescribed set of corrupted elements
(time-shift, element swap, or omission), so the realized eta is known by
construction. Jitter is one-sided (insertions predicted at or after the
truth, deletions at or before), which keeps the predicted-but-inactive
overlap within eta + 2w at every step, exactly.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple

INS = "ins"
DEL = "del"


class StreamError(ValueError):
    """Malformed stream, prediction table, or generator parameters."""


@dataclass(frozen=True)
class UpdateEvent:
    t: int
    op: str
    elem: int


class UpdateStream:
    """Validated sequence of insertions and deletions, one per time step."""

    def __init__(self, events: Iterable[UpdateEvent]):
        self.events: Tuple[UpdateEvent, ...] = tuple(events)
        self.n = len(self.events)
        self._ins_time: Dict[int, int] = {}
        self._del_time: Dict[int, int] = {}
        active = set()
        for i, ev in enumerate(self.events, start=1):
            if ev.t != i:
                raise StreamError(f"event {i} carries time {ev.t}; expected {i}")
            if ev.op == INS:
                if ev.elem in self._ins_time:
                    raise StreamError(f"element {ev.elem} inserted twice (t={ev.t})")
                active.add(ev.elem)
                self._ins_time[ev.elem] = ev.t
            elif ev.op == DEL:
                if ev.elem not in active:
                    raise StreamError(
                        f"deletion of inactive element {ev.elem} at t={ev.t}")
                active.remove(ev.elem)
                self._del_time[ev.elem] = ev.t
            else:
                raise StreamError(f"unknown op {ev.op!r} at t={ev.t}")

    @property
    def elements(self) -> frozenset:
        return frozenset(self._ins_time)

    def insertion_time(self, elem: int) -> int:
        """First step the element is active; n + 1 when it never appears."""
        return self._ins_time.get(elem, self.n + 1)

    def deletion_time(self, elem: int) -> int:
        """Last step the element is active (its deletion event happens one
        step later); n + 1 when it is never deleted."""
        event = self._del_time.get(elem)
        return event - 1 if event is not None else self.n + 1

    def deletion_event(self, elem: int) -> int:
        """Step of the deletion event itself; n + 1 when never deleted."""
        return self._del_time.get(elem, self.n + 1)

    def active_set(self, t: int) -> frozenset:
        if not 0 <= t <= self.n:
            raise StreamError(f"time {t} outside 0..{self.n}")
        active = set()
        for ev in self.events[:t]:
            if ev.op == INS:
                active.add(ev.elem)
            else:
                active.remove(ev.elem)
        return frozenset(active)

    def iter_active(self) -> Iterator[Tuple[UpdateEvent, set]]:
        """Yield (event, active set after the event) without re-scanning."""
        active: set = set()
        for ev in self.events:
            if ev.op == INS:
                active.add(ev.elem)
            else:
                active.remove(ev.elem)
            yield ev, active


class PredictionTable:
    """Per-element (predicted insertion, predicted deletion) with tolerance w."""

    def __init__(self, times: Dict[int, Tuple[int, int]], w: int):
        if w < 0:
            raise StreamError("tolerance w must be non-negative")
        for a, (tp, tm) in times.items():
            if tp > tm:
                raise StreamError(
                    f"element {a}: predicted insertion {tp} after deletion {tm}")
        self.times = {int(a): (int(tp), int(tm)) for a, (tp, tm) in times.items()}
        self.w = int(w)

    @property
    def elements(self) -> frozenset:
        return frozenset(self.times)

    def window(self, elem: int) -> Tuple[int, int]:
        """Inclusive time range during which the element is predicted active."""
        tp, tm = self.times[elem]
        return tp - self.w, tm + self.w

    def predicted_at(self, elem: int, t: int) -> bool:
        tp, tm = self.times[elem]
        return tp <= t + self.w and tm >= t - self.w

    def predicted_set(self, t: int) -> frozenset:
        return frozenset(a for a in self.times if self.predicted_at(a, t))

    def predicted_deltas(self, n: int) -> List[Tuple[List[int], List[int]]]:
        """For t = 1..n, the lists (entering, leaving) of the predicted sets.

        entering[t] = predicted at t but not at t-1; leaving likewise. One
        linear pass instead of n full scans.
        """
        deltas: List[Tuple[List[int], List[int]]] = [([], []) for _ in range(n + 1)]
        for a in self.times:
            lo, hi = self.window(a)
            lo = max(lo, 1)
            if lo > n or hi < lo:
                continue
            deltas[lo][0].append(a)
            if hi + 1 <= n:
                deltas[hi + 1][1].append(a)
        for ent, lef in deltas:
            ent.sort()
            lef.sort()
        return deltas


def active_set(stream: UpdateStream, t: int) -> frozenset:
    return stream.active_set(t)


def predicted_set(pred: PredictionTable, t: int) -> frozenset:
    return pred.predicted_set(t)


def _check_covered(stream: UpdateStream, pred: PredictionTable) -> None:
    missing = stream.elements - pred.elements
    if missing:
        raise StreamError(
            f"stream elements missing from predictions: {sorted(missing)[:5]}")


def prediction_error(stream: UpdateStream, pred: PredictionTable) -> int:
    """Number of elements whose true insertion or deletion time misses its
    prediction by more than w."""
    _check_covered(stream, pred)
    w = pred.w
    eta = 0
    for a, (tp_hat, tm_hat) in pred.times.items():
        tp = stream.insertion_time(a)
        tm = stream.deletion_time(a)
        if abs(tp_hat - tp) > w or abs(tm_hat - tm) > w:
            eta += 1
    return eta


def confirm_times(stream: UpdateStream, pred: PredictionTable) -> Dict[int, int]:
    """First time step at which each misprediction is confirmed online.

    Confirmation rules, checked after the step-t event is applied:
      (i)   a inserted at t_ins <= t with |t_ins_hat - t_ins| > w;
      (ii)  t > t_ins_hat + w and a not yet inserted;
      (iii) a's deletion event observed by t with |t_del_hat - t_del| > w;
      (iv)  t > t_del_hat + w and a inserted but not yet deleted.
    Rules (ii) and (iv) fire one step after the widened window closes, which
    can leave a boundary misprediction unconfirmed during the stream; at
    t = n every remaining misprediction is confirmed, since all true times
    are then known. Only mispredicted elements appear in the result.
    """
    _check_covered(stream, pred)
    w, n = pred.w, stream.n
    out: Dict[int, int] = {}
    for a, (tp_hat, tm_hat) in pred.times.items():
        tp = stream.insertion_time(a)
        tm = stream.deletion_time(a)
        if abs(tp_hat - tp) <= w and abs(tm_hat - tm) <= w:
            continue
        candidates = [n]  # end-of-stream finalization
        if tp <= n and abs(tp_hat - tp) > w:
            candidates.append(tp)  # rule (i)
        t_late = tp_hat + w + 1  # rule (ii): earliest t with t > tp_hat + w
        if t_late <= n and tp > t_late:
            candidates.append(t_late)
        del_event = stream.deletion_event(a)
        if del_event <= n and abs(tm_hat - tm) > w:
            candidates.append(del_event)  # rule (iii)
        t_over = max(tm_hat + w + 1, tp)  # rule (iv) needs the element inserted
        if tp <= n and t_over <= n and tm >= t_over:
            candidates.append(t_over)
        out[a] = min(candidates)
    return out


def online_error(stream: UpdateStream, pred: PredictionTable, t: int) -> int:
    if not 1 <= t <= stream.n:
        raise StreamError(f"time {t} outside 1..{stream.n}")
    times = confirm_times(stream, pred)
    return sum(1 for ct in times.values() if ct <= t)


def online_error_series(stream: UpdateStream, pred: PredictionTable) -> List[int]:
    """eta_t for t = 1..n in one pass."""
    n = stream.n
    counts = [0] * (n + 2)
    for ct in confirm_times(stream, pred).values():
        counts[ct] += 1
    series = []
    run = 0
    for t in range(1, n + 1):
        run += counts[t]
        series.append(run)
    return series


def partition(stream: UpdateStream, pred: PredictionTable,
              t: int) -> Tuple[frozenset, frozenset]:
    """(predicted active, unpredicted active) at time t; a disjoint cover of V_t."""
    vt = stream.active_set(t)
    vhat = pred.predicted_set(t)
    v1 = vt & vhat
    return v1, vt - v1


@dataclass
class GeneratedInstance:
    stream: UpdateStream
    pred: PredictionTable
    eta: int
    corrupted: Tuple[int, ...]
    phantoms: Tuple[int, ...]


def _jittered(rng: random.Random, tp: int, tm: int, jitter: int) -> Tuple[int, int]:
    # one-sided: insertions predicted late, deletions early; falling back to
    # exact when the jittered interval would invert keeps the overlap bound
    tp_hat = tp + rng.randint(0, jitter)
    tm_hat = tm - rng.randint(0, jitter)
    if tm_hat < tp_hat:
        return tp, tm
    return tp_hat, tm_hat


def gen_instance(universe_size: int, n: int, w: int, corrupt: int,
                 jitter: int, seed: int, mean_lifetime: int | None = None,
                 phantoms: int = 0) -> GeneratedInstance:
    """Random well-formed stream plus predictions with exactly the requested
    number of mispredicted elements.

    Lifetimes are geometric with the given mean (default n // 4, minimum 1);
    elements whose lifetime extends past the stream end are never deleted.
    Corruption modes rotate over time-shift, swap, and omission; phantoms
    are extra predicted-only elements, each also counting one misprediction.
    """
    if universe_size < 1 or n < 1:
        raise StreamError("universe size and stream length must be positive")
    if n > 2 * universe_size:
        raise StreamError(
            f"stream length {n} exceeds 2x universe {universe_size}: every "
            "element yields at most one insertion and one deletion")
    if jitter > w:
        raise StreamError(f"jitter {jitter} exceeds tolerance w={w}")
    if phantoms and n - w < 1:
        raise StreamError("phantom predictions need n - w >= 1 to be violations")
    rng = random.Random(seed)
    mean_lifetime = max(1, mean_lifetime if mean_lifetime is not None else n // 4)
    p_del = 1.0 / mean_lifetime

    ids = list(range(universe_size))
    rng.shuffle(ids)
    fresh = iter(ids)
    due: List[Tuple[int, int, int]] = []  # (due time, seq, elem)
    seq = 0
    active = set()
    events = []
    used = 0
    for t in range(1, n + 1):
        deletable = due and due[0][0] <= t
        if deletable or used >= universe_size:
            # fresh ids exhausted: force the earliest-scheduled deletion
            _, _, elem = heapq.heappop(due)
            active.remove(elem)
            events.append(UpdateEvent(t, DEL, elem))
        else:
            elem = next(fresh)
            used += 1
            active.add(elem)
            events.append(UpdateEvent(t, INS, elem))
            life = 1 + int(rng.expovariate(p_del))
            heapq.heappush(due, (t + life, seq, elem))
            seq += 1
    stream = UpdateStream(events)

    elems = sorted(stream.elements)
    if corrupt > len(elems):
        raise StreamError(
            f"corrupt count {corrupt} exceeds {len(elems)} stream elements")
    if phantoms > universe_size - len(elems):
        raise StreamError("not enough spare universe ids for phantom predictions")

    times: Dict[int, Tuple[int, int]] = {}
    for a in elems:
        times[a] = _jittered(rng, stream.insertion_time(a),
                             stream.deletion_time(a), jitter)

    corrupted = tuple(sorted(rng.sample(elems, corrupt)))
    modes = ("shift", "swap", "omit")
    for idx, a in enumerate(corrupted):
        mode = modes[idx % len(modes)]
        tp, tm = stream.insertion_time(a), stream.deletion_time(a)
        tp_hat, tm_hat = times[a]
        if mode == "swap" and len(elems) > 1:
            other = rng.choice([b for b in elems if b != a])
            tp_hat = stream.insertion_time(other)
            tm_hat = max(stream.deletion_time(other), tp_hat)
        elif mode == "omit":
            tp_hat = n + w + 1
            tm_hat = tp_hat + rng.randint(0, mean_lifetime)
        if abs(tp_hat - tp) <= w and abs(tm_hat - tm) <= w:
            # swap landed inside the window; fall back to a guaranteed shift
            mode = "shift"
        if mode == "shift":
            shift = rng.randint(w + 1, 4 * w + 4)
            tp_hat = tp + shift if rng.random() < 0.5 or tp - shift < 1 else tp - shift
            tm_hat = max(tm + rng.randint(-jitter, jitter), tp_hat)
        times[a] = (tp_hat, tm_hat)

    spare = [i for i in ids if i not in stream.elements]
    phantom_ids = tuple(sorted(spare[:phantoms]))
    for a in phantom_ids:
        tp_hat = rng.randint(1, n - w)  # guarantees |tp_hat - (n+1)| > w
        times[a] = (tp_hat, tp_hat + rng.randint(0, mean_lifetime))

    pred = PredictionTable(times, w)
    eta = prediction_error(stream, pred)
    expected = corrupt + len(phantom_ids)
    if eta != expected:
        raise StreamError(
            f"generator accounting bug: eta={eta}, expected {expected}")
    return GeneratedInstance(stream, pred, eta, corrupted, phantom_ids)


def save_stream(stream: UpdateStream, path: str) -> None:
    with open(path, "w") as fh:
        for ev in stream.events:
            fh.write(json.dumps({"t": ev.t, "op": ev.op, "elem": ev.elem}) + "\n")


def load_stream(path: str) -> UpdateStream:
    events = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                row = json.loads(line)
                events.append(UpdateEvent(int(row["t"]), row["op"], int(row["elem"])))
    return UpdateStream(events)


def save_predictions(pred: PredictionTable, path: str) -> None:
    with open(path, "w") as fh:
        for a in sorted(pred.times):
            tp, tm = pred.times[a]
            fh.write(json.dumps({"elem": a, "t_ins_hat": tp, "t_del_hat": tm}) + "\n")


def load_predictions(path: str, w: int) -> PredictionTable:
    times = {}
    with open(path) as fh:
        for line in fh:
            if line.strip():
                row = json.loads(line)
                times[int(row["elem"])] = (int(row["t_ins_hat"]), int(row["t_del_hat"]))
    return PredictionTable(times, w)
