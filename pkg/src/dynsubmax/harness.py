"""Experiment orchestration: single runs, parameter sweeps, step records.

A run executes the precompute phase then the streaming phase of one variant
on one instance, emitting a JSONL step log and a summary with amortized
stream queries (total stream queries / n) and per-step value ratios against
a baseline. The baseline is exact enumeration when the subset-count guard
allows and otherwise the lazy-greedy value scaled by 1/(1 - 1/e) as an
upper-bound proxy (flagged, so exact and proxy cells are never mixed up).
Baseline and optimum evaluations never touch the query meters; only the
algorithms under test do.

Sweeps rerun a generated instance family over a grid of one parameter
(eta, w, or k) with replicas per cell and emit a CSV:

    grid_param,value,amortized_stream_queries_mean,stderr,ratio_mean,ratio_min,eta_realized
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .baselines import GuardError, brute_force_opt, lazy_greedy, subset_count
from .oracle import CountingOracle, ValueOracle
from .scheduler import (FrameworkConfig, FrameworkStep, PrecomputationStore,
                        run_framework)
from .stream import GeneratedInstance, PredictionTable, UpdateStream, gen_instance

SCHEMA_VERSION = 1
GREEDY_PROXY_FACTOR = 1 - 1 / math.e


class RatioBaseline:
    """Per-step denominator f*(V_t): exact enumeration when affordable,
    otherwise greedy/(1-1/e). Results are cached by active set, so replaying
    the same stream under different algorithm seeds pays nothing new."""

    def __init__(self, value_fn: Callable[[frozenset], float], k: int,
                 mode: str = "auto", guard: int = 1_000_000):
        if mode not in ("auto", "brute", "greedy"):
            raise ValueError(f"unknown baseline mode {mode!r}")
        self._value = value_fn
        self.k = k
        self.mode = mode
        self.guard = guard
        self._cache: Dict[frozenset, Tuple[float, bool]] = {}

    def value_for(self, active: frozenset) -> Tuple[float, bool]:
        """(baseline value, is_exact) for one active set."""
        got = self._cache.get(active)
        if got is not None:
            return got
        if not active:
            result = (0.0, True)
        elif self.mode == "brute" or (
                self.mode == "auto"
                and subset_count(len(active), self.k) <= self.guard):
            _, opt = brute_force_opt(self._value, active, self.k, self.guard)
            result = (opt, True)
        else:
            _, greedy_val = lazy_greedy(self._value, active, self.k)
            result = (greedy_val / GREEDY_PROXY_FACTOR, False)
        self._cache[active] = result
        return result


@dataclass
class StepRecord:
    t: int
    active_size: int
    value: float
    eta_t: int
    stream_queries: int
    precompute_queries: int
    baseline: Optional[float] = None
    baseline_exact: Optional[bool] = None
    restarted_gammas: int = 0

    def to_json(self) -> dict:
        row = {"t": self.t, "active": self.active_size, "value": self.value,
               "eta": self.eta_t, "stream_q": self.stream_queries,
               "pre_q": self.precompute_queries,
               "restarts": self.restarted_gammas}
        if self.baseline is not None:
            row["baseline"] = self.baseline
            row["baseline_exact"] = self.baseline_exact
        return row


@dataclass
class ExperimentResult:
    summary: dict
    steps: List[StepRecord]
    diagnostics: list = field(default_factory=list)


def run_experiment(oracle: ValueOracle, stream: UpdateStream,
                   pred: Optional[PredictionTable], config: FrameworkConfig,
                   out_dir: Optional[str] = None, ratio_stride: int = 1,
                   opt_mode: str = "auto",
                   baseline: Optional[RatioBaseline] = None,
                   store: Optional[PrecomputationStore] = None,
                   warmup_store=None, keep_diagnostics: bool = False,
                   probe: Optional[Callable] = None) -> ExperimentResult:
    """One full precompute + stream execution with metrics.

    `ratio_stride` thins the (unmetered, but slow) baseline evaluations;
    every stride-th step gets a ratio. Raises on any feasibility violation.
    """
    counting = CountingOracle(oracle)
    if baseline is None and opt_mode != "none":
        baseline = RatioBaseline(oracle.evaluate, config.k, mode=opt_mode)
    steps: List[StepRecord] = []
    diagnostics = []
    ratios: List[float] = []
    proxy_used = False
    eta_final = 0
    for step in run_framework(counting, stream, pred, config, store=store,
                              warmup_store=warmup_store):
        value = oracle.evaluate(step.solution)
        record = StepRecord(
            t=step.t, active_size=len(step.active), value=value,
            eta_t=step.eta_t, stream_queries=step.stream_queries,
            precompute_queries=step.precompute_queries,
            restarted_gammas=sum(1 for row in step.diagnostics.rows if row[3])
            if step.diagnostics else 0)
        if baseline is not None and (step.t - 1) % ratio_stride == 0:
            denom, exact = baseline.value_for(step.active)
            record.baseline = denom
            record.baseline_exact = exact
            proxy_used = proxy_used or (not exact and len(step.active) > 0)
            if denom > 0:
                ratios.append(value / denom)
        eta_final = step.eta_t
        steps.append(record)
        if keep_diagnostics and step.diagnostics is not None:
            diagnostics.append((step.t, step.active, step.diagnostics))
        if probe is not None:
            probe(step)
    report = counting.query_report()
    assert report["precompute_total"] + report["stream_total"] == report["total"]
    n = stream.n
    summary = {
        "schema": SCHEMA_VERSION,
        "variant": config.variant,
        "n": n, "k": config.k, "eps": config.eps, "w": config.w,
        "seed": config.seed,
        "eta": eta_final,
        "stream_queries": report["stream_total"],
        "precompute_queries": report["precompute_total"],
        "amortized_stream_queries": report["stream_total"] / n if n else 0.0,
        "ratio_mean": sum(ratios) / len(ratios) if ratios else None,
        "ratio_min": min(ratios) if ratios else None,
        "ratio_proxy": proxy_used,
        "query_report": report,
    }
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "steps.jsonl"), "w") as fh:
            for record in steps:
                fh.write(json.dumps(record.to_json(), sort_keys=True) + "\n")
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(summary, fh, sort_keys=True, indent=2)
    return ExperimentResult(summary=summary, steps=steps,
                            diagnostics=diagnostics)


@dataclass
class GenSpec:
    """Parameters for the synthetic instance family used by sweeps."""

    universe: int
    n: int
    w: int
    corrupt: int = 0
    jitter: int = 0
    function: str = "coverage"  # coverage | weighted | modular
    n_items: Optional[int] = None
    mean_lifetime: Optional[int] = None
    phantoms: int = 0

    def build(self, seed: int) -> Tuple[ValueOracle, GeneratedInstance]:
        from .oracle import ModularOracle, random_coverage
        import random as _random
        probe = gen_instance(self.universe, self.n, self.w, 0, self.jitter,
                             seed=seed, mean_lifetime=self.mean_lifetime)
        n_elems = len(probe.stream.elements)
        # the corruption target saturates at the realized element count
        gen = gen_instance(self.universe, self.n, self.w,
                           min(self.corrupt, n_elems), self.jitter, seed=seed,
                           mean_lifetime=self.mean_lifetime,
                           phantoms=min(self.phantoms, self.universe - n_elems))
        items = self.n_items or max(2 * self.universe, 8)
        if self.function == "modular":
            rng = _random.Random(seed ^ 0xC0FFEE)
            oracle: ValueOracle = ModularOracle(
                {e: rng.randint(1, 10) for e in range(self.universe)})
        else:
            oracle = random_coverage(self.universe, items, seed ^ 0xC0FFEE,
                                     weighted=(self.function == "weighted"))
        return oracle, gen


SWEEP_HEADER = ("grid_param,value,amortized_stream_queries_mean,stderr,"
                "ratio_mean,ratio_min,eta_realized")


def sweep(spec: GenSpec, config: FrameworkConfig, param: str,
          values: Sequence[float], replicas: int, ratio_stride: int = 1,
          opt_mode: str = "greedy",
          out_csv: Optional[str] = None) -> Tuple[List[dict], str]:
    """Replicated runs over one parameter grid; emits the ratio/query CSV.

    Failures inside a cell are recorded and skipped; the sweep continues.
    """
    if param not in ("eta", "w", "k"):
        raise ValueError(f"unknown sweep parameter {param!r}")
    rows = []
    for value in values:
        amortized: List[float] = []
        cell_ratio_means: List[float] = []
        cell_ratio_mins: List[float] = []
        etas: List[int] = []
        errors = 0
        for rep in range(replicas):
            seed = config.seed + 7_001 * rep
            cell_spec = spec
            cell_config = FrameworkConfig(
                k=config.k, eps=config.eps, w=config.w,
                variant=config.variant, seed=seed,
                known_eta=config.known_eta)
            if param == "eta":
                cell_spec = GenSpec(**{**spec.__dict__, "corrupt": int(value)})
            elif param == "w":
                cell_spec = GenSpec(**{**spec.__dict__, "w": int(value)})
                cell_config.w = int(value)
            else:
                cell_config.k = int(value)
            try:
                oracle, gen = cell_spec.build(seed)
                if cell_config.known_eta is None and cell_config.variant == "warmup":
                    cell_config.known_eta = gen.eta
                result = run_experiment(oracle, gen.stream, gen.pred,
                                        cell_config, ratio_stride=ratio_stride,
                                        opt_mode=opt_mode)
                amortized.append(result.summary["amortized_stream_queries"])
                if result.summary["ratio_mean"] is not None:
                    cell_ratio_means.append(result.summary["ratio_mean"])
                    cell_ratio_mins.append(result.summary["ratio_min"])
                etas.append(gen.eta)
            except Exception as exc:  # noqa: BLE001 - cell isolation
                errors += 1
                import logging
                logging.getLogger(__name__).warning(
                    "sweep cell %s=%s replica %d failed: %s",
                    param, value, rep, exc)
        count = len(amortized)
        mean = sum(amortized) / count if count else float("nan")
        if count > 1:
            var = sum((x - mean) ** 2 for x in amortized) / (count - 1)
            stderr = math.sqrt(var / count)
        else:
            stderr = 0.0
        rows.append({
            "grid_param": param, "value": value,
            "amortized_stream_queries_mean": mean, "stderr": stderr,
            "ratio_mean": (sum(cell_ratio_means) / len(cell_ratio_means)
                           if cell_ratio_means else float("nan")),
            "ratio_min": min(cell_ratio_mins) if cell_ratio_mins else float("nan"),
            "eta_realized": sum(etas) / len(etas) if etas else float("nan"),
            "errors": errors,
        })
    lines = [SWEEP_HEADER]
    for row in rows:
        lines.append(",".join(str(row[col]) for col in SWEEP_HEADER.split(",")))
    csv_text = "\n".join(lines) + "\n"
    if out_csv is not None:
        os.makedirs(os.path.dirname(out_csv) or ".", exist_ok=True)
        with open(out_csv, "w") as fh:
            fh.write(csv_text)
    return rows, csv_text
