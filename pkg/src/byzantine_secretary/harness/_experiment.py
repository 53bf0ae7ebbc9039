"""Seeded Monte Carlo experiments.

Trial i draws its stream from seed words (seed, i, 0), its policy
randomness from (seed, i, 1) and, when a family is resampled per trial,
its instance from (seed, i, 2). Any trial can therefore be replayed alone,
and serial and parallel runs produce identical reports.
"""

from __future__ import annotations

import concurrent.futures
import json
import logging
import math
import os
import time
from collections.abc import Mapping
from concurrent.futures.process import BrokenProcessPool
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from byzantine_secretary._errors import ConfigError
from byzantine_secretary.adversaries._families import FamilySpec, generate
from byzantine_secretary.harness._algorithms import PAYOFFS, AlgorithmContext, resolve_algorithm
from byzantine_secretary.harness._stats import Summary, TrialOutcome, summarize, wilson_interval
from byzantine_secretary.model._execution import PolicyTrace, run_policy
from byzantine_secretary.model._instances import MixedInstance, PureInstance, RealizedStream, load_instance, make_rng, realize_stream
from byzantine_secretary.model._oracle import compute_benchmark
from byzantine_secretary.multi_select._knapsack import audit_budget_conservation, audit_never_skip_heavy
from byzantine_secretary.single_item._two_blue import TwoBlueMixed, is_two_blue_dict, two_blue_from_dict

logger = logging.getLogger("byzantine_secretary.harness")

STREAM, POLICY, FAMILY, STATE_PICK = 0, 1, 2, 3


# ============================================================
# Configuration
# ============================================================


@dataclass
class ExperimentConfig:
    algo: str
    trials: int = 1000
    seed: int = 0
    instance: str | None = None
    family: str | None = None
    n: int | None = None
    family_params: dict = field(default_factory=dict)
    resample: bool = False
    payoff: str | None = None
    discretize: bool = False
    params: dict = field(default_factory=dict)
    workers: int | None = None
    label: str | None = None
    audit: bool = False

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        self.trials = int(self.trials)
        if (self.instance is None) == (self.family is None):
            raise ConfigError("give exactly one of instance or family")
        if self.family is not None and not self.n:
            raise ConfigError("family experiments need n")
        if self.resample and self.family is None:
            raise ConfigError("resample applies to family experiments only")
        if self.payoff is not None and self.payoff not in PAYOFFS:
            raise ConfigError(f"unknown payoff {self.payoff!r}; expected one of {', '.join(PAYOFFS)}")
        resolve_algorithm(self.algo)

    @classmethod
    def from_dict(cls, data: Mapping) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown experiment keys: {', '.join(unknown)}")
        if "algo" not in data:
            raise ConfigError("experiment config needs 'algo'")
        return cls(**dict(data))

    @classmethod
    def from_json(cls, path: str) -> ExperimentConfig:
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError(f"malformed experiment config {path}: {e}") from e
        return cls.from_dict(data)

    @property
    def family_label(self) -> str:
        if self.label:
            return self.label
        if self.family:
            return self.family
        return os.path.splitext(os.path.basename(self.instance))[0]


def load_source(path: str) -> PureInstance | MixedInstance | TwoBlueMixed:
    """Read a pure, mixed or two-blue instance JSON file."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if is_two_blue_dict(data):
        return two_blue_from_dict(data)
    return load_instance(path)


def resolve_workers(config: ExperimentConfig) -> int:
    if config.workers is not None:
        return max(1, int(config.workers))
    raw = os.environ.get("BSEC_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError as e:
        raise ConfigError(f"BSEC_WORKERS must be an integer, got {raw!r}") from e


# ============================================================
# Trial plan
# ============================================================


def stratified_counts(weights, trials: int) -> list[int]:
    """Trials per state proportional to weight (largest remainder), at least one each."""
    weights = np.asarray(weights, dtype=float)
    raw = weights * trials
    counts = np.floor(raw).astype(int)
    short = trials - int(counts.sum())
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    counts = np.maximum(counts, 1)
    return [int(c) for c in counts]


def _state_weights(source) -> list[float]:
    if isinstance(source, MixedInstance):
        return [w for w, _ in source.states]
    if isinstance(source, TwoBlueMixed):
        return [s.weight for s in source.states]
    return [1.0]


def trial_plan(config: ExperimentConfig, source) -> list[tuple[int, int]]:
    """(trial index, state index) pairs; the state is 0 for pure and resampled sources."""
    if config.resample:
        return [(i, 0) for i in range(config.trials)]
    plan = []
    index = 0
    for state, count in enumerate(stratified_counts(_state_weights(source), config.trials)):
        for _ in range(count):
            plan.append((index, state))
            index += 1
    return plan


# ============================================================
# One trial
# ============================================================


def _green_values(stream: RealizedStream) -> list[float]:
    values = {a.id: a.value for a in stream.arrivals}
    return sorted((values[g] for g in stream.green_ids()), reverse=True)


def _audit_failed(trace: PolicyTrace) -> bool:
    ledger = trace.audit.get("ledger") if trace.audit else None
    if ledger is None and trace.audit and isinstance(trace.audit.get("core"), Mapping):
        ledger = trace.audit["core"].get("ledger")
    if ledger is None:
        return False
    return bool(audit_budget_conservation(ledger) or audit_never_skip_heavy(ledger))


def score(trace: PolicyTrace, stream: RealizedStream, payoff: str, benchmark: float | None) -> tuple[float, float]:
    """(success, value) of one trace under ``payoff``; a grid collision scores as a loss."""
    if stream.grid_collision:
        return 0.0, 0.0
    value = trace.total_value
    if payoff == "select_max":
        values = {a.id: a.value for a in stream.arrivals}
        gmax = max(stream.green_ids(), key=values.__getitem__)
        return float(gmax in trace.selected_ids), value
    greens = _green_values(stream)
    if payoff == "ordinal_success":
        threshold = greens[1] if len(greens) > 1 else greens[0]
        return float(any(a.value >= threshold for a in trace.selected)), value
    if benchmark is None:
        raise ConfigError("value_ratio needs a benchmark; this source has none")
    return float(value >= benchmark * (1 - 1e-12)), value


class _Worker:
    """Per-process trial runner: resolves the algorithm and caches benchmarks per state."""

    def __init__(self, config: ExperimentConfig, source):
        self.config = config
        self.source = source
        self.algorithm = resolve_algorithm(config.algo)
        self.payoff = config.payoff or self.algorithm.payoff
        self.ctx = AlgorithmContext(n=source.n, params=dict(config.params), source=source)
        self._benchmarks: dict[int, float | None] = {}

    def _benchmark(self, ctx: AlgorithmContext, inst: PureInstance | None, key: int | None) -> float | None:
        if inst is None:
            return None
        if key is not None and key in self._benchmarks:
            return self._benchmarks[key]
        spec = self.algorithm.benchmark(replace_source(ctx, inst))
        value = None if spec is None else compute_benchmark(inst, spec).value
        if key is not None:
            self._benchmarks[key] = value
        return value

    def run(self, index: int, state: int) -> TrialOutcome:
        seed = (self.config.seed, index)
        ctx = self.ctx
        key: int | None = state
        if self.config.resample:
            drawn = generate(FamilySpec(self.config.family, self.config.n, self.config.family_params, (*seed, FAMILY)))
            if isinstance(drawn, TwoBlueMixed):
                raise ConfigError("two-blue families are fixed mixed instances; run them without resample")
            if isinstance(drawn, MixedInstance):
                pick = int(make_rng(seed, STATE_PICK).choice(len(drawn.states), p=drawn.weights))
                drawn = drawn.states[pick][1]
            ctx = AlgorithmContext(n=drawn.n, params=ctx.params, source=drawn)
            inst, key = drawn, None
        elif isinstance(self.source, MixedInstance):
            inst = self.source.states[state][1]
        elif isinstance(self.source, PureInstance):
            inst = self.source
        else:
            inst = None

        if isinstance(ctx.source, TwoBlueMixed):
            stream = ctx.source.realize(state, make_rng(seed, STREAM))
        else:
            stream = realize_stream(inst, (*seed, STREAM), discretize=self.config.discretize)
        policy = self.algorithm.policy(ctx)
        feasibility = self.algorithm.feasibility(ctx)
        trace = run_policy(stream, policy, feasibility, rng=make_rng(seed, POLICY))
        benchmark = self._benchmark(ctx, inst, key)
        success, value = score(trace, stream, self.payoff, benchmark)
        return TrialOutcome(
            index=index,
            success=success,
            value=value,
            benchmark=benchmark or 0.0,
            arm=trace.arm,
            collision=stream.grid_collision,
            violated=bool(trace.violations),
            audit_failed=self.config.audit and _audit_failed(trace),
        )


def replace_source(ctx: AlgorithmContext, inst: PureInstance) -> AlgorithmContext:
    if ctx.source is inst:
        return ctx
    return AlgorithmContext(n=ctx.n, params=ctx.params, source=inst, cache=ctx.cache)


def _run_chunk(config: ExperimentConfig, source, chunk: list[tuple[int, int]]) -> list[tuple[int, TrialOutcome]]:
    worker = _Worker(config, source)
    return [(state, worker.run(index, state)) for index, state in chunk]


# ============================================================
# Report
# ============================================================


@dataclass
class ExperimentReport:
    algo: str
    family: str
    n: int
    K: float | None
    trials: int
    seed: int
    payoff: str
    success_rate: float
    ci_low: float
    ci_high: float
    mean_value: float
    value_stderr: float
    ratio: float
    benchmark: float
    wall_ms: float
    collisions: int = 0
    violations: int = 0
    audit_failures: int = 0
    per_arm: dict = field(default_factory=dict)
    per_state: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _combine(per_state: list[tuple[float, Summary]]) -> tuple[float, float, float, float, float]:
    """Weighted success, mean value, value stderr, benchmark and ratio over strata."""
    total_w = math.fsum(w for w, s in per_state if s.trials)
    success = math.fsum(w * s.success_rate for w, s in per_state if s.trials) / total_w
    mean_value = math.fsum(w * s.mean_value for w, s in per_state if s.trials) / total_w
    stderr = math.sqrt(math.fsum((w / total_w) ** 2 * s.value_stderr**2 for w, s in per_state if s.trials))
    bench = math.fsum(w * s.benchmark for w, s in per_state if s.trials) / total_w
    ratio = mean_value / bench if bench > 0 else 0.0
    return success, mean_value, stderr, bench, ratio


def _per_arm(outcomes: list[TrialOutcome]) -> dict:
    groups: dict[str, list[TrialOutcome]] = {}
    for o in outcomes:
        label = (o.arm or "-").split("/", 1)[0]
        groups.setdefault(label, []).append(o)
    out = {}
    for label in sorted(groups):
        s = summarize(groups[label])
        out[label] = {"trials": s.trials, "success_rate": s.success_rate, "mean_value": s.mean_value}
    return out


def _source_for(config: ExperimentConfig):
    if config.instance is not None:
        return load_source(config.instance)
    spec = FamilySpec(config.family, config.n, config.family_params, (config.seed, FAMILY))
    if config.resample:
        return generate(spec.with_seed((config.seed, 0, FAMILY)))
    return generate(spec)


def _execute(config: ExperimentConfig, source, plan, workers: int) -> list[tuple[int, TrialOutcome]]:
    if workers <= 1 or len(plan) < 2:
        return _run_chunk(config, source, plan)
    size = math.ceil(len(plan) / (4 * workers))
    chunks = [plan[k : k + size] for k in range(0, len(plan), size)]
    try:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_run_chunk, config, source, chunk) for chunk in chunks]
            results = []
            for future in futures:
                results.extend(future.result())
        return results
    except (BrokenProcessPool, OSError) as e:
        logger.warning("parallel execution failed (%s); falling back to serial", e)
        return _run_chunk(config, source, plan)


def run_experiment(config: ExperimentConfig, source=None) -> ExperimentReport:
    """Run ``config.trials`` seeded trials and aggregate them into a report."""
    started = time.perf_counter()
    source = source if source is not None else _source_for(config)
    algorithm = resolve_algorithm(config.algo)
    payoff = config.payoff or algorithm.payoff
    plan = trial_plan(config, source)
    workers = resolve_workers(config)
    logger.info("running %s: %d trials on %d worker(s)", config.algo, len(plan), workers)

    results = _execute(config, source, plan, workers)
    results.sort(key=lambda item: item[1].index)
    outcomes = [o for _, o in results]

    weights = [1.0] if config.resample else _state_weights(source)
    by_state: dict[int, list[TrialOutcome]] = {}
    for state, o in results:
        by_state.setdefault(state, []).append(o)
    summaries = [(weights[k], summarize(by_state.get(k, []))) for k in range(len(weights))]
    success, mean_value, stderr, bench, ratio = _combine(summaries)
    overall = summarize(outcomes)
    ci_low, ci_high = wilson_interval(success * len(outcomes), len(outcomes))

    K = config.params.get("K")
    if K is None and isinstance(source, PureInstance):
        K = source.meta.get("K")
    wall_ms = (time.perf_counter() - started) * 1000.0
    report = ExperimentReport(
        algo=config.algo,
        family=config.family_label,
        n=source.n,
        K=None if K is None else float(K),
        trials=len(outcomes),
        seed=config.seed,
        payoff=payoff,
        success_rate=success,
        ci_low=ci_low,
        ci_high=ci_high,
        mean_value=mean_value,
        value_stderr=stderr,
        ratio=ratio,
        benchmark=bench,
        wall_ms=wall_ms,
        collisions=overall.collisions,
        violations=overall.violations,
        audit_failures=overall.audit_failures,
        per_arm=_per_arm(outcomes),
        per_state=[
            {"weight": w, "trials": s.trials, "success_rate": s.success_rate, "mean_value": s.mean_value, "benchmark": s.benchmark}
            for w, s in summaries
        ]
        if len(summaries) > 1
        else [],
    )
    if overall.collisions:
        logger.debug("%d trials lost to grid collisions", overall.collisions)
    logger.info("%s: success %.4f [%.4f, %.4f], ratio %.4f", config.algo, success, ci_low, ci_high, ratio)
    return report
