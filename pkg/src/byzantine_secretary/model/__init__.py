"""Core model: instances, realized streams, benchmarks and the policy execution contract.

Instances are immutable and safe to share across trial workers; a stream,
a policy and its trace belong to a single trial.
"""

from __future__ import annotations

from byzantine_secretary._response import from_exception, success
from byzantine_secretary.model._execution import (
    ArmMixture,
    ConsistencyGuard,
    Decision,
    Feasibility,
    KnapsackCapacity,
    MatroidFeasibility,
    OnlinePolicy,
    ParallelUnion,
    PartitionCapacity,
    PolicyTrace,
    SelectFirst,
    SingleItem,
    SkipAll,
    Unconstrained,
    UniformCapacity,
    run_policy,
)
from byzantine_secretary.model._instances import (
    Arrival,
    Color,
    Element,
    MixedInstance,
    PureInstance,
    RealizedStream,
    dump_instance,
    grid_size,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    make_rng,
    mixed_from_dict,
    mixed_to_dict,
    seed_words,
)
from byzantine_secretary.model._instances import discretize_time as _discretize_time
from byzantine_secretary.model._instances import realize_stream as _realize_stream
from byzantine_secretary.model._oracle import BenchmarkResult, BenchmarkSpec, benchmark_candidates
from byzantine_secretary.model._oracle import compute_benchmark as _compute_benchmark

__all__ = [
    "ArmMixture",
    "Arrival",
    "BenchmarkResult",
    "BenchmarkSpec",
    "Color",
    "ConsistencyGuard",
    "Decision",
    "Element",
    "Feasibility",
    "KnapsackCapacity",
    "MatroidFeasibility",
    "MixedInstance",
    "OnlinePolicy",
    "ParallelUnion",
    "PartitionCapacity",
    "PolicyTrace",
    "PureInstance",
    "RealizedStream",
    "SelectFirst",
    "SingleItem",
    "SkipAll",
    "Unconstrained",
    "UniformCapacity",
    "benchmark_candidates",
    "compute_benchmark",
    "discretize_time",
    "dump_instance",
    "grid_size",
    "instance_from_dict",
    "instance_to_dict",
    "load_instance",
    "make_rng",
    "mixed_from_dict",
    "mixed_to_dict",
    "realize_stream",
    "run_policy",
    "seed_words",
    "validate_instance",
]


def _benchmark_spec(kind: str, r: int | None, K: float | None) -> BenchmarkSpec:
    if kind == "uniform":
        return BenchmarkSpec.uniform(r)
    if kind == "knapsack":
        return BenchmarkSpec.knapsack(K)
    if kind == "general_matroid":
        from byzantine_secretary.matroids import UniformMatroidOracle

        return BenchmarkSpec.general_matroid(UniformMatroidOracle(r or 1))
    return BenchmarkSpec(kind)


# ============================================================
# Commands
# ============================================================


def validate_instance(*, instance: str) -> dict:
    """Load an instance JSON file and check every model invariant."""
    try:
        obj = load_instance(instance)
    except Exception as e:
        return from_exception(e)
    if isinstance(obj, MixedInstance):
        return success(
            {"kind": "mixed", "n": obj.n, "states": len(obj.states)},
            f"Valid mixed instance: {len(obj.states)} states, n={obj.n}",
        )
    return success(
        {"kind": "pure", "n": obj.n, "greens": len(obj.greens), "reds": len(obj.reds)},
        f"Valid pure instance: n={obj.n}",
    )


def compute_benchmark(*, instance: str, kind: str = "single_item", r: int | None = None, K: float | None = None) -> dict:
    """Leave-one-out benchmark V* for a pure instance, or per state for a mixed one."""
    try:
        obj = load_instance(instance)
        spec = _benchmark_spec(kind, r, K)
        if isinstance(obj, MixedInstance):
            states = [
                {"weight": w, **_compute_benchmark(inst, spec).to_dict()} for w, inst in obj.states
            ]
            expected = sum(s["weight"] * s["value"] for s in states)
            return success(
                {"kind": kind, "states": states, "expected_value": expected},
                f"Benchmark per state ({len(states)} states)",
            )
        result = _compute_benchmark(obj, spec)
    except Exception as e:
        return from_exception(e)
    return success(result.to_dict(), f"V* = {result.value:g} ({'exact' if result.exact else 'lower bound'})")


def discretize_time(*, t: float, n: int) -> dict:
    """Snap an arrival time to the n^3 grid."""
    return success({"t": t, "n": n, "grid_time": _discretize_time(t, n), "N": grid_size(n)})


def realize_stream(*, instance: str, seed: int = 0, discretize: bool = False) -> dict:
    """Draw one trial's arrival sequence for a pure instance (colors omitted)."""
    try:
        obj = load_instance(instance)
        if isinstance(obj, MixedInstance):
            return from_exception(ValueError("realize_stream needs a pure instance"))
        stream = _realize_stream(obj, seed, discretize=discretize)
    except Exception as e:
        return from_exception(e)
    arrivals = [a._asdict() for a in stream.arrivals]
    return success(
        {"arrivals": arrivals, "grid_collision": stream.grid_collision},
        f"{len(arrivals)} arrivals",
    )
