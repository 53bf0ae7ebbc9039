"""Offline oracles for the leave-one-out benchmark.

V* is the value of the best feasible set of greens once the top green
(g_max) is removed. Single-item, uniform and partition benchmarks are
greedy; general matroids use greedy through an independence oracle; the
knapsack benchmark is an exact 0/1 knapsack solved by branch-and-bound.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import pybnb

from byzantine_secretary._errors import ConfigError, OracleFailure
from byzantine_secretary.model._instances import Element, PureInstance

logger = logging.getLogger("byzantine_secretary.model")

EXACT_KNAPSACK_ITEMS = 30
DEFAULT_NODE_LIMIT = 200_000

BENCHMARK_KINDS = ("single_item", "uniform", "knapsack", "partition", "general_matroid")


@dataclass(frozen=True, eq=False)
class BenchmarkSpec:
    kind: str
    r: int | None = None
    K: float | None = None
    parts: Mapping[str, Sequence[str]] | None = None
    capacities: Mapping[str, int] | None = None
    oracle: object | None = None
    node_limit: int = DEFAULT_NODE_LIMIT

    def __post_init__(self):
        if self.kind not in BENCHMARK_KINDS:
            raise ConfigError(f"unknown benchmark kind {self.kind!r}; expected one of {', '.join(BENCHMARK_KINDS)}")
        if self.kind == "uniform" and (self.r is None or self.r < 1):
            raise ConfigError(f"uniform benchmark needs r >= 1, got {self.r}")
        if self.kind == "knapsack" and (self.K is None or not self.K > 0):
            raise ConfigError(f"knapsack benchmark needs K > 0, got {self.K}")
        if self.kind == "general_matroid" and self.oracle is None:
            raise ConfigError("general_matroid benchmark needs an independence oracle")

    @classmethod
    def single_item(cls) -> BenchmarkSpec:
        return cls("single_item")

    @classmethod
    def uniform(cls, r: int) -> BenchmarkSpec:
        return cls("uniform", r=r)

    @classmethod
    def knapsack(cls, K: float, *, node_limit: int = DEFAULT_NODE_LIMIT) -> BenchmarkSpec:
        return cls("knapsack", K=K, node_limit=node_limit)

    @classmethod
    def partition(cls, parts=None, capacities=None) -> BenchmarkSpec:
        return cls("partition", parts=parts, capacities=capacities)

    @classmethod
    def general_matroid(cls, oracle) -> BenchmarkSpec:
        return cls("general_matroid", oracle=oracle)


@dataclass(frozen=True)
class BenchmarkResult:
    kind: str
    value: float
    members: tuple[str, ...]
    exact: bool = True

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, "members": list(self.members), "exact": self.exact}


def benchmark_candidates(inst: PureInstance) -> list[Element]:
    """Greens excluding g_max, in non-increasing value order."""
    return list(inst.greens[1:])


def compute_benchmark(inst: PureInstance, spec: BenchmarkSpec | str = "single_item") -> BenchmarkResult:
    if isinstance(spec, str):
        spec = BenchmarkSpec(spec)
    candidates = benchmark_candidates(inst)

    if spec.kind == "single_item":
        members = candidates[:1]
        return BenchmarkResult(spec.kind, sum(e.value for e in members), tuple(e.id for e in members))

    if spec.kind == "uniform":
        members = candidates[: spec.r]
        return BenchmarkResult(spec.kind, sum(e.value for e in members), tuple(e.id for e in members))

    if spec.kind == "partition":
        parts = spec.parts if spec.parts is not None else inst.parts
        capacities = spec.capacities if spec.capacities is not None else inst.capacities
        if parts is None or capacities is None:
            raise ConfigError("partition benchmark needs parts and capacities (from the benchmark settings or the instance)")
        part_of = {eid: p for p, ids in parts.items() for eid in ids}
        taken: dict[str, int] = {}
        members = []
        for e in candidates:
            part = part_of.get(e.id)
            if part is None:
                continue
            if taken.get(part, 0) < int(capacities[part]):
                taken[part] = taken.get(part, 0) + 1
                members.append(e)
        return BenchmarkResult(spec.kind, sum(e.value for e in members), tuple(e.id for e in members))

    if spec.kind == "general_matroid":
        chosen: list[str] = []
        value = 0.0
        for e in candidates:
            if spec.oracle.is_independent(frozenset(chosen + [e.id])):
                chosen.append(e.id)
                value += e.value
        return BenchmarkResult(spec.kind, value, tuple(chosen))

    return _knapsack_benchmark(candidates, float(spec.K), spec.node_limit)


# ============================================================
# Knapsack branch-and-bound
# ============================================================


class _LeaveOneOutKnapsack(pybnb.Problem):
    """0/1 knapsack over a fixed item list, best-density-first with a fractional bound."""

    def __init__(self, capacity: float, values: Sequence[float], sizes: Sequence[float]):
        self._capacity = capacity
        order = sorted(range(len(values)), key=lambda i: values[i] / sizes[i], reverse=True)
        self._order = order
        self._values = [values[i] for i in order]
        self._sizes = [sizes[i] for i in order]
        self._m = len(order)
        self._size = 0.0
        self._value = 0.0
        self._level = 0
        self._chosen: tuple[int, ...] = ()

    def sense(self):
        return pybnb.maximize

    def objective(self):
        return self._value

    def bound(self):
        size, bound = self._size, self._value
        for k in range(self._level, self._m):
            if size + self._sizes[k] > self._capacity:
                return bound + (self._capacity - size) * self._values[k] / self._sizes[k]
            size += self._sizes[k]
            bound += self._values[k]
        return bound

    def save_state(self, node):
        node.state = (self._size, self._value, self._level, self._chosen)

    def load_state(self, node):
        self._size, self._value, self._level, self._chosen = node.state

    def branch(self):
        for k in range(self._level, self._m):
            child_size = self._size + self._sizes[k]
            if child_size <= self._capacity + 1e-12:
                child = pybnb.Node()
                child.objective = self._value + self._values[k]
                child.state = (child_size, child.objective, k + 1, self._chosen + (k,))
                yield child

    def original_indices(self, chosen: Sequence[int]) -> list[int]:
        return [self._order[k] for k in chosen]


def _knapsack_benchmark(candidates: list[Element], K: float, node_limit: int) -> BenchmarkResult:
    if not candidates:
        return BenchmarkResult("knapsack", 0.0, ())
    problem = _LeaveOneOutKnapsack(K, [e.value for e in candidates], [e.size for e in candidates])
    limit = None if len(candidates) <= EXACT_KNAPSACK_ITEMS else node_limit
    results = pybnb.solve(
        problem,
        comm=None,
        log=None,
        queue_strategy="depth",
        absolute_gap=1e-9,
        relative_gap=0.0,
        node_limit=limit,
    )
    status = str(getattr(results.solution_status, "value", results.solution_status))
    if results.best_node is None:
        raise OracleFailure(f"knapsack oracle found no incumbent (status={status})")
    exact = status == "optimal"
    if not exact:
        logger.warning("knapsack oracle stopped at %s after %d nodes; V* is a lower bound", status, results.nodes)
    chosen = problem.original_indices(results.best_node.state[3])
    members = tuple(candidates[i].id for i in sorted(chosen))
    value = sum(candidates[i].value for i in chosen)
    return BenchmarkResult("knapsack", value, members, exact=exact)
