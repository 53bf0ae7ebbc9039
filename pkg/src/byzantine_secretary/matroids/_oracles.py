"""Independence oracles and partition structures."""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from byzantine_secretary._errors import ConfigError, InstanceValidationError
from byzantine_secretary.model._instances import PureInstance


class IndependenceOracle:
    """Contract: ``is_independent(ids)`` on frozensets of element ids, plus the rank r."""

    rank: int = 0

    def is_independent(self, ids: frozenset) -> bool:
        raise NotImplementedError

    def __call__(self, ids: Iterable[str]) -> bool:
        return self.is_independent(frozenset(ids))


class UniformMatroidOracle(IndependenceOracle):
    def __init__(self, r: int):
        if r < 1:
            raise ConfigError(f"uniform matroid rank must be >= 1, got {r}")
        self.rank = int(r)

    def is_independent(self, ids):
        return len(ids) <= self.rank

    def __repr__(self):
        return f"UniformMatroidOracle(r={self.rank})"


@dataclass(frozen=True, eq=False)
class PartitionStructure:
    parts: Mapping[str, tuple[str, ...]]
    capacities: Mapping[str, int]

    def __post_init__(self):
        parts = {str(p): tuple(ids) for p, ids in self.parts.items()}
        caps = {str(p): int(c) for p, c in self.capacities.items()}
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "capacities", caps)
        members = [i for ids in parts.values() for i in ids]
        if len(members) != len(set(members)):
            raise InstanceValidationError("parts must be disjoint")
        if set(caps) != set(parts) or any(c < 1 for c in caps.values()):
            raise InstanceValidationError("every part needs a capacity >= 1")

    @classmethod
    def from_instance(cls, inst: PureInstance) -> PartitionStructure:
        if inst.parts is None or inst.capacities is None:
            raise ConfigError("instance carries no partition structure (parts/capacities)")
        return cls(inst.parts, inst.capacities)

    @property
    def part_of(self) -> dict[str, str]:
        return {eid: p for p, ids in self.parts.items() for eid in ids}

    def covers(self, ids: Iterable[str]) -> bool:
        return set(ids) <= set(self.part_of)

    @property
    def rank(self) -> int:
        return sum(min(c, len(self.parts[p])) for p, c in self.capacities.items())

    def refine(self, rng: np.random.Generator) -> tuple[PartitionStructure, dict[str, str]]:
        """Split each part with capacity r_i into r_i random sub-parts of capacity 1.

        Returns the refined structure and the map from sub-part to original part.
        """
        parts: dict[str, tuple[str, ...]] = {}
        origin: dict[str, str] = {}
        for p in sorted(self.parts):
            ids = self.parts[p]
            r = self.capacities[p]
            if r == 1:
                parts[p] = ids
                origin[p] = p
                continue
            labels = rng.integers(0, r, size=len(ids))
            for k in range(r):
                sub = f"{p}#{k}"
                parts[sub] = tuple(eid for eid, lab in zip(ids, labels.tolist()) if lab == k)
                origin[sub] = p
        return PartitionStructure(parts, dict.fromkeys(parts, 1)), origin


class PartitionMatroidOracle(IndependenceOracle):
    def __init__(self, structure: PartitionStructure):
        self.structure = structure
        self._part_of = structure.part_of
        self.rank = structure.rank

    def is_independent(self, ids):
        counts: dict[str, int] = {}
        for eid in ids:
            part = self._part_of.get(eid)
            if part is None:
                return False
            counts[part] = counts.get(part, 0) + 1
            if counts[part] > self.structure.capacities[part]:
                return False
        return True


def spot_check_matroid(oracle: IndependenceOracle, ground: Sequence[str], *, max_ground: int = 10) -> list[str]:
    """Check downward closure and exchange on every subset of a small ground set.

    Returns a list of human-readable problems (empty when the oracle passes).
    """
    ground = list(ground)[:max_ground]
    independent = [
        frozenset(c)
        for k in range(len(ground) + 1)
        for c in itertools.combinations(ground, k)
        if oracle.is_independent(frozenset(c))
    ]
    indep_set = set(independent)
    problems = []
    if frozenset() not in indep_set:
        problems.append("empty set is not independent")
    for s in independent:
        for e in s:
            if s - {e} not in indep_set:
                problems.append(f"not downward closed: {sorted(s)} independent but {sorted(s - {e})} is not")
                break
    for a, b in itertools.product(independent, repeat=2):
        if len(a) < len(b) and not any(a | {e} in indep_set for e in b - a):
            problems.append(f"exchange fails: {sorted(a)} cannot grow from {sorted(b)}")
    return problems


def make_oracle(spec: str, inst: PureInstance | None = None) -> IndependenceOracle:
    """Build an oracle from ``uniform:<r>`` or ``partition`` (the latter reads the instance parts)."""
    kind, _, arg = spec.partition(":")
    if kind == "uniform":
        if not arg:
            raise ConfigError("uniform oracle needs a rank, e.g. uniform:3")
        return UniformMatroidOracle(int(arg))
    if kind == "partition":
        if inst is None:
            raise ConfigError("partition oracle needs an instance with parts")
        return PartitionMatroidOracle(PartitionStructure.from_instance(inst))
    raise ConfigError(f"unknown oracle {spec!r}; expected uniform:<r> or partition")


def loglog(n: int) -> int:
    """max(1, ceil(log2 log2 n))."""
    return max(1, math.ceil(math.log2(max(2.0, math.log2(max(2, n))))))


def root_log(n: int, i: int) -> int:
    """(log2 n)^(1/i), ceiled."""
    return max(1, math.ceil(math.log2(max(2, n)) ** (1.0 / i) - 1e-9))
