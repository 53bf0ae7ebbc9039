"""Partition-matroid algorithm.

Parts with capacity r_i are first split at random into r_i unit-capacity
sub-parts. Checkpoints are T_0 = 1/2 and T_i = 1/2 + i/(2 log log n); the
level count in interval i is lambda_i = ceil((log2 n)^(1/i)).
"""

from __future__ import annotations

import logging
import math

from byzantine_secretary.matroids._oracles import PartitionStructure, loglog, root_log
from byzantine_secretary.model._execution import OnlinePolicy

logger = logging.getLogger("byzantine_secretary.matroids")

JUMP_SELECT_PROB = 1 / 100
PARTITION_ARMS = ("random", "levels", "jump")


def level_floors(v_prev: float, lam: int) -> list[float]:
    """Floors v_prev * lam / 2^j for j in [1..4 lam]."""
    return [math.ldexp(v_prev * lam, -j) for j in range(1, 4 * lam + 1)]


class PartitionPolicy(OnlinePolicy):
    name = "partition"

    def __init__(self, structure: PartitionStructure, n: int):
        super().__init__()
        self.structure = structure
        self.n = n
        self.depth = loglog(n)
        self.checkpoints = [0.5] + [0.5 + i / (2 * self.depth) for i in range(1, self.depth + 1)]
        self.lambdas = {i: root_log(n, i) for i in range(1, self.depth + 1)}
        self._part_of: dict[str, str] = {}
        self._origin: dict[str, str] = {}
        self._plan: dict[str, tuple[int, int]] = {}
        self._interval_max: dict[tuple[str, int], float] = {}
        self._done_parts: set[str] = set()
        self._v0 = -math.inf
        self._k = 0
        self._seen = 0

    def interval_of(self, t: float) -> int:
        for i, T in enumerate(self.checkpoints):
            if t <= T:
                return i
        return self.depth + 1

    def on_start(self):
        refined, origin = self.structure.refine(self.rng)
        self._part_of = refined.part_of
        self._origin = origin
        self._interval_max = {}
        self._done_parts = set()
        self._v0 = -math.inf
        self._seen = 0
        self.arm = PARTITION_ARMS[int(self.rng.integers(len(PARTITION_ARMS)))]
        self._plan = {}
        if self.arm == "random":
            self._k = int(self.rng.integers(1, self.n + 1))
        for part in sorted(refined.parts):
            i = int(self.rng.integers(1, self.depth + 1))
            j = int(self.rng.integers(1, 4 * self.lambdas[i] + 1))
            self._plan[part] = (i, j)
        self.audit = {"refined_parts": len(refined.parts), "plan": dict(self._plan)}

    def _levels_decision(self, part: str, where: int, value: float) -> bool:
        i, j = self._plan[part]
        if where < i:
            return False
        # v_0 is the max over every arrival in I_0; later v_i are per part
        v_prev = self._v0 if i == 1 else self._interval_max.get((part, i - 1), -math.inf)
        if v_prev == -math.inf:
            return False
        return value >= math.ldexp(v_prev * self.lambdas[i], -j)

    def _jump_decision(self, part: str, where: int, value: float) -> bool:
        i, _ = self._plan[part]
        if where != i:
            return False
        running = self._interval_max.get((part, i))
        if running is None or value <= math.ldexp(running, self.lambdas[i]):
            return False
        return self.rng.random() < JUMP_SELECT_PROB

    def decide(self, arrival):
        self._seen += 1
        part = self._part_of.get(arrival.id)
        where = self.interval_of(arrival.time)
        chosen = False
        if self.arm == "random":
            chosen = self._seen == self._k
        elif part is not None and part not in self._done_parts:
            if self.arm == "levels":
                chosen = self._levels_decision(part, where, arrival.value)
            else:
                chosen = self._jump_decision(part, where, arrival.value)
        if where == 0:
            self._v0 = max(self._v0, arrival.value)
        if part is not None:
            key = (part, where)
            self._interval_max[key] = max(self._interval_max.get(key, -math.inf), arrival.value)
            if chosen:
                self._done_parts.add(part)
        return chosen


def partition_policy(structure: PartitionStructure, n: int) -> PartitionPolicy:
    return PartitionPolicy(structure, n)
