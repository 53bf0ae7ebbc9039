"""General-matroid algorithm with exponentially separated value levels."""

from __future__ import annotations

import logging
import math

from byzantine_secretary.matroids._oracles import IndependenceOracle
from byzantine_secretary.model._execution import ConsistencyGuard, OnlinePolicy
from byzantine_secretary.subroutines._policies import RandomElement

logger = logging.getLogger("byzantine_secretary.matroids")


def level_span(n: int, r: int) -> int:
    """Half the number of guessed levels: max(1, ceil(log2(n r)))."""
    return max(1, math.ceil(math.log2(max(2, n * r))))


class GeneralMatroidPolicy(OnlinePolicy):
    """With probability 1/n pick a random element; otherwise greedy above a guessed level.

    The level is v * 2^-j for j drawn uniformly from 2 log2(n r) values
    centred on the max v seen in [0, 1/2].
    """

    name = "general_matroid"

    def __init__(self, oracle: IndependenceOracle, n: int):
        super().__init__()
        self.oracle = oracle
        self.n = n
        self.span = level_span(n, max(1, oracle.rank))
        self._guard: ConsistencyGuard | None = None
        self._random: RandomElement | None = None
        self._j = 0
        self._v = -math.inf
        self._floor: float | None = None
        self._chosen: list[str] = []

    def on_start(self):
        self._guard = ConsistencyGuard(self.oracle)
        self._v = -math.inf
        self._floor = None
        self._chosen = []
        if self.rng.random() < 1.0 / self.n:
            self.arm = "random"
            self._random = RandomElement(self.n)
            self._random.start(self.rng)
        else:
            self.arm = "greedy"
            self._random = None
            self._j = int(self.rng.integers(-self.span + 1, self.span + 1))
        self.audit = {"level": self._j}

    def decide(self, arrival):
        if self._random is not None:
            return self._random.decide(arrival)
        if arrival.time <= 0.5:
            self._v = max(self._v, arrival.value)
            return False
        if self._floor is None:
            if self._v == -math.inf:
                logger.debug("general matroid: nothing observed in [0, 1/2], no selection")
                self._floor = math.inf
            else:
                self._floor = math.ldexp(self._v, -self._j)
            self.audit["floor"] = self._floor
        if arrival.value < self._floor:
            return False
        if not self._guard.is_independent(frozenset(self._chosen + [arrival.id])):
            return False
        self._chosen.append(arrival.id)
        return True


def general_matroid_policy(oracle: IndependenceOracle, n: int) -> GeneralMatroidPolicy:
    return GeneralMatroidPolicy(oracle, n)
