"""Uniform matroid: doubling threshold and the subsampling filter."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from byzantine_secretary._errors import ConfigError
from byzantine_secretary.model._execution import ArmMixture, OnlinePolicy
from byzantine_secretary.subroutines._policies import RandomElement

logger = logging.getLogger("byzantine_secretary.multi_select")


def extended_rank(n: int, r: int) -> int:
    """r' = r + ceil(log2 n)."""
    return r + math.ceil(math.log2(max(2, n)))


@dataclass
class DoublingThreshold:
    tau: float
    floor: float

    @classmethod
    def start(cls, v0: float, n: int, r_prime: int) -> DoublingThreshold:
        floor = v0 / (2 * n * r_prime)
        return cls(floor, floor)

    def on_select(self) -> None:
        self.tau *= 2

    def on_interval_end(self) -> None:
        self.tau = max(self.floor, self.tau / 2)


class UniformDoubling(OnlinePolicy):
    """Observe v0 = max over [0, 1/2], then select values >= tau with tau doubling on each pick.

    Interval ends are T_i = 1/2 + i/(2r'); tau halves at each and never drops
    below v0/(2 n r'). Stops after r' selections.
    """

    name = "doubling"

    def __init__(self, n: int, r: int):
        super().__init__()
        if r < 1:
            raise ConfigError(f"uniform matroid needs r >= 1, got {r}")
        self.n = n
        self.r = r
        self.r_prime = extended_rank(n, r)
        self.checkpoints = [0.5 + i / (2 * self.r_prime) for i in range(1, self.r_prime + 1)]
        self._v0 = -math.inf
        self._threshold: DoublingThreshold | None = None
        self._passed = 0
        self._picked = 0

    def on_start(self):
        self._v0 = -math.inf
        self._threshold = None
        self._passed = 0
        self._picked = 0
        self.audit = {"taus": []}

    def decide(self, arrival):
        t = arrival.time
        if t <= 0.5:
            self._v0 = max(self._v0, arrival.value)
            return False
        if self._threshold is None:
            if self._v0 == -math.inf:
                logger.debug("doubling: nothing observed in [0, 1/2], no selection")
                self._v0 = math.inf
            self._threshold = DoublingThreshold.start(self._v0, self.n, self.r_prime)
        while self._passed < len(self.checkpoints) and t > self.checkpoints[self._passed]:
            self._threshold.on_interval_end()
            self._passed += 1
        if self._picked >= self.r_prime or arrival.value < self._threshold.tau:
            return False
        self.audit["taus"].append(self._threshold.tau)
        self._threshold.on_select()
        self._picked += 1
        return True


class SubsampleFilter(OnlinePolicy):
    """Keep each selection of an r'-selecting base independently w.p. r/(2r'), stopping at r."""

    def __init__(self, base: OnlinePolicy, r: int, r_prime: int):
        super().__init__()
        if not 1 <= r <= r_prime:
            raise ConfigError(f"subsample filter needs 1 <= r <= r', got r={r}, r'={r_prime}")
        self.base = base
        self.r = r
        self.r_prime = r_prime
        self.keep_prob = r / (2 * r_prime)
        self.name = f"filter:{base.name}"
        self.ordinal = base.ordinal
        self._kept = 0
        self._base_picks = 0

    def on_start(self):
        self.base.start(self.rng)
        self.arm = self.base.arm
        self._kept = 0
        self._base_picks = 0
        self.audit = {"base": self.base.audit}

    def decide(self, arrival):
        verdict = self.base.decide(arrival)
        if isinstance(verdict, str):
            verdict = verdict == arrival.id
        if not verdict:
            return False
        self._base_picks += 1
        self.audit["base_picks"] = self._base_picks
        if self._kept >= self.r or self.rng.random() >= self.keep_prob:
            return False
        self._kept += 1
        return True


def subsample_filter(base: OnlinePolicy, r: int, r_prime: int) -> SubsampleFilter:
    return SubsampleFilter(base, r, r_prime)


def uniform_doubling(n: int, r: int) -> ArmMixture:
    """Random element or the doubling rule, each with probability 1/2 (selects up to r')."""
    return ArmMixture(
        {"random": lambda rng: RandomElement(n), "doubling": lambda rng: UniformDoubling(n, r)},
        name="uniform_doubling",
    )


def uniform_constant(n: int, r: int) -> SubsampleFilter:
    """The r-feasible uniform-matroid algorithm: subsample the doubling mix down to r."""
    policy = SubsampleFilter(uniform_doubling(n, r), r, extended_rank(n, r))
    policy.name = "uniform_constant"
    return policy
