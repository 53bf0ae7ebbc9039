"""Value maximization with iterated-logarithm checkpoints.

Checkpoints T_0 = 1/2 and T_i = 1/2 + i/(4 log* n) split the third quarter
into log* n intervals. Interval I_0 is [0, T_0] and I_i is (T_{i-1}, T_i].
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from byzantine_secretary._errors import ConfigError
from byzantine_secretary.model._execution import ArmMixture, OnlinePolicy
from byzantine_secretary.subroutines._policies import IntervalWindow, RandomElement, TwoCheckpoints

logger = logging.getLogger("byzantine_secretary.single_item")


def log_star(n: float) -> int:
    """Number of base-2 logarithms needed to bring n down to at most 1."""
    count = 0
    x = float(n)
    while x > 1.0:
        x = math.log2(x)
        count += 1
    return count


def iterated_log(n: int, i: int) -> int:
    """log^(i) n with every intermediate log ceiled to an integer (never below 1)."""
    x = int(n)
    for _ in range(i):
        x = max(1, math.ceil(math.log2(x))) if x > 1 else 1
    return x


@dataclass(frozen=True)
class LogStarSchedule:
    n: int
    depth: int
    checkpoints: tuple[float, ...]
    iterated: tuple[int, ...]

    @classmethod
    def for_n(cls, n: int) -> LogStarSchedule:
        if n < 4:
            raise ConfigError(f"value_logstar needs n >= 4, got {n}")
        depth = max(1, log_star(n))
        checkpoints = tuple(0.5 + i / (4 * depth) for i in range(depth + 1))
        iterated = tuple(iterated_log(n, i) for i in range(depth + 1))
        return cls(n, depth, checkpoints, iterated)

    def interval_of(self, t: float) -> int:
        """Index i with t in I_i, or depth + 1 after the last checkpoint."""
        for i, T in enumerate(self.checkpoints):
            if t <= T:
                return i
        return self.depth + 1

    def threshold(self, v_i: float, i: int, s: int) -> float:
        return math.ldexp(v_i * self.iterated[i], -s)

    def threshold_grid(self, v_i: float, i: int) -> list[float]:
        return [self.threshold(v_i, i, s) for s in range(2 * self.iterated[i] + 1)]


class LogStarThreshold(OnlinePolicy):
    """Observe the max v_i of I_i, then take the first later arrival worth at least v_i log^(i) n / 2^s."""

    name = "logstar_threshold"

    def __init__(self, schedule: LogStarSchedule, i: int, s: int):
        super().__init__()
        self.schedule = schedule
        self.i = i
        self.s = s
        self._v_i = -math.inf
        self._tau: float | None = None
        self._done = False

    def on_start(self):
        self.audit = {"i": self.i, "s": self.s}

    def decide(self, arrival):
        where = self.schedule.interval_of(arrival.time)
        if where < self.i:
            return False
        if where == self.i:
            self._v_i = max(self._v_i, arrival.value)
            return False
        if self._tau is None:
            if self._v_i == -math.inf:
                logger.debug("logstar threshold: interval %d empty, no selection", self.i)
                self._done = True
                self._tau = math.inf
            else:
                self._tau = self.schedule.threshold(self._v_i, self.i, self.s)
                self.audit.update({"v_i": self._v_i, "tau": self._tau})
        if self._done or arrival.value < self._tau:
            return False
        self._done = True
        return True


def value_max_logstar(n: int) -> ArmMixture:
    """Three arms chosen uniformly: random element, two checkpoints on half an interval, grid threshold."""
    schedule = LogStarSchedule.for_n(n)

    def dynkin_arm(rng):
        i = int(rng.integers(1, schedule.depth + 1))
        lo, hi = schedule.checkpoints[i - 1], schedule.checkpoints[i]
        policy = TwoCheckpoints(IntervalWindow(lo, (lo + hi) / 2))
        policy.arm = f"I{i}"
        return policy

    def threshold_arm(rng):
        i = int(rng.integers(0, schedule.depth + 1))
        s = int(rng.integers(0, 2 * schedule.iterated[i] + 1))
        return LogStarThreshold(schedule, i, s)

    return ArmMixture(
        {
            "random": lambda rng: RandomElement(n),
            "interval": dynkin_arm,
            "threshold": threshold_arm,
        },
        name="value_logstar",
    )
