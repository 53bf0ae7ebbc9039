"""Building-block policies: random element, two checkpoints, Dynkin."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from byzantine_secretary._errors import ConfigError
from byzantine_secretary.model._execution import OnlinePolicy

logger = logging.getLogger("byzantine_secretary.subroutines")


@dataclass(frozen=True)
class IntervalWindow:
    T1: float
    T2: float

    def __post_init__(self):
        if not 0.0 <= self.T1 < self.T2 <= 1.0:
            raise ConfigError(f"window needs 0 <= T1 < T2 <= 1, got [{self.T1}, {self.T2}]")

    def contains(self, t: float) -> bool:
        return self.T1 <= t <= self.T2


class RandomElement(OnlinePolicy):
    """Select the k-th arrival for k uniform in [1..n]."""

    name = "random"
    ordinal = True

    def __init__(self, n: int):
        super().__init__()
        if n < 1:
            raise ConfigError(f"random element needs n >= 1, got {n}")
        self.n = int(n)
        self.k = 0
        self._seen = 0

    def on_start(self):
        self.k = int(self.rng.integers(1, self.n + 1))
        self._seen = 0
        self.audit = {"k": self.k}

    def decide(self, arrival):
        self._seen += 1
        return self._seen == self.k

    def finish(self, selected):
        if self._seen < self.k:
            logger.debug("random element: k=%d exceeds stream length %d", self.k, self._seen)
        return selected


class TwoCheckpoints(OnlinePolicy):
    """Observe the max over [T1, T2], then take the first later arrival at least as large."""

    name = "two_checkpoint"
    ordinal = True

    def __init__(self, window: IntervalWindow):
        super().__init__()
        self.window = window
        self.tau = -math.inf
        self._done = False

    def on_start(self):
        self.tau = -math.inf
        self._done = False

    def decide(self, arrival):
        t = arrival.time
        if t < self.window.T1:
            return False
        if t <= self.window.T2:
            self.tau = max(self.tau, arrival.value)
            return False
        if self._done or arrival.value < self.tau:
            return False
        self._done = True
        self.audit = {"tau": self.tau}
        return True


class Dynkin(OnlinePolicy):
    """Classical secretary rule: skip the first ceil(n/e) arrivals, then take the first prefix maximum."""

    name = "dynkin"
    ordinal = True

    def __init__(self, n: int):
        super().__init__()
        if n < 1:
            raise ConfigError(f"dynkin needs n >= 1, got {n}")
        self.n = int(n)
        self.cutoff = math.ceil(n / math.e)
        self._seen = 0
        self._best = -math.inf
        self._done = False

    def on_start(self):
        self._seen = 0
        self._best = -math.inf
        self._done = False

    def decide(self, arrival):
        self._seen += 1
        is_record = arrival.value > self._best
        self._best = max(self._best, arrival.value)
        if self._seen <= self.cutoff or self._done or not is_record:
            return False
        self._done = True
        return True


# ============================================================
# Factories
# ============================================================


def select_random_element(n: int) -> RandomElement:
    return RandomElement(n)


def two_checkpoints(window: IntervalWindow | tuple[float, float]) -> TwoCheckpoints:
    if not isinstance(window, IntervalWindow):
        window = IntervalWindow(*window)
    return TwoCheckpoints(window)


def dynkin(n: int) -> Dynkin:
    return Dynkin(n)


def dynkin_time() -> TwoCheckpoints:
    """Time-based Dynkin: observe [0, 1/e], then threshold at the observed max."""
    policy = TwoCheckpoints(IntervalWindow(0.0, 1.0 / math.e))
    policy.name = "dynkin_time"
    return policy
