"""Unknown-n utilities: a heavy-tailed guess of n and the first-half count estimate.

The guess puts mass a_k = 1 / (k log2 k (log2 log2 k)^2) on every k >= 100.
The support is tabulated exactly up to ``EXACT_LIMIT``; beyond it the tail is
drawn from the continuous density, whose mass is (ln 2)^2 / log2 log2 k.
"""

from __future__ import annotations

import functools
import logging
import math
from collections.abc import Callable

import numpy as np

from byzantine_secretary._errors import ConfigError
from byzantine_secretary.model._execution import OnlinePolicy
from byzantine_secretary.model._instances import Arrival, RealizedStream

logger = logging.getLogger("byzantine_secretary.harness")

MIN_GUESS = 100
EXACT_LIMIT = 10**6
MAX_GUESS_BITS = 62


def guess_weight(k) -> np.ndarray | float:
    k = np.asarray(k, dtype=float)
    lg = np.log2(k)
    return 1.0 / (k * lg * np.log2(lg) ** 2)


def tail_mass(k: float) -> float:
    """Continuous mass of the guess density above k."""
    return math.log(2) ** 2 / math.log2(math.log2(k))


@functools.lru_cache(maxsize=1)
def _table() -> tuple[np.ndarray, float, float]:
    ks = np.arange(MIN_GUESS, EXACT_LIMIT + 1)
    cumulative = np.cumsum(guess_weight(ks))
    head = float(cumulative[-1])
    return cumulative, head, tail_mass(EXACT_LIMIT + 1)


def normalizer() -> float:
    _, head, tail = _table()
    return head + tail


def guess_mass(lo: int, hi: int) -> float:
    """Pr[lo < guess <= hi] for bounds inside the exact table."""
    cumulative, _, _ = _table()
    lo = max(lo, MIN_GUESS - 1)
    hi = min(hi, EXACT_LIMIT)
    if hi <= lo:
        return 0.0
    upper = cumulative[hi - MIN_GUESS]
    lower = cumulative[lo - MIN_GUESS] if lo >= MIN_GUESS else 0.0
    return float(upper - lower) / normalizer()


def sample_n_guess(rng: np.random.Generator) -> int:
    """Draw a guess of n with Pr[k] proportional to a_k over k >= 100."""
    cumulative, head, tail = _table()
    u = float(rng.random()) * (head + tail)
    if u < head:
        return MIN_GUESS + int(np.searchsorted(cumulative, u, side="right"))
    # Tail: u' = log2 log2 k has density proportional to 1/u'^2 above u0.
    u0 = math.log2(math.log2(EXACT_LIMIT + 1))
    loglog = u0 / (1.0 - float(rng.random()))
    bits = 2.0**loglog
    if bits > MAX_GUESS_BITS:
        logger.debug("n guess 2^%.3g capped at 2^%d", bits, MAX_GUESS_BITS)
        return 2**MAX_GUESS_BITS
    return max(EXACT_LIMIT + 1, int(2.0**bits))


def estimate_n_first_half(stream: RealizedStream | list[Arrival]) -> int:
    """Twice the number of arrivals strictly before time 1/2."""
    arrivals = stream.arrivals if isinstance(stream, RealizedStream) else stream
    return 2 * sum(1 for a in arrivals if a.time < 0.5)


# ============================================================
# Policy wrappers
# ============================================================


PolicyBuilder = Callable[[int], OnlinePolicy]


class GuessN(OnlinePolicy):
    """Build the inner policy for a random guess of n drawn at the start of each trial."""

    def __init__(self, build: PolicyBuilder, name: str):
        super().__init__()
        self.build = build
        self.name = f"guess_n:{name}"
        self.inner: OnlinePolicy | None = None

    def on_start(self):
        guess = sample_n_guess(self.rng)
        self.audit = {"n_guess": guess}
        try:
            self.inner = self.build(guess)
        except ConfigError as e:
            logger.debug("guess_n: no policy for n=%d (%s)", guess, e)
            self.inner = None
            return
        self.inner.start(self.rng)
        self.arm = self.inner.arm
        self.audit["inner"] = self.inner.audit

    def decide(self, arrival):
        return False if self.inner is None else self.inner.decide(arrival)

    def finish(self, selected):
        return selected if self.inner is None else self.inner.finish(selected)


class HalfN(OnlinePolicy):
    """Observe [0, 1/2) without selecting, then run the inner policy built for n = 2 * count.

    The buffered prefix is replayed to the inner policy with its selections
    suppressed so its observation state matches a full run.
    """

    def __init__(self, build: PolicyBuilder, name: str):
        super().__init__()
        self.build = build
        self.name = f"half_n:{name}"
        self.inner: OnlinePolicy | None = None
        self._buffer: list[Arrival] = []
        self._switched = False

    def on_start(self):
        self.inner = None
        self._buffer = []
        self._switched = False
        self.audit = {}

    def _switch(self):
        self._switched = True
        estimate = 2 * len(self._buffer)
        self.audit["n_estimate"] = estimate
        try:
            self.inner = self.build(max(1, estimate))
        except ConfigError as e:
            logger.debug("half_n: no policy for n=%d (%s)", estimate, e)
            return
        self.inner.start(self.rng)
        self.arm = self.inner.arm
        self.audit["inner"] = self.inner.audit
        suppressed = sum(1 for a in self._buffer if self.inner.decide(a))
        if suppressed:
            logger.debug("half_n: %d replayed selections suppressed", suppressed)

    def decide(self, arrival):
        if arrival.time < 0.5:
            self._buffer.append(arrival)
            return False
        if not self._switched:
            self._switch()
        return False if self.inner is None else self.inner.decide(arrival)

    def finish(self, selected):
        return selected if self.inner is None else self.inner.finish(selected)
