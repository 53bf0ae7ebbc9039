"""Two-blue model: n-2 adversarial reds and two randomly placed blues.

Values are the integers 1..n. A state fixes the red order ``pi`` and the
two blue values b1 > b2; each trial places the blues at a uniformly random
ordered pair of positions. Success means selecting a value >= b2.

Positions map to times (j+1)/(n+1) so the generic runner applies.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from byzantine_secretary._errors import InstanceValidationError, UndefinedPosteriorError
from byzantine_secretary.model._execution import ArmMixture, OnlinePolicy
from byzantine_secretary.model._instances import WEIGHT_TOLERANCE, Arrival, Color, RealizedStream
from byzantine_secretary.subroutines._policies import RandomElement

logger = logging.getLogger("byzantine_secretary.single_item")

GOOD_RATIO = 99
TWO_BLUE_ARMS = ("interval", "random", "posterior", "top_quarter")


# ============================================================
# Model
# ============================================================


@dataclass(frozen=True)
class TwoBlueState:
    weight: float
    pi: tuple[int, ...]
    b1: int
    b2: int

    def sequence(self, p1: int, p2: int) -> list[int]:
        """Values in arrival order with b1 at position p1 and b2 at p2."""
        seq: list[int] = []
        reds = iter(self.pi)
        for j in range(len(self.pi) + 2):
            if j == p1:
                seq.append(self.b1)
            elif j == p2:
                seq.append(self.b2)
            else:
                seq.append(next(reds))
        return seq


@dataclass(frozen=True, eq=False)
class TwoBlueMixed:
    n: int
    states: tuple[TwoBlueState, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if self.n < 3:
            raise InstanceValidationError(f"two-blue model needs n >= 3, got {self.n}")
        if not self.states:
            raise InstanceValidationError("two-blue mixed needs at least one state")
        for s in self.states:
            if s.weight <= 0:
                raise InstanceValidationError("state weights must be strictly positive")
            if not s.b2 < s.b1:
                raise InstanceValidationError(f"need b2 < b1, got b1={s.b1}, b2={s.b2}")
            if len(s.pi) != self.n - 2 or sorted((*s.pi, s.b1, s.b2)) != list(range(1, self.n + 1)):
                raise InstanceValidationError("pi together with b1, b2 must be a permutation of 1..n")
        total = math.fsum(s.weight for s in self.states)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise InstanceValidationError(f"state weights must sum to 1 (got {total!r})")

    @property
    def weights(self) -> np.ndarray:
        return np.array([s.weight for s in self.states])

    def realize(self, state_index: int, rng: np.random.Generator) -> RealizedStream:
        state = self.states[state_index]
        p1, p2 = (int(p) for p in rng.choice(self.n, size=2, replace=False))
        return sequence_stream(state.sequence(p1, p2), blues=(state.b1, state.b2))


def element_id(value: int) -> str:
    return f"v{value}"


def sequence_stream(values: Sequence[int], blues: Sequence[int]) -> RealizedStream:
    n = len(values)
    arrivals = [Arrival(j, (j + 1) / (n + 1), element_id(v), float(v), 1.0) for j, v in enumerate(values)]
    colors = {element_id(v): (Color.GREEN if v in blues else Color.RED) for v in values}
    return RealizedStream(arrivals, colors)


def two_blue_to_dict(mixed: TwoBlueMixed) -> dict:
    return {
        "n": mixed.n,
        "states": [{"weight": s.weight, "pi": list(s.pi), "b1": s.b1, "b2": s.b2} for s in mixed.states],
    }


def two_blue_from_dict(data: Mapping) -> TwoBlueMixed:
    try:
        states = tuple(
            TwoBlueState(float(s["weight"]), tuple(int(v) for v in s["pi"]), int(s["b1"]), int(s["b2"]))
            for s in data["states"]
        )
        return TwoBlueMixed(int(data["n"]), states)
    except (KeyError, TypeError) as e:
        raise InstanceValidationError(f"malformed two-blue JSON: {e}") from e


def is_two_blue_dict(data: Mapping) -> bool:
    states = data.get("states")
    return bool(states) and isinstance(states[0], Mapping) and "pi" in states[0]


def load_two_blue(path: str) -> TwoBlueMixed:
    with open(path, encoding="utf-8") as fh:
        return two_blue_from_dict(json.load(fh))


# ============================================================
# Posterior
# ============================================================


def two_blue_posterior(mixed: TwoBlueMixed, prefix_values: Sequence[int]) -> dict[int, float]:
    """p_e for each prefix value e, given the prefix, b2 inside it and b1 after it.

    Under that event every consistent state places b2 at its prefix position
    and b1 at one of the n-h later positions, so a state's mass is its weight.
    """
    prefix = [int(v) for v in prefix_values]
    h = len(prefix)
    masses: dict[int, float] = {}
    for s in mixed.states:
        if s.b2 not in prefix or s.b1 in prefix:
            continue
        if [v for v in prefix if v != s.b2] == list(s.pi[: h - 1]):
            masses[s.b2] = masses.get(s.b2, 0.0) + s.weight
    total = math.fsum(masses.values())
    if total <= 0:
        raise UndefinedPosteriorError("no state puts b2 in the observed prefix and b1 after it")
    return {v: m / total for v, m in masses.items()}


def posterior_threshold(posterior: Mapping[int, float]) -> int | None:
    """The most likely b2 among seen values (larger value on ties)."""
    if not posterior:
        return None
    return max(posterior, key=lambda v: (posterior[v], v))


# ============================================================
# Arms
# ============================================================


def top_count(n: int) -> int:
    return math.ceil(n ** (2 / 3) - 1e-9)


def interval_pairs(n: int) -> list[tuple[int, int]]:
    return [(lo, hi) for hi in range(1, n + 1) for lo in range(1, hi + 1)]


class RandomIntervalThreshold(OnlinePolicy):
    """Random 1-based interval [L, R] with L <= R; take the first later value above its max."""

    name = "interval"
    ordinal = True

    def __init__(self, n: int):
        super().__init__()
        self.n = n
        self.L = self.R = 0
        self._max = -math.inf
        self._done = False

    def on_start(self):
        weights = np.arange(1, self.n + 1, dtype=float)
        self.R = int(self.rng.choice(self.n, p=weights / weights.sum())) + 1
        self.L = int(self.rng.integers(1, self.R + 1))
        self.audit = {"L": self.L, "R": self.R}

    def decide(self, arrival):
        pos = arrival.index + 1
        if pos < self.L:
            return False
        if pos <= self.R:
            self._max = max(self._max, arrival.value)
            return False
        if self._done or arrival.value <= self._max:
            return False
        self._done = True
        return True


class PosteriorArgmaxThreshold(OnlinePolicy):
    """After the first half, threshold at the most likely b2 and take the first larger value."""

    name = "posterior"

    def __init__(self, mixed: TwoBlueMixed):
        super().__init__()
        self.mixed = mixed
        self.h = mixed.n // 2
        self._prefix: list[int] = []
        self._tau: float | None = None
        self._done = False

    def decide(self, arrival):
        pos = arrival.index + 1
        if pos <= self.h:
            self._prefix.append(int(arrival.value))
            return False
        if self._tau is None and not self._done:
            try:
                posterior = two_blue_posterior(self.mixed, self._prefix)
            except UndefinedPosteriorError:
                logger.debug("two-blue posterior undefined for prefix of %d values", len(self._prefix))
                self._done = True
                return False
            tau = posterior_threshold(posterior)
            if tau is None:
                self._done = True
                return False
            self._tau = float(tau)
            self.audit = {"tau": self._tau, "p_tau": posterior[tau]}
        if self._done or arrival.value <= self._tau:
            return False
        self._done = True
        return True


class TopQuarterThreshold(OnlinePolicy):
    """Read the first n/4 values, threshold at a random one of the top n^(2/3) among them."""

    name = "top_quarter"
    ordinal = True

    def __init__(self, n: int):
        super().__init__()
        self.n = n
        self.q = n // 4
        self._seen: list[float] = []
        self._tau: float | None = None
        self._done = False

    def decide(self, arrival):
        pos = arrival.index + 1
        if pos <= self.q:
            self._seen.append(arrival.value)
            return False
        if self._tau is None:
            if not self._seen:
                self._done = True
                return False
            top = sorted(self._seen, reverse=True)[: top_count(self.n)]
            self._tau = top[int(self.rng.integers(len(top)))]
            self.audit = {"tau": self._tau, "candidates": len(top)}
        if self._done or arrival.value <= self._tau:
            return False
        self._done = True
        return True


def two_blue_policy(mixed: TwoBlueMixed, n: int | None = None) -> ArmMixture:
    n = n or mixed.n
    return ArmMixture(
        {
            "interval": lambda rng: RandomIntervalThreshold(n),
            "random": lambda rng: RandomElement(n),
            "posterior": lambda rng: PosteriorArgmaxThreshold(mixed),
            "top_quarter": lambda rng: TopQuarterThreshold(n),
        },
        name="two_blue",
    )


# ============================================================
# Exact payoff by enumeration
# ============================================================


def _first_above(seq: Sequence[int], start: int, tau: float) -> int | None:
    for v in seq[start:]:
        if v > tau:
            return v
    return None


def _arm_success(seq: list[int], b2: int, mixed: TwoBlueMixed) -> dict[str, float]:
    n = len(seq)
    pairs = interval_pairs(n)
    wins = 0
    for lo, hi in pairs:
        got = _first_above(seq, hi, max(seq[lo - 1 : hi]))
        wins += got is not None and got >= b2
    interval = wins / len(pairs)

    random = sum(v >= b2 for v in seq) / n

    h = n // 2
    try:
        posterior = two_blue_posterior(mixed, seq[:h])
        tau = posterior_threshold(posterior)
    except UndefinedPosteriorError:
        tau = None
    got = None if tau is None else _first_above(seq, h, tau)
    posterior_arm = float(got is not None and got >= b2)

    q = n // 4
    if q:
        top = sorted(seq[:q], reverse=True)[: top_count(n)]
        hits = 0
        for tau in top:
            got = _first_above(seq, q, tau)
            hits += got is not None and got >= b2
        top_quarter = hits / len(top)
    else:
        top_quarter = 0.0
    return {"interval": interval, "random": random, "posterior": posterior_arm, "top_quarter": top_quarter}


def exact_two_blue_payoff(mixed: TwoBlueMixed) -> dict:
    """Exact success probability of ``two_blue_policy`` (overall and per arm) by full enumeration."""
    n = mixed.n
    per_arm = dict.fromkeys(TWO_BLUE_ARMS, 0.0)
    placements = n * (n - 1)
    for s in mixed.states:
        for p1 in range(n):
            for p2 in range(n):
                if p1 == p2:
                    continue
                arms = _arm_success(s.sequence(p1, p2), s.b2, mixed)
                for arm, value in arms.items():
                    per_arm[arm] += s.weight * value / placements
    overall = sum(per_arm.values()) / len(per_arm)
    return {"success": overall, "per_arm": per_arm}


# ============================================================
# Good / bad inputs in the reduced model
# ============================================================


@dataclass(frozen=True)
class ReducedState:
    """N-1 reds in order ``pi`` and one blue of value ``b`` inserted uniformly."""

    weight: Fraction
    pi: tuple[int, ...]
    b: int

    def insert(self, j: int) -> tuple[int, ...]:
        return self.pi[:j] + (self.b,) + self.pi[j:]


@dataclass(frozen=True, eq=False)
class ReducedMixed:
    N: int
    states: tuple[ReducedState, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if sum((s.weight for s in self.states), Fraction(0)) != 1:
            raise InstanceValidationError("reduced state weights must sum to exactly 1")
        for s in self.states:
            if len(s.pi) != self.N - 1 or sorted((*s.pi, s.b)) != list(range(1, self.N + 1)):
                raise InstanceValidationError("pi with b must be a permutation of 1..N")


def _side_masses(mixed: ReducedMixed, x: tuple[int, ...]) -> tuple[Fraction, Fraction]:
    left = right = Fraction(0)
    for s in mixed.states:
        if s.b not in x:
            continue
        j = x.index(s.b)
        if s.insert(j) != x:
            continue
        mass = s.weight / mixed.N
        if 2 * j < mixed.N:
            left += mass
        else:
            right += mass
    return left, right


def classify_input_good_bad(mixed: ReducedMixed, input_permutation: Sequence[int]) -> str:
    x = tuple(int(v) for v in input_permutation)
    left, right = _side_masses(mixed, x)
    if left + right == 0:
        raise UndefinedPosteriorError("input has zero probability under the reduced distribution")
    return "bad" if right > GOOD_RATIO * left else "good"


def good_probability(mixed: ReducedMixed) -> Fraction:
    """Exact probability that the realized input is good."""
    inputs: dict[tuple[int, ...], Fraction] = {}
    for s in mixed.states:
        for j in range(mixed.N):
            x = s.insert(j)
            inputs[x] = inputs.get(x, Fraction(0)) + s.weight / mixed.N
    return sum(
        (p for x, p in inputs.items() if classify_input_good_bad(mixed, x) == "good"),
        Fraction(0),
    )
