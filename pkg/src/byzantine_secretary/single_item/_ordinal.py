"""Ordinal algorithm for a known distribution over inputs.

Candidate sets S_0 ⊇ S_1 ⊇ ... shrink by half at every checkpoint: S_0 is
everything seen by T_0 and S_i keeps either the lower half bot_{i-1}
(values up to the center) or the upper half, depending on whether the
posterior mass of g2 stays entirely on bot_{i-1}.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from byzantine_secretary._errors import PosteriorBudgetError, UndefinedPosteriorError
from byzantine_secretary.model._execution import ArmMixture, OnlinePolicy
from byzantine_secretary.model._instances import Arrival, MixedInstance, PureInstance
from byzantine_secretary.single_item._posterior import OrdinalSchedule, PosteriorTable, SecondMaxPosterior
from byzantine_secretary.subroutines._policies import IntervalWindow, TwoCheckpoints

logger = logging.getLogger("byzantine_secretary.single_item")

EXACT_TOLERANCE = 1e-9
SMALL_CANDIDATE_SET = 10


def center_index(size: int) -> int:
    """Position of the center in an ascending candidate list (ceil(size/2) - 1 smaller members)."""
    return math.ceil(size / 2) - 1


def split_bot(candidates: list[Arrival]) -> tuple[list[Arrival], list[Arrival]]:
    """(bot, rest) where bot holds the center and everything below it."""
    cut = math.ceil(len(candidates) / 2)
    return candidates[:cut], candidates[cut:]


@dataclass
class CandidateState:
    index: int
    members: list[Arrival]
    table: PosteriorTable
    drift: float = 0.0

    @property
    def center(self) -> Arrival | None:
        if not self.members:
            return None
        return self.members[center_index(len(self.members))]


@dataclass
class CandidateRecursion:
    """Runs the S_i recursion checkpoint by checkpoint."""

    engine: SecondMaxPosterior
    rng: object = None
    states: list[CandidateState] = field(default_factory=list)
    k_star: int | None = None
    drift_log: list[dict] = field(default_factory=list)

    @property
    def schedule(self) -> OrdinalSchedule:
        return self.engine.schedule

    def _prefix(self, seen: list[Arrival], i: int) -> list[Arrival]:
        T = self.schedule.checkpoints[i]
        return [a for a in seen if a.time <= T]

    def advance(self, seen: list[Arrival], i: int) -> CandidateState:
        """Compute S_i from the arrivals seen so far (all S_j, j < i, must exist)."""
        table = self.engine.table(self._prefix(seen, i), i, self.rng)
        if i == 0:
            members = sorted(self._prefix(seen, 0), key=lambda a: a.value)
            state = CandidateState(0, members, table)
            self.states.append(state)
            return state

        previous = self.states[i - 1]
        log_n = self.schedule.log_n
        prev_mass = previous.table.mass_of(a.id for a in previous.members)
        cur_mass = table.mass_of(a.id for a in previous.members)
        drift = cur_mass - prev_mass
        self.drift_log.append({"checkpoint": i, "p_i": cur_mass, "p_prev": prev_mass})
        logger.debug("checkpoint %d: p^i(S)=%.6g p^(i-1)(S)=%.6g drift=%.3g", i, cur_mass, prev_mass, drift)

        if not previous.members:
            if self.k_star is None:
                self.k_star = log_n + 1
            state = CandidateState(i, [], table, drift)
            self.states.append(state)
            return state

        bot, rest = split_bot(previous.members)
        bot_mass = table.mass_of(a.id for a in bot)
        if table.mode == "exact":
            take_bot = abs(bot_mass - prev_mass) <= EXACT_TOLERANCE
        elif prev_mass > 0:
            take_bot = bot_mass / prev_mass >= 1 - 1 / (2 * log_n)
        else:
            take_bot = bot_mass <= EXACT_TOLERANCE

        if self.k_star is None and prev_mass > 0:
            ratio = bot_mass / prev_mass
            if 1 / log_n <= ratio < 1 - EXACT_TOLERANCE:
                self.k_star = i

        members = bot if take_bot else rest
        state = CandidateState(i, members, table, drift)
        self.states.append(state)
        return state


class _CandidateThreshold(OnlinePolicy):
    """Shared machinery: track checkpoints, build S_i, then threshold after a chosen checkpoint."""

    ordinal = True

    def __init__(self, engine: SecondMaxPosterior):
        super().__init__()
        self.engine = engine
        self.schedule = engine.schedule
        self._seen: list[Arrival] = []
        self._recursion: CandidateRecursion | None = None
        self._processed = -1
        self._tau: float | None = None
        self._active_after: float | None = None
        self._done = False

    def on_start(self):
        self._recursion = CandidateRecursion(self.engine, self.rng)
        self.audit = {}

    def _stop_checkpoint(self, state: CandidateState) -> bool:
        raise NotImplementedError

    def _threshold(self, state: CandidateState) -> float | None:
        raise NotImplementedError

    def _process_checkpoints(self, t: float):
        while self._tau is None and not self._done and self._processed < self.schedule.log_n:
            nxt = self._processed + 1
            if t <= self.schedule.checkpoints[nxt]:
                return
            try:
                state = self._recursion.advance(self._seen, nxt)
            except (UndefinedPosteriorError, PosteriorBudgetError) as e:
                logger.debug("%s: posterior unavailable at checkpoint %d (%s); no selection", self.name, nxt, e)
                self.audit["abandoned"] = e.error_code
                self._done = True
                return
            self._processed = nxt
            self.audit["sizes"] = [len(s.members) for s in self._recursion.states]
            self.audit["k_star"] = self._recursion.k_star
            self.audit["drift"] = self._recursion.drift_log
            if self._stop_checkpoint(state):
                tau = self._threshold(state)
                if tau is None:
                    self._done = True
                    return
                self._tau = tau
                self._active_after = self.schedule.checkpoints[nxt]
                self.audit.update({"checkpoint": nxt, "tau": tau})

    def decide(self, arrival):
        self._process_checkpoints(arrival.time)
        self._seen.append(arrival)
        if self._done or self._tau is None or arrival.time <= self._active_after:
            return False
        if arrival.value > self._tau:
            self._done = True
            return True
        return False


class CenterThreshold(_CandidateThreshold):
    name = "center"

    def __init__(self, engine: SecondMaxPosterior, i: int):
        super().__init__(engine)
        self.i = i

    def _stop_checkpoint(self, state):
        return state.index == self.i

    def _threshold(self, state):
        center = state.center
        return None if center is None else center.value


class SmallSetThreshold(_CandidateThreshold):
    name = "candidates"

    def _stop_checkpoint(self, state):
        return len(state.members) <= SMALL_CANDIDATE_SET or state.index == self.schedule.log_n

    def _threshold(self, state):
        if not state.members:
            return None
        pick = state.members[int(self.rng.integers(len(state.members)))]
        return pick.value


def as_mixed(instance: PureInstance | MixedInstance) -> MixedInstance:
    if isinstance(instance, MixedInstance):
        return instance
    return MixedInstance(((1.0, instance),))


def ordinal_known_distribution(mixed: MixedInstance | PureInstance, *, engine: SecondMaxPosterior | None = None) -> ArmMixture:
    """Uniform mix of two checkpoints on a random interval, the center threshold and the small-set threshold."""
    engine = engine or SecondMaxPosterior(as_mixed(mixed))
    schedule = engine.schedule

    def interval_arm(rng):
        i = int(rng.integers(1, schedule.log_n + 1))
        policy = TwoCheckpoints(IntervalWindow(schedule.checkpoints[i - 1], schedule.checkpoints[i]))
        policy.arm = f"I{i}"
        return policy

    def center_arm(rng):
        i = int(rng.integers(0, schedule.log_n + 1))
        policy = CenterThreshold(engine, i)
        policy.arm = f"c{i}"
        return policy

    return ArmMixture(
        {
            "two_checkpoints": interval_arm,
            "center": center_arm,
            "candidates": lambda rng: SmallSetThreshold(engine),
        },
        name="ordinal_knowndist",
        ordinal=True,
    )
