"""Online policy contract, feasibility constraints and the trial runner."""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from byzantine_secretary._errors import ContractViolationError, OracleInconsistencyError
from byzantine_secretary.model._instances import Arrival, RealizedStream, SeedLike, make_rng

logger = logging.getLogger("byzantine_secretary.model")


# ============================================================
# Policy contract
# ============================================================


class OnlinePolicy:
    """Base class for single-trial online selection policies.

    ``start`` is called once per trial with the trial's generator, then
    ``decide`` once per arrival in time order. ``decide`` returns a bool, or
    the id of the current arrival to select it; naming any other element is
    a contract violation. ``finish`` may drop already-selected ids (post-hoc
    rejection) but never add new ones.

    Subclasses that only compare values set ``ordinal = True``.
    """

    name = "policy"
    ordinal = False

    def __init__(self):
        self.arm: str | None = None
        self.audit: dict = {}
        self._rng: np.random.Generator | None = None

    @property
    def rng(self) -> np.random.Generator:
        if self._rng is None:
            raise ContractViolationError(f"{self.name}: policy used before start()")
        return self._rng

    def start(self, rng: np.random.Generator) -> None:
        self._rng = rng
        self.on_start()

    def on_start(self) -> None:
        pass

    def decide(self, arrival: Arrival) -> bool | str:
        raise NotImplementedError

    def finish(self, selected: list[str]) -> list[str]:
        return selected


class SkipAll(OnlinePolicy):
    name = "skip_all"
    ordinal = True

    def decide(self, arrival):
        return False


class SelectFirst(OnlinePolicy):
    name = "select_first"
    ordinal = True

    def decide(self, arrival):
        return True


PolicyFactory = Callable[[np.random.Generator], OnlinePolicy]


class ArmMixture(OnlinePolicy):
    """Pick one arm uniformly at random at the start of each trial and delegate to it."""

    def __init__(self, arms: Mapping[str, PolicyFactory], *, name: str = "mixture", ordinal: bool = False):
        super().__init__()
        if not arms:
            raise ValueError("arm mixture needs at least one arm")
        self._arms = dict(arms)
        self.name = name
        self.ordinal = ordinal
        self.inner: OnlinePolicy | None = None

    def on_start(self):
        labels = list(self._arms)
        label = labels[int(self.rng.integers(len(labels)))]
        self.inner = self._arms[label](self.rng)
        self.inner.start(self.rng)
        self.arm = label if self.inner.arm is None else f"{label}/{self.inner.arm}"
        self.audit = self.inner.audit

    def decide(self, arrival):
        return self.inner.decide(arrival)

    def finish(self, selected):
        return self.inner.finish(selected)


class ParallelUnion(OnlinePolicy):
    """Run several policies side by side on the same arrivals and select the union."""

    def __init__(self, policies: Mapping[str, OnlinePolicy], *, name: str = "union", ordinal: bool = False):
        super().__init__()
        self._policies = dict(policies)
        self.name = name
        self.ordinal = ordinal

    def on_start(self):
        for policy in self._policies.values():
            policy.start(self.rng)
        self.arm = "union"
        self.audit = {"selected_by": {}}

    def decide(self, arrival):
        takers = [label for label, p in self._policies.items() if _as_bool(p.decide(arrival), arrival)]
        if takers:
            self.audit["selected_by"][arrival.id] = takers
        return bool(takers)


def _as_bool(verdict: bool | str, arrival: Arrival) -> bool:
    if isinstance(verdict, str):
        if verdict != arrival.id:
            raise ContractViolationError(
                f"policy tried to select {verdict!r} while {arrival.id!r} is the current arrival"
            )
        return True
    return bool(verdict)


# ============================================================
# Feasibility
# ============================================================


class Feasibility:
    """Constraint checked by the evaluator. Deferred constraints are enforced after ``finish``."""

    deferred = False

    def admits(self, selected: Sequence[Arrival], arrival: Arrival) -> bool:
        return True

    def is_feasible(self, selected: Sequence[Arrival]) -> bool:
        return True

    def trim(self, selected: list[Arrival]) -> list[Arrival]:
        return selected


class Unconstrained(Feasibility):
    pass


class SingleItem(Feasibility):
    def admits(self, selected, arrival):
        return not selected

    def is_feasible(self, selected):
        return len(selected) <= 1


class UniformCapacity(Feasibility):
    def __init__(self, r: int):
        if r < 1:
            raise ValueError(f"capacity r must be >= 1, got {r}")
        self.r = int(r)

    def admits(self, selected, arrival):
        return len(selected) < self.r

    def is_feasible(self, selected):
        return len(selected) <= self.r


class KnapsackCapacity(Feasibility):
    """Total size at most K, checked after post-hoc rejection.

    Knapsack policies may overshoot K online and rely on rejection to get
    back under it, so the check runs on the final selection; if it still
    does not fit, the latest selections are dropped and a violation is
    recorded.
    """

    deferred = True

    def __init__(self, K: float):
        if not K > 0:
            raise ValueError(f"knapsack capacity K must be positive, got {K}")
        self.K = float(K)

    def is_feasible(self, selected):
        return sum(a.size for a in selected) <= self.K + 1e-12

    def trim(self, selected):
        kept = list(selected)
        while kept and not self.is_feasible(kept):
            kept.pop()
        return kept


class PartitionCapacity(Feasibility):
    def __init__(self, parts: Mapping[str, Sequence[str]], capacities: Mapping[str, int]):
        self.part_of = {eid: p for p, ids in parts.items() for eid in ids}
        self.capacities = {p: int(c) for p, c in capacities.items()}

    def _counts(self, selected):
        counts: dict[str, int] = {}
        for a in selected:
            part = self.part_of.get(a.id)
            counts[part] = counts.get(part, 0) + 1
        return counts

    def admits(self, selected, arrival):
        part = self.part_of.get(arrival.id)
        if part is None:
            return False
        return self._counts(selected).get(part, 0) < self.capacities[part]

    def is_feasible(self, selected):
        return all(
            part is not None and count <= self.capacities[part] for part, count in self._counts(selected).items()
        )


class MatroidFeasibility(Feasibility):
    def __init__(self, oracle):
        self.oracle = oracle

    def admits(self, selected, arrival):
        return self.oracle.is_independent(frozenset([a.id for a in selected] + [arrival.id]))

    def is_feasible(self, selected):
        return self.oracle.is_independent(frozenset(a.id for a in selected))


# ============================================================
# Trial runner
# ============================================================


@dataclass(frozen=True)
class Decision:
    index: int
    time: float
    id: str
    action: str  # "select" | "skip" | "rejected_infeasible"


@dataclass
class PolicyTrace:
    selected_ids: list[str]
    decisions: list[Decision]
    selected: list[Arrival] = field(default_factory=list)
    post_hoc_rejected: list[str] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    arm: str | None = None
    audit: dict = field(default_factory=dict)
    grid_collision: bool = False

    @property
    def total_value(self) -> float:
        return sum(a.value for a in self.selected)

    @property
    def total_size(self) -> float:
        return sum(a.size for a in self.selected)


def run_policy(
    stream: RealizedStream,
    policy: OnlinePolicy,
    feasibility: Feasibility | None = None,
    rng: np.random.Generator | SeedLike | None = None,
) -> PolicyTrace:
    """Feed the stream to ``policy`` one arrival at a time and record its decisions.

    Selections the feasibility constraint does not admit are refused and
    recorded as violations; the decision log always has one entry per
    arrival.
    """
    feasibility = feasibility or Unconstrained()
    if not isinstance(rng, np.random.Generator):
        rng = make_rng(0 if rng is None else rng)
    policy.start(rng)

    selected: list[Arrival] = []
    decisions: list[Decision] = []
    violations: list[str] = []
    for arrival in stream.arrivals:
        chosen = _as_bool(policy.decide(arrival), arrival)
        if not chosen:
            action = "skip"
        elif feasibility.deferred or feasibility.admits(selected, arrival):
            selected.append(arrival)
            action = "select"
        else:
            violations.append(f"infeasible selection of {arrival.id} refused")
            action = "rejected_infeasible"
        decisions.append(Decision(arrival.index, arrival.time, arrival.id, action))

    picked = [a.id for a in selected]
    kept_ids = list(policy.finish(list(picked)))
    if not set(kept_ids) <= set(picked):
        raise ContractViolationError(f"{policy.name}: finish() may only drop selections")
    kept_set = set(kept_ids)
    kept = [a for a in selected if a.id in kept_set]
    rejected = [eid for eid in picked if eid not in kept_set]

    if feasibility.deferred and not feasibility.is_feasible(kept):
        trimmed = feasibility.trim(kept)
        violations.append(f"capacity exceeded after post-hoc rejection; dropped {len(kept) - len(trimmed)}")
        kept = trimmed

    return PolicyTrace(
        selected_ids=[a.id for a in kept],
        decisions=decisions,
        selected=kept,
        post_hoc_rejected=rejected,
        violations=violations,
        arm=policy.arm,
        audit=policy.audit,
        grid_collision=stream.grid_collision,
    )


# ============================================================
# Independence oracle guard
# ============================================================


class ConsistencyGuard:
    """Wrap an independence oracle and abort when it stops being downward closed."""

    def __init__(self, oracle):
        self.oracle = oracle
        self._dependent: list[frozenset] = []

    def is_independent(self, ids) -> bool:
        ids = frozenset(ids)
        verdict = bool(self.oracle.is_independent(ids))
        if verdict:
            for bad in self._dependent:
                if bad <= ids:
                    raise OracleInconsistencyError(
                        f"oracle accepted {sorted(ids)} after rejecting its subset {sorted(bad)}",
                        details={"accepted": sorted(ids), "rejected_subset": sorted(bad)},
                    )
        else:
            self._dependent.append(ids)
        return verdict

    @property
    def rank(self) -> int:
        return self.oracle.rank
