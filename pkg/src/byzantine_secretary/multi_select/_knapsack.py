"""Knapsack selection with cascading and dedicated budgets.

Elements are bucketed by density v/s into levels rho_l = n^(c+1)/(1+eps)^l.
Time is cut into 1/delta intervals. Each interval carries a cascading
budget per level that starts at level 0 and flows down: whatever a level
did not consume moves one level lower in the next interval, while the
consumed part is restored at the same level. A fixed dedicated budget H
per level guards light levels that the cascade reaches too late.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from byzantine_secretary._errors import ConfigError
from byzantine_secretary.model._execution import OnlinePolicy
from byzantine_secretary.subroutines._policies import RandomElement

logger = logging.getLogger("byzantine_secretary.multi_select")

DEFAULT_EPSILON = 0.2
DEFAULT_C = 1.0


# ============================================================
# Parameters
# ============================================================


def level_count(n: int, epsilon: float, c: float) -> int:
    return 1 + math.ceil(((c + 3) / epsilon) * math.log2(max(2, n)))


def _explicit(**given) -> tuple[tuple[str, float], ...]:
    return tuple(sorted((k, float(v)) for k, v in given.items() if v is not None))


@dataclass(frozen=True)
class KnapsackParams:
    n: int
    K: float
    epsilon: float
    delta: float
    c: float
    H: float
    K_floor: float
    reject_prob: float
    preset: str = field(default="default", compare=False)
    explicit: tuple[tuple[str, float], ...] = field(default=(), compare=False, repr=False)

    @property
    def levels(self) -> int:
        return level_count(self.n, self.epsilon, self.c)

    @property
    def intervals(self) -> int:
        return max(1, math.ceil(1.0 / self.delta - 1e-9))

    @classmethod
    def resolve(
        cls,
        n: int,
        K: float,
        *,
        epsilon: float = DEFAULT_EPSILON,
        delta: float | None = None,
        c: float = DEFAULT_C,
        H: float | None = None,
        K_floor: float | None = None,
        reject_prob: float | None = None,
    ) -> KnapsackParams:
        """Fill unset constants from the default formulas.

        H = ceil(10 L ln(L/eps) / eps^3), 1/delta = ceil(10 L / eps),
        K_floor = ceil(10 L^2 ln(L/eps) / eps^4), reject_prob = 2 eps.
        """
        if n < 1:
            raise ConfigError(f"n must be >= 1, got {n}")
        if not K > 0:
            raise ConfigError(f"knapsack capacity K must be positive, got {K}")
        if not 0 < epsilon < 1:
            raise ConfigError(f"epsilon must lie in (0, 1), got {epsilon}")
        if delta is not None and not 0 < delta <= 1:
            raise ConfigError(f"delta must lie in (0, 1], got {delta}")
        explicit = _explicit(delta=delta, H=H, K_floor=K_floor, reject_prob=reject_prob)
        L = level_count(n, epsilon, c)
        log_term = math.log(L / epsilon)
        if H is None:
            H = math.ceil(10 * L * log_term / epsilon**3)
        if delta is None:
            delta = 1.0 / math.ceil(10 * L / epsilon)
        if K_floor is None:
            K_floor = math.ceil(10 * L**2 * log_term / epsilon**4)
        if reject_prob is None:
            reject_prob = 2 * epsilon
        if reject_prob > 1:
            logger.warning("rejection probability %.3g clamped to 1", reject_prob)
            reject_prob = 1.0
        if H < 0 or reject_prob < 0:
            raise ConfigError("H and reject_prob must be non-negative")
        return cls(
            int(n),
            float(K),
            float(epsilon),
            float(delta),
            float(c),
            float(H),
            float(K_floor),
            float(reject_prob),
            explicit=explicit,
        )

    @classmethod
    def for_desk(cls, n: int, K: float, epsilon: float = DEFAULT_EPSILON, **overrides) -> KnapsackParams:
        """Constants scaled for desk-size runs.

        H = max(1, eps K/(2L)), 1/delta = 4L so cascading budget reaches every
        level within the first quarter of the intervals, reject_prob = eps/2.
        """
        c = overrides.pop("c", DEFAULT_C)
        explicit = _explicit(**overrides)
        L = level_count(n, epsilon, c)
        overrides.setdefault("H", max(1.0, epsilon * K / (2 * L)))
        overrides.setdefault("delta", 1.0 / (4 * L))
        overrides.setdefault("reject_prob", epsilon / 2)
        return replace(cls.resolve(n, K, epsilon=epsilon, c=c, **overrides), preset="desk", explicit=explicit)

    def with_c(self, c: float) -> KnapsackParams:
        """The same preset and explicit overrides, with every L-derived constant redone for c."""
        overrides = dict(self.explicit)
        if self.preset == "desk":
            return type(self).for_desk(self.n, self.K, self.epsilon, c=c, **overrides)
        return type(self).resolve(self.n, self.K, epsilon=self.epsilon, c=c, **overrides)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "K": self.K,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "c": self.c,
            "H": self.H,
            "K_floor": self.K_floor,
            "reject_prob": self.reject_prob,
            "preset": self.preset,
            "levels": self.levels,
            "intervals": self.intervals,
        }


@dataclass(frozen=True)
class DensityLevels:
    n: int
    epsilon: float
    c: float

    @property
    def count(self) -> int:
        return level_count(self.n, self.epsilon, self.c)

    @property
    def rho0(self) -> float:
        return float(self.n) ** (self.c + 1)

    def rho(self, level: int) -> float:
        return self.rho0 / (1 + self.epsilon) ** level

    def level_of(self, density: float) -> int:
        """Unique l with density in (rho_{l+1}, rho_l], clamped to [0, L-1]."""
        if density >= self.rho0:
            return 0
        x = math.log(self.rho0 / density) / math.log1p(self.epsilon)
        return min(self.count - 1, max(0, math.floor(x)))


# ============================================================
# Ledger
# ============================================================


@dataclass(frozen=True)
class LedgerEvent:
    """One ledger action: a cascading or dedicated charge, or a decline."""

    interval: int
    kind: str
    level: int
    size: float
    target: int | None = None
    id: str = ""


@dataclass
class LedgerDecline:
    interval: int
    level: int
    id: str
    size: float
    remaining_from_level: float
    dedicated_remaining: float


class BudgetLedger:
    """Per-level cascading budgets for the current interval plus dedicated budgets."""

    def __init__(self, levels: int, interval_budget: float, dedicated: float):
        self.levels = int(levels)
        self.interval_budget = float(interval_budget)
        self.budget = np.zeros(self.levels)
        self.budget[0] = self.interval_budget
        self.consumed = np.zeros(self.levels)
        self.dedicated = np.full(self.levels, float(dedicated))
        self.dedicated_used = np.zeros(self.levels)
        self.interval = 1
        self.interval_totals: list[float] = []
        self.interval_starts: dict[int, list[float]] = {}
        self.overshoot: list[float] = []
        self.events: list[LedgerEvent] = []
        self.declines: list[LedgerDecline] = []

    def remaining(self) -> np.ndarray:
        return self.budget - self.consumed

    def _log(self, event: LedgerEvent) -> None:
        # budget only changes between intervals
        if event.interval not in self.interval_starts:
            self.interval_starts[event.interval] = self.budget.tolist()
        self.events.append(event)

    def charge_cascading(self, level: int, size: float, element_id: str = "") -> int | None:
        """Charge the smallest l' >= level with positive remaining budget."""
        positive = np.flatnonzero(self.remaining()[level:] > 0)
        if positive.size == 0:
            return None
        target = level + int(positive[0])
        self.consumed[target] += size
        self._log(LedgerEvent(self.interval, "cascading", level, size, target, element_id))
        return target

    def charge_dedicated(self, level: int, size: float, element_id: str = "") -> bool:
        if self.dedicated[level] - self.dedicated_used[level] <= 0:
            return False
        self.dedicated_used[level] += size
        self._log(LedgerEvent(self.interval, "dedicated", level, size, level, element_id))
        return True

    def decline(self, level: int, element_id: str, size: float) -> None:
        self._log(LedgerEvent(self.interval, "decline", level, size, None, element_id))
        self.declines.append(
            LedgerDecline(
                self.interval,
                level,
                element_id,
                size,
                float(self.remaining()[level:].max(initial=0.0)),
                float(self.dedicated[level] - self.dedicated_used[level]),
            )
        )

    def close_interval(self) -> None:
        """B_{l,i+1} = C_{l,i} + R_{l-1,i}; the last level keeps its own remainder."""
        self.interval_totals.append(float(math.fsum(self.budget)))
        self.overshoot.append(float(np.maximum(self.consumed - self.budget, 0.0).sum()))
        used = np.minimum(self.consumed, self.budget)
        rest = self.budget - used
        nxt = used.copy()
        nxt[1:] += rest[:-1]
        nxt[-1] += rest[-1]
        self.budget = nxt
        self.consumed = np.zeros(self.levels)
        self.interval += 1

    def advance_to(self, interval: int) -> None:
        while self.interval < interval:
            self.close_interval()

    def finalize(self) -> None:
        self.interval_totals.append(float(math.fsum(self.budget)))
        self.overshoot.append(float(np.maximum(self.consumed - self.budget, 0.0).sum()))

    def summary(self) -> dict:
        return {
            "interval_budget": self.interval_budget,
            "interval_totals": list(self.interval_totals),
            "interval_starts": self.interval_starts,
            "overshoot": list(self.overshoot),
            "events": self.events,
            "declines": self.declines,
            "dedicated_used": self.dedicated_used.tolist(),
        }


# ============================================================
# Core policy
# ============================================================


class KnapsackCore(OnlinePolicy):
    """Density-level knapsack rule for values pre-scaled so that V* lies in [1, n^c].

    Sizes at most 1/n are always taken and values below 1/n^2 never; the
    rest are charged to the cascading budget of the first level l' >= l
    with budget left, else to the dedicated budget of l. ``finish``
    rejects each selection independently with ``reject_prob``.
    """

    name = "knapsack_core"

    def __init__(
        self,
        params: KnapsackParams,
        *,
        value_scale: float = 1.0,
        window: tuple[float, float] = (0.0, 1.0),
        reject: bool = True,
    ):
        super().__init__()
        self.params = params
        self.density = DensityLevels(params.n, params.epsilon, params.c)
        self.value_scale = float(value_scale)
        self.window = window
        self.reject = reject
        self.ledger: BudgetLedger | None = None
        self.tags: dict[str, str] = {}
        if params.K < params.K_floor:
            logger.warning(
                "knapsack K=%.4g below the configured floor %.4g; guarantees do not apply", params.K, params.K_floor
            )

    def on_start(self):
        self.ledger = BudgetLedger(self.density.count, self.params.delta * self.params.K, self.params.H)
        self.tags = {}
        self.audit = {"tags": self.tags, "ledger": None}

    def _interval(self, t: float) -> int:
        start, end = self.window
        local = (t - start) / (end - start)
        return min(self.params.intervals, max(1, math.ceil(local / self.params.delta - 1e-12)))

    def decide(self, arrival):
        if arrival.time < self.window[0]:
            return False
        self.ledger.advance_to(self._interval(arrival.time))
        n = self.params.n
        value = arrival.value * self.value_scale
        if arrival.size <= 1.0 / n:
            self.tags[arrival.id] = "small"
            return True
        if value < 1.0 / n**2:
            return False
        level = self.density.level_of(value / arrival.size)
        charged = self.ledger.charge_cascading(level, arrival.size, arrival.id)
        if charged is not None:
            self.tags[arrival.id] = f"cascading:{charged}"
            return True
        if self.ledger.charge_dedicated(level, arrival.size, arrival.id):
            self.tags[arrival.id] = f"dedicated:{level}"
            return True
        self.ledger.decline(level, arrival.id, arrival.size)
        return False

    def finish(self, selected):
        self.ledger.finalize()
        self.audit["ledger"] = self.ledger.summary()
        if not self.reject:
            return selected
        return [eid for eid in selected if self.rng.random() >= self.params.reject_prob]


def knapsack_core(n: int, K: float, epsilon: float = DEFAULT_EPSILON, c: float = DEFAULT_C, delta: float | None = None, **overrides) -> KnapsackCore:
    return KnapsackCore(KnapsackParams.resolve(n, K, epsilon=epsilon, c=c, delta=delta, **overrides))


# ============================================================
# General wrapper
# ============================================================


@dataclass
class _SlotState:
    v_hat: float
    used: dict[int, int] = field(default_factory=dict)


class ValueSlots(OnlinePolicy):
    """Per-checkpoint value levels v_hat/(1+eps)^l, each with D dedicated slots."""

    name = "slots"

    def __init__(self, n: int, epsilon: float):
        super().__init__()
        self.n = n
        self.epsilon = epsilon
        self.levels = math.ceil((10 / epsilon) * math.log2(max(2, n)))
        self.slots = math.ceil((10 / epsilon) * math.log(1 / epsilon))
        self.checkpoints = [i * epsilon for i in range(1, math.floor(1 / epsilon + 1e-9) + 1)]
        self._max = -math.inf
        self._states: list[_SlotState] = []

    def on_start(self):
        self._max = -math.inf
        self._states = []

    def decide(self, arrival):
        while len(self._states) < len(self.checkpoints) and arrival.time > self.checkpoints[len(self._states)]:
            self._states.append(_SlotState(self._max))
        taken = False
        half = self.levels / 2
        for state in self._states:
            if state.v_hat <= 0 or state.v_hat == -math.inf:
                continue
            level = math.floor(math.log(state.v_hat / arrival.value) / math.log1p(self.epsilon))
            if not -half < level < half:
                continue
            if state.used.get(level, 0) < self.slots:
                state.used[level] = state.used.get(level, 0) + 1
                taken = True
        self._max = max(self._max, arrival.value)
        return taken


class KnapsackGeneral(OnlinePolicy):
    """Union of random element, the core rule on [eps, 1] and value slots, thinned by 1 - eps."""

    name = "knapsack_general"

    def __init__(self, params: KnapsackParams):
        super().__init__()
        self.params = params
        self.epsilon = params.epsilon
        self.core_params = params.with_c(4.0)
        self.keep_prob = 1.0 - params.epsilon
        self._random = RandomElement(params.n)
        self._slots = ValueSlots(params.n, params.epsilon)
        self._core: KnapsackCore | None = None
        self._v_hat = -math.inf

    def on_start(self):
        self._random.start(self.rng)
        self._slots.start(self.rng)
        self._core = None
        self._v_hat = -math.inf
        self.arm = "union"
        self.audit = {"selected_by": {}}

    def decide(self, arrival):
        takers = []
        if self._random.decide(arrival):
            takers.append("random")
        if arrival.time >= self.epsilon:
            if self._core is None and self._v_hat > 0:
                # V* lies in [v_hat/n^2, v_hat n^2]; scale so it lands in [1, n^4].
                scale = self.params.n**2 / self._v_hat
                self._core = KnapsackCore(self.core_params, value_scale=scale, window=(self.epsilon, 1.0), reject=False)
                self._core.start(self.rng)
            if self._core is not None and self._core.decide(arrival):
                takers.append("core")
        else:
            self._v_hat = max(self._v_hat, arrival.value)
        if self._slots.decide(arrival):
            takers.append("slots")
        if takers:
            self.audit["selected_by"][arrival.id] = takers
        return bool(takers)

    def finish(self, selected):
        if self._core is not None:
            self._core.finish(selected)
            self.audit["core"] = self._core.audit
        return [eid for eid in selected if self.rng.random() < self.keep_prob]


def knapsack_general(n: int, K: float, epsilon: float = DEFAULT_EPSILON, **overrides) -> KnapsackGeneral:
    return KnapsackGeneral(KnapsackParams.resolve(n, K, epsilon=epsilon, **overrides))


# ============================================================
# Trace audits
# ============================================================


def audit_budget_conservation(ledger_summary: dict, tol: float = 1e-9) -> list[int]:
    """Intervals whose total cascading budget differs from delta*K."""
    target = ledger_summary["interval_budget"]
    return [
        i + 1
        for i, total in enumerate(ledger_summary["interval_totals"])
        if abs(total - target) > tol * max(1.0, target)
    ]


def audit_never_skip_heavy(ledger_summary: dict) -> list[LedgerEvent]:
    """Ledger events that passed over cascading budget they were entitled to.

    Replays each interval from its recorded starting budgets. A cascading
    charge must land on the first level l' >= l with budget left; a dedicated
    charge or a decline is only allowed once no such level remains.
    """
    starts = ledger_summary["interval_starts"]
    bad: list[LedgerEvent] = []
    current = None
    budget = consumed = np.zeros(0)
    for ev in ledger_summary["events"]:
        if ev.interval != current:
            current = ev.interval
            budget = np.array(starts[ev.interval], dtype=float)
            consumed = np.zeros_like(budget)
        open_levels = np.flatnonzero((budget - consumed)[ev.level :] > 0)
        first = ev.level + int(open_levels[0]) if open_levels.size else None
        if ev.kind == "cascading":
            if ev.target != first:
                bad.append(ev)
            if ev.target is not None:
                consumed[ev.target] += ev.size
        elif first is not None:
            bad.append(ev)
    return bad


def audit_dedicated_dichotomy(ledger_summary: dict, optimal_ids) -> list[str]:
    """Declined members of the offline optimum whose dedicated budget was not exhausted."""
    members = set(optimal_ids)
    return [d.id for d in ledger_summary["declines"] if d.id in members and d.dedicated_remaining > 0]
