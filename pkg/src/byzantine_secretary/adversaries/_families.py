"""Instance generators for lower bounds, hard cases, knapsack studies and baselines.

Every generator is pure given its seed and returns validated instances.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from byzantine_secretary._errors import ConfigError, InstanceValidationError
from byzantine_secretary.model._instances import Color, Element, MixedInstance, PureInstance, make_rng
from byzantine_secretary.single_item._posterior import OrdinalSchedule, hard_event_holds
from byzantine_secretary.single_item._two_blue import ReducedMixed, ReducedState, TwoBlueMixed, TwoBlueState, top_count

logger = logging.getLogger("byzantine_secretary.adversaries")

TWO_BLUE_ADVERSARIES = ("uniform_reds", "posterior_concentrated", "posterior_flat", "low_second_max")
KNAPSACK_KINDS = ("heavy", "light", "heavy_light", "spread", "spiky")
GREEN_PROFILES = ("distinct_ranks", "geometric", "equal_plus_jitter")


@dataclass(frozen=True)
class FamilySpec:
    name: str
    n: int
    params: Mapping = field(default_factory=dict)
    seed: int = 0

    def with_seed(self, seed) -> FamilySpec:
        return FamilySpec(self.name, self.n, dict(self.params), seed)


def _rank_values(n: int) -> Callable[[int], float]:
    """Value for rank k in 1..n: n^k while that fits comfortably in a float, else k."""
    if n > 1 and n * math.log10(n) < 300:
        return lambda k: float(n) ** k
    return float


def _uniform_weights(count: int) -> list[float]:
    weights = [1.0 / count] * count
    weights[-1] = 1.0 - math.fsum(weights[:-1])
    return weights


# ============================================================
# Lower bound: increasing reds
# ============================================================


def lower_bound_instance(n: int, num_reds: int, rng: np.random.Generator) -> PureInstance:
    if not 0 <= num_reds <= n - 1:
        raise ConfigError(f"num_reds must lie in [0, n-1], got {num_reds} for n={n}")
    value = _rank_values(n)
    small = n - num_reds - 1
    elements = [Element("gmax", value(n), 1.0, Color.GREEN)]
    elements += [Element(f"g{k}", value(k), 1.0, Color.GREEN) for k in range(1, small + 1)]
    times = np.sort(rng.random(num_reds)).tolist()
    red_arrivals = {}
    for j, t in enumerate(times):
        rid = f"r{j + 1}"
        elements.append(Element(rid, value(small + j + 1), 1.0, Color.RED))
        red_arrivals[rid] = t
    return PureInstance(tuple(elements), red_arrivals, meta={"family": "lower_bound", "num_reds": num_reds})


def gen_lower_bound_increasing_reds(
    n: int, num_reds: int, *, states: int | None = 64, seed: int = 0
) -> MixedInstance | PureInstance:
    """Reds increase in value with arrival time; g_max tops them, every other green is below.

    With ``states`` the continuous red-time distribution is approximated by
    that many sampled states; with ``states=None`` a single pure draw is
    returned (per-trial resampling mode).
    """
    if states is None:
        return lower_bound_instance(n, num_reds, make_rng(seed))
    instances = [lower_bound_instance(n, num_reds, make_rng(seed, k)) for k in range(states)]
    return MixedInstance(tuple(zip(_uniform_weights(states), instances)))


# ============================================================
# Hard single-item family
# ============================================================


def hard_instance(
    n: int,
    rng: np.random.Generator,
    *,
    easy_interval: int | None = None,
    gmax_above_reds: bool = False,
) -> PureInstance:
    if n < 8:
        raise ConfigError(f"hard family needs n >= 8, got {n}")
    schedule = OrdinalSchedule.for_n(n)
    intervals = [i for i in range(1, schedule.log_n + 1) if i != easy_interval]
    num_reds = len(intervals)
    num_greens = n - num_reds
    # Ranks: small greens, g2, then (g_max below or above) the reds.
    small = num_greens - 2
    g2_rank = small + 1
    if gmax_above_reds:
        red_ranks = list(range(g2_rank + 1, g2_rank + 1 + num_reds))
        gmax_rank = n
    else:
        gmax_rank = g2_rank + 1
        red_ranks = list(range(gmax_rank + 1, n + 1))

    elements = [Element(f"g{k}", float(k), 1.0, Color.GREEN) for k in range(1, small + 1)]
    elements.append(Element("g2", float(g2_rank), 1.0, Color.GREEN))
    elements.append(Element("gmax", float(gmax_rank), 1.0, Color.GREEN))
    red_arrivals = {}
    # Reds get decreasing values over time so later reds never beat an earlier threshold.
    for i, rank in zip(intervals, sorted(red_ranks, reverse=True)):
        lo, hi = schedule.checkpoints[i - 1], schedule.checkpoints[i]
        width = hi - lo
        t = lo + width * (0.25 + 0.5 * float(rng.random()))
        rid = f"r{i}"
        elements.append(Element(rid, float(rank), 1.0, Color.RED))
        red_arrivals[rid] = t
    inst = PureInstance(
        tuple(elements),
        red_arrivals,
        meta={"family": "hard_single_item", "easy_interval": easy_interval, "gmax_above_reds": gmax_above_reds},
    )
    if easy_interval is None and not hard_event_holds(inst, schedule):
        raise InstanceValidationError("generated hard instance does not satisfy the hard event")
    return inst


def gen_hard_single_item(
    n: int,
    *,
    seed: int = 0,
    easy_interval: int | None = None,
    gmax_above_reds: bool = False,
    states: int | None = None,
) -> PureInstance | MixedInstance:
    """One red above v(g2) in every interval I_1..I_logn (optionally leaving one interval red-free)."""
    if states is None:
        return hard_instance(n, make_rng(seed), easy_interval=easy_interval, gmax_above_reds=gmax_above_reds)
    instances = [
        hard_instance(n, make_rng(seed, k), easy_interval=easy_interval, gmax_above_reds=gmax_above_reds)
        for k in range(states)
    ]
    return MixedInstance(tuple(zip(_uniform_weights(states), instances)))


# ============================================================
# Knapsack families
# ============================================================


def _distinct(values: np.ndarray) -> np.ndarray:
    """Nudge values apart by a relative 1e-9 per position so no two coincide."""
    order = np.argsort(values, kind="stable")
    out = values.copy()
    out[order] *= 1.0 + 1e-9 * np.arange(len(values))
    return out


def gen_knapsack_family(kind: str, n: int, K: float, epsilon: float = 0.2, *, seed: int = 0, spikes: int = 2, heavy_levels: int = 2) -> PureInstance:
    """All-green knapsack instances.

    heavy: a few density classes with large total size each; light: many
    density classes with little mass each; heavy_light: half and half;
    spread: many small items of near-equal density; spiky: ``spikes`` large
    values (plus g_max) over a background far below V*/n^2.
    """
    if kind not in KNAPSACK_KINDS:
        raise ConfigError(f"unknown knapsack family {kind!r}; expected one of {', '.join(KNAPSACK_KINDS)}")
    if not K > 0:
        raise ConfigError(f"K must be positive, got {K}")
    rng = make_rng(seed)
    step = 1.0 + epsilon

    def heavy(count):
        sizes = rng.uniform(0.2, 1.0, count)
        classes = rng.integers(0, heavy_levels, count)
        density = step ** (-3.0 * classes) * rng.uniform(1.0, 1.0 + epsilon / 4, count)
        return sizes, density * sizes, classes

    def light(count):
        levels = max(heavy_levels + 1, 2 * math.ceil(math.log2(max(2, n)) / epsilon))
        sizes = rng.uniform(0.2, 1.0, count)
        classes = rng.integers(0, levels, count)
        density = step ** (-1.5 * classes) * rng.uniform(1.0, 1.0 + epsilon / 4, count)
        return sizes, density * sizes, classes + 1000

    meta: dict = {"family": "knapsack", "kind": kind, "K": K, "epsilon": epsilon}
    if kind == "heavy":
        sizes, values, classes = heavy(n)
    elif kind == "light":
        sizes, values, classes = light(n)
    elif kind == "heavy_light":
        s1, v1, c1 = heavy(n // 2)
        s2, v2, c2 = light(n - n // 2)
        sizes, values, classes = np.concatenate([s1, s2]), np.concatenate([v1, v2]), np.concatenate([c1, c2])
    elif kind == "spread":
        sizes = rng.uniform(1.5 / n, min(1.0, 100.0 / n), n)
        values = sizes * rng.uniform(0.9, 1.1, n)
        classes = np.zeros(n, dtype=int)
    else:
        if spikes + 1 > n:
            raise ConfigError(f"spiky family needs n > spikes, got n={n}, spikes={spikes}")
        spike_value = float(n) ** 2
        background = n - spikes - 1
        sizes = np.concatenate([np.full(spikes + 1, 0.5), rng.uniform(0.01, 0.05, background)])
        tiny = spike_value / (10.0 * float(n) ** 4)
        values = np.concatenate(
            [spike_value * (1 + np.arange(spikes + 1) / n), tiny * rng.uniform(0.5, 1.0, background)]
        )
        classes = np.concatenate([np.zeros(spikes + 1, dtype=int), np.ones(background, dtype=int)])
        meta["spikes"] = spikes
    values = _distinct(values)
    elements = tuple(
        Element(f"e{k}", float(v), float(min(1.0, s)), Color.GREEN) for k, (v, s) in enumerate(zip(values, sizes))
    )
    meta["classes"] = {f"e{k}": int(c) for k, c in enumerate(classes)}
    return PureInstance(elements, {}, meta=meta)


def s_star_by_level(inst: PureInstance, members, density_levels) -> dict[int, float]:
    """Total size of the optimum's members per density level."""
    out: dict[int, float] = {}
    for eid in members:
        e = inst.by_id[eid]
        level = density_levels.level_of(e.value / e.size)
        out[level] = out.get(level, 0.0) + e.size
    return out


# ============================================================
# Two-blue families
# ============================================================


def gen_two_blue_states(n: int, adversary: str = "uniform_reds", count: int = 8, *, seed: int = 0) -> TwoBlueMixed:
    if n < 8:
        raise ConfigError(f"two-blue families need n >= 8, got {n}")
    if adversary not in TWO_BLUE_ADVERSARIES:
        raise ConfigError(f"unknown two-blue adversary {adversary!r}; expected one of {', '.join(TWO_BLUE_ADVERSARIES)}")
    rng = make_rng(seed)
    values = np.arange(1, n + 1)
    states: list[tuple[int, tuple[int, ...], int, int]] = []

    if adversary == "posterior_flat":
        base = [int(v) for v in rng.permutation(values[:-1])]
        h = n // 2
        k = min(max(count, math.ceil(n ** (1 / 3) - 1e-9)), h)
        candidates = [int(c) for c in rng.choice(base[:h], size=k, replace=False)]
        for c in candidates:
            states.append((n, tuple(v for v in base if v != c), n, c))
    else:
        fixed_b2 = int(rng.integers(1, n)) if adversary == "posterior_concentrated" else None
        for _ in range(count):
            if adversary == "low_second_max":
                limit = n - top_count(n) - 1
                if limit < 1:
                    raise ConfigError(f"n={n} too small for low_second_max")
                b2 = int(rng.integers(1, limit + 1))
                b1 = int(rng.integers(b2 + 1, n + 1))
            elif fixed_b2 is not None:
                b2, b1 = fixed_b2, n
            else:
                b2, b1 = sorted(int(v) for v in rng.choice(values, size=2, replace=False))
            rest = [int(v) for v in rng.permutation(values) if v not in (b1, b2)]
            states.append((n, tuple(rest), b1, b2))

    weights = _uniform_weights(len(states))
    return TwoBlueMixed(
        n, tuple(TwoBlueState(w, pi, b1, b2) for w, (_, pi, b1, b2) in zip(weights, states))
    )


def gen_reduced_states(N: int, count: int, seed: int = 0) -> ReducedMixed:
    """Random reduced distribution with rational weights for exact good/bad checks."""
    if N < 2 or count < 1:
        raise ConfigError(f"need N >= 2 and count >= 1, got N={N}, count={count}")
    rng = make_rng(seed)
    raw = [int(w) for w in rng.integers(1, 11, size=count)]
    total = sum(raw)
    states = []
    for w in raw:
        perm = [int(v) for v in rng.permutation(np.arange(1, N + 1))]
        b = perm.pop(int(rng.integers(N)))
        states.append(ReducedState(Fraction(w, total), tuple(perm), b))
    return ReducedMixed(N, tuple(states))


# ============================================================
# Baselines
# ============================================================


def gen_pure_green(n: int, value_profile: str = "distinct_ranks", *, seed: int = 0, ratio: float = 2.0, size: float = 1.0) -> PureInstance:
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if value_profile not in GREEN_PROFILES:
        raise ConfigError(f"unknown value profile {value_profile!r}; expected one of {', '.join(GREEN_PROFILES)}")
    rng = make_rng(seed)
    if value_profile == "distinct_ranks":
        values = [float(v) for v in rng.permutation(np.arange(1, n + 1))]
    elif value_profile == "geometric":
        if not ratio > 1:
            raise ConfigError(f"geometric profile needs ratio > 1, got {ratio}")
        # Exponents are compressed so the largest value stays near 1e300.
        scale = min(1.0, 300.0 / math.log10(ratio) / max(1, n - 1))
        values = [ratio ** (float(k) * scale) for k in rng.permutation(np.arange(n))]
    else:
        values = (1.0 + 1e-3 * rng.random(n)).tolist()
        values = _distinct(np.array(values)).tolist()
    elements = tuple(Element(f"g{k}", v, size, Color.GREEN) for k, v in enumerate(values))
    return PureInstance(elements, {}, meta={"family": "pure_green", "profile": value_profile})


def gen_partition_green(n: int, parts: int = 2, capacity: int = 1, *, seed: int = 0) -> PureInstance:
    """All-green distinct ranks split round-robin (after shuffling) into ``parts`` parts."""
    if parts < 1 or parts > n:
        raise ConfigError(f"need 1 <= parts <= n, got parts={parts}, n={n}")
    base = gen_pure_green(n, "distinct_ranks", seed=seed)
    rng = make_rng(seed, 1)
    ids = [e.id for e in base.elements]
    order = rng.permutation(len(ids))
    layout = {f"P{p}": tuple(ids[k] for k in order[p::parts]) for p in range(parts)}
    capacities = dict.fromkeys(layout, int(capacity))
    return PureInstance(
        base.elements, {}, parts=layout, capacities=capacities,
        meta={"family": "partition_green", "parts": parts, "capacity": capacity},
    )


# ============================================================
# Registry
# ============================================================


def _lower_bound(spec: FamilySpec):
    p = dict(spec.params)
    states = p.get("states", 64)
    return gen_lower_bound_increasing_reds(
        spec.n, int(p.get("num_reds", 1)), states=None if states in (None, 0) else int(states), seed=spec.seed
    )


def _hard(spec: FamilySpec):
    p = dict(spec.params)
    easy = p.get("easy_interval")
    states = p.get("states")
    return gen_hard_single_item(
        spec.n,
        seed=spec.seed,
        easy_interval=None if easy is None else int(easy),
        gmax_above_reds=bool(p.get("gmax_above_reds", False)),
        states=None if states in (None, 0) else int(states),
    )


def _knapsack(spec: FamilySpec):
    p = dict(spec.params)
    return gen_knapsack_family(
        p.get("kind", "heavy"),
        spec.n,
        float(p.get("K", max(1.0, spec.n / 5))),
        float(p.get("epsilon", 0.2)),
        seed=spec.seed,
        spikes=int(p.get("spikes", 2)),
    )


def _two_blue(spec: FamilySpec):
    p = dict(spec.params)
    return gen_two_blue_states(spec.n, p.get("adversary", "uniform_reds"), int(p.get("count", 8)), seed=spec.seed)


def _pure_green(spec: FamilySpec):
    p = dict(spec.params)
    return gen_pure_green(
        spec.n, p.get("profile", "distinct_ranks"), seed=spec.seed,
        ratio=float(p.get("ratio", 2.0)), size=float(p.get("size", 1.0)),
    )


def _partition_green(spec: FamilySpec):
    p = dict(spec.params)
    return gen_partition_green(spec.n, int(p.get("parts", 2)), int(p.get("capacity", 1)), seed=spec.seed)


FAMILIES: dict[str, dict] = {
    "lower_bound": {"build": _lower_bound, "params": ["num_reds", "states"], "summary": "increasing reds, g_max on top"},
    "hard_single_item": {
        "build": _hard,
        "params": ["easy_interval", "gmax_above_reds", "states"],
        "summary": "a red above g2 in every checkpoint interval",
    },
    "knapsack": {"build": _knapsack, "params": ["kind", "K", "epsilon", "spikes"], "summary": "knapsack density families"},
    "two_blue": {"build": _two_blue, "params": ["adversary", "count"], "summary": "two-blue mixed states"},
    "pure_green": {"build": _pure_green, "params": ["profile", "ratio", "size"], "summary": "no reds (baseline)"},
    "partition_green": {"build": _partition_green, "params": ["parts", "capacity"], "summary": "all green, split into parts"},
}


def generate(spec: FamilySpec):
    entry = FAMILIES.get(spec.name)
    if entry is None:
        raise ConfigError(f"unknown family {spec.name!r}; expected one of {', '.join(sorted(FAMILIES))}")
    logger.debug("generating %s n=%d seed=%s params=%s", spec.name, spec.n, spec.seed, dict(spec.params))
    return entry["build"](spec)
