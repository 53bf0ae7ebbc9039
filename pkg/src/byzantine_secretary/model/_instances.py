"""Instance representation, stream realization and time discretization.

A pure instance is what the adversary commits to: the elements (values,
sizes, hidden colors) and the arrival times of the red elements. Green
arrival times are drawn per trial when the instance is realized into a
stream. Policies only ever see ``Arrival`` tuples; colors stay on the
``RealizedStream`` for the evaluator.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Union

import numpy as np

from byzantine_secretary._errors import InstanceValidationError

logger = logging.getLogger("byzantine_secretary.model")

WEIGHT_TOLERANCE = 1e-12
MAX_GREEN_RESAMPLES = 16

SeedLike = Union[int, Sequence[int], np.random.SeedSequence]


# ============================================================
# Seeds
# ============================================================


def seed_words(seed: SeedLike) -> list[int]:
    """Flatten a seed into a list of non-negative ints for ``SeedSequence``."""
    if isinstance(seed, np.random.SeedSequence):
        entropy = seed.entropy
        words = list(entropy) if isinstance(entropy, (list, tuple)) else [int(entropy)]
        return words + [int(k) for k in seed.spawn_key]
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(s) for s in seed]


def make_rng(seed: SeedLike, *extra: int) -> np.random.Generator:
    """Counter-based generator: ``make_rng((exp_seed, trial), 1)`` is reproducible in isolation."""
    return np.random.default_rng(seed_words(seed) + [int(e) for e in extra])


# ============================================================
# Elements and instances
# ============================================================


class Color(str, enum.Enum):
    GREEN = "green"
    RED = "red"


@dataclass(frozen=True)
class Element:
    id: str
    value: float
    size: float = 1.0
    color: Color = Color.GREEN

    def __post_init__(self):
        try:
            object.__setattr__(self, "color", Color(self.color))
        except ValueError as e:
            raise InstanceValidationError(f"element {self.id!r}: unknown color {self.color!r}") from e
        if not self.value > 0:
            raise InstanceValidationError(f"element {self.id!r}: value must be strictly positive, got {self.value}")
        if not 0 < self.size <= 1:
            raise InstanceValidationError(f"element {self.id!r}: size must lie in (0, 1], got {self.size}")

    @property
    def is_green(self) -> bool:
        return self.color is Color.GREEN


@dataclass(frozen=True, eq=False)
class PureInstance:
    """The adversary's pure strategy: elements plus red arrival times.

    ``red_order`` optionally fixes the presentation order of reds that share
    an arrival time; without it, equal red times are rejected. ``parts`` and
    ``capacities`` carry a partition-matroid structure when the instance is
    meant for the partition algorithms.
    """

    elements: tuple[Element, ...]
    red_arrivals: Mapping[str, float]
    red_order: tuple[str, ...] = ()
    parts: Mapping[str, tuple[str, ...]] | None = None
    capacities: Mapping[str, int] | None = None
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "red_arrivals", {str(k): float(v) for k, v in self.red_arrivals.items()})
        object.__setattr__(self, "red_order", tuple(self.red_order))
        if self.parts is not None:
            object.__setattr__(self, "parts", {str(p): tuple(ids) for p, ids in self.parts.items()})
        self._validate()

    def _validate(self):
        ids = [e.id for e in self.elements]
        if len(set(ids)) != len(ids):
            raise InstanceValidationError("element ids must be unique")
        values = [e.value for e in self.elements]
        if len(set(values)) != len(values):
            raise InstanceValidationError("element values must be pairwise distinct")
        if not any(e.is_green for e in self.elements):
            raise InstanceValidationError("instance needs at least one green element")

        red_ids = {e.id for e in self.elements if not e.is_green}
        timed = set(self.red_arrivals)
        if timed != red_ids:
            missing = sorted(red_ids - timed)
            extra = sorted(timed - red_ids)
            raise InstanceValidationError(
                f"every red element needs exactly one arrival time (missing={missing}, not red={extra})"
            )
        for rid, t in self.red_arrivals.items():
            if not 0.0 <= t <= 1.0:
                raise InstanceValidationError(f"red {rid!r}: arrival time {t} outside [0, 1]")

        if self.red_order:
            if sorted(self.red_order) != sorted(red_ids):
                raise InstanceValidationError("red_order must list every red element exactly once")
            times = [self.red_arrivals[r] for r in self.red_order]
            if any(b < a for a, b in zip(times, times[1:])):
                raise InstanceValidationError("red_order contradicts the red arrival times")
        else:
            seen: dict[float, str] = {}
            for rid, t in self.red_arrivals.items():
                if t in seen:
                    raise InstanceValidationError(
                        f"reds {seen[t]!r} and {rid!r} share arrival time {t}; give an explicit red_order"
                    )
                seen[t] = rid

        if self.parts is not None:
            covered = [i for members in self.parts.values() for i in members]
            if len(covered) != len(set(covered)) or set(covered) != set(ids):
                raise InstanceValidationError("parts must be disjoint and cover every element")
            caps = self.capacities or {}
            if set(caps) != set(self.parts) or any(int(c) < 1 for c in caps.values()):
                raise InstanceValidationError("every part needs a capacity >= 1")

    # -- accessors ------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.elements)

    @cached_property
    def by_id(self) -> dict[str, Element]:
        return {e.id: e for e in self.elements}

    @cached_property
    def greens(self) -> tuple[Element, ...]:
        """Green elements in non-increasing value order (g_max first)."""
        return tuple(sorted((e for e in self.elements if e.is_green), key=lambda e: e.value, reverse=True))

    @cached_property
    def reds(self) -> tuple[Element, ...]:
        return tuple(e for e in self.elements if not e.is_green)

    @property
    def g_max(self) -> Element:
        return self.greens[0]

    @property
    def g2(self) -> Element | None:
        return self.greens[1] if len(self.greens) > 1 else None

    def red_rank(self, red_id: str) -> int:
        """Tie-break rank among reds sharing a time."""
        if self.red_order:
            return self.red_order.index(red_id)
        return 0

    def with_values(self, transform) -> PureInstance:
        """Copy with every value mapped through ``transform`` (must stay positive and distinct)."""
        elements = tuple(
            Element(e.id, float(transform(e.value)), e.size, e.color) for e in self.elements
        )
        return PureInstance(elements, self.red_arrivals, self.red_order, self.parts, self.capacities, dict(self.meta))


@dataclass(frozen=True, eq=False)
class MixedInstance:
    """A finite distribution over pure instances sharing the same n."""

    states: tuple[tuple[float, PureInstance], ...]

    def __post_init__(self):
        states = tuple((float(w), inst) for w, inst in self.states)
        object.__setattr__(self, "states", states)
        if not states:
            raise InstanceValidationError("mixed instance needs at least one state")
        if any(w <= 0 for w, _ in states):
            raise InstanceValidationError("state weights must be strictly positive")
        total = math.fsum(w for w, _ in states)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise InstanceValidationError(f"state weights must sum to 1 (got {total!r})")
        sizes = {inst.n for _, inst in states}
        if len(sizes) != 1:
            raise InstanceValidationError(f"all states must share the same n (got {sorted(sizes)})")

    @classmethod
    def uniform(cls, instances: Sequence[PureInstance]) -> MixedInstance:
        instances = list(instances)
        if not instances:
            raise InstanceValidationError("mixed instance needs at least one state")
        weights = [1.0 / len(instances)] * len(instances)
        # Push rounding residue into the last weight so the sum is exact.
        weights[-1] = 1.0 - math.fsum(weights[:-1])
        return cls(tuple(zip(weights, instances)))

    @property
    def n(self) -> int:
        return self.states[0][1].n

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.states])

    @property
    def instances(self) -> list[PureInstance]:
        return [inst for _, inst in self.states]


# ============================================================
# Streams
# ============================================================


class Arrival(NamedTuple):
    """What a policy sees about one arrival. Colors are deliberately absent."""

    index: int
    time: float
    id: str
    value: float
    size: float


class RealizedStream:
    """One trial's time-sorted arrival sequence.

    Colors are kept privately and exposed only through ``color_of`` for the
    evaluator; ``run_policy`` hands policies bare ``Arrival`` tuples.
    """

    __slots__ = ("arrivals", "_colors", "discretized", "grid_collision")

    def __init__(
        self,
        arrivals: Sequence[Arrival],
        colors: Mapping[str, Color],
        *,
        discretized: bool = False,
        grid_collision: bool = False,
    ):
        self.arrivals = tuple(arrivals)
        self._colors = dict(colors)
        self.discretized = discretized
        self.grid_collision = grid_collision
        times = [a.time for a in self.arrivals]
        if any(b < a for a, b in zip(times, times[1:])):
            raise InstanceValidationError("stream arrivals must be sorted by time")

    def __len__(self) -> int:
        return len(self.arrivals)

    def __iter__(self):
        return iter(self.arrivals)

    def color_of(self, element_id: str) -> Color:
        return self._colors[element_id]

    def green_ids(self) -> list[str]:
        return [a.id for a in self.arrivals if self._colors[a.id] is Color.GREEN]

    def recolored(self, colors: Mapping[str, Color]) -> RealizedStream:
        """Same arrivals, different hidden colors."""
        merged = {**self._colors, **{k: Color(v) for k, v in colors.items()}}
        return RealizedStream(
            self.arrivals, merged, discretized=self.discretized, grid_collision=self.grid_collision
        )

    def with_values(self, transform) -> RealizedStream:
        arrivals = [a._replace(value=float(transform(a.value))) for a in self.arrivals]
        return RealizedStream(
            arrivals, self._colors, discretized=self.discretized, grid_collision=self.grid_collision
        )


def grid_size(n: int) -> int:
    """Number of grid steps used by the time discretization (n cubed)."""
    return max(1, n) ** 3


def discretize_time(t: float, n: int) -> float:
    """Map ``t`` to the grid point floor(n^3 * t) / n^3."""
    big_n = grid_size(n)
    return math.floor(big_n * t) / big_n


def realize_stream(inst: PureInstance, rng_seed: SeedLike, *, discretize: bool = False) -> RealizedStream:
    """Draw green arrival times and merge them with the fixed red times.

    Greens get i.i.d. U[0,1] times from a generator seeded by ``rng_seed``.
    An exact time collision involving a green (possible only through
    floating point) triggers a resample with an incremented sub-seed.
    With ``discretize`` the presented times are snapped to the n^3 grid;
    two elements landing on the same grid point mark the stream as a
    grid collision, which the evaluator scores as a loss.
    """
    greens = [e for e in inst.elements if e.is_green]
    if not greens:
        raise InstanceValidationError("instance needs at least one green element")
    red_times = {rid: t for rid, t in inst.red_arrivals.items()}
    red_time_set = set(red_times.values())

    for attempt in range(MAX_GREEN_RESAMPLES):
        rng = make_rng(rng_seed, attempt)
        green_times = rng.random(len(greens))
        if len(set(green_times.tolist())) == len(greens) and not red_time_set.intersection(green_times.tolist()):
            break
        logger.debug("green arrival time collision, resampling (attempt %d)", attempt + 1)
    else:
        raise InstanceValidationError(f"could not draw collision-free green times in {MAX_GREEN_RESAMPLES} attempts")

    timed: list[tuple[float, int, Element]] = []
    for e, t in zip(greens, green_times.tolist()):
        timed.append((t, 0, e))
    for e in inst.reds:
        timed.append((red_times[e.id], inst.red_rank(e.id), e))
    timed.sort(key=lambda item: (item[0], item[1]))

    collision = False
    if discretize:
        grid = [discretize_time(t, inst.n) for t, _, _ in timed]
        collision = len(set(grid)) != len(grid)
        if collision:
            logger.debug("grid collision among %d arrivals (N=%d)", len(grid), grid_size(inst.n))
    else:
        grid = [t for t, _, _ in timed]

    arrivals = [Arrival(i, g, e.id, e.value, e.size) for i, (g, (_, _, e)) in enumerate(zip(grid, timed))]
    colors = {e.id: e.color for e in inst.elements}
    return RealizedStream(arrivals, colors, discretized=discretize, grid_collision=collision)


# ============================================================
# JSON codec
# ============================================================


def instance_to_dict(inst: PureInstance) -> dict:
    data = {
        "n": inst.n,
        "elements": [
            {"id": e.id, "value": e.value, "size": e.size, "color": e.color.value} for e in inst.elements
        ],
        "red_arrivals": dict(inst.red_arrivals),
        "meta": dict(inst.meta),
    }
    if inst.red_order:
        data["red_order"] = list(inst.red_order)
    if inst.parts is not None:
        data["parts"] = {p: list(ids) for p, ids in inst.parts.items()}
        data["capacities"] = {p: int(c) for p, c in (inst.capacities or {}).items()}
    return data


def instance_from_dict(data: Mapping) -> PureInstance:
    try:
        elements = tuple(
            Element(
                id=str(raw["id"]),
                value=float(raw["value"]),
                size=float(raw.get("size", 1.0)),
                color=raw.get("color", "green"),
            )
            for raw in data["elements"]
        )
        inst = PureInstance(
            elements=elements,
            red_arrivals=data.get("red_arrivals", {}),
            red_order=tuple(data.get("red_order", ())),
            parts=data.get("parts"),
            capacities={str(p): int(c) for p, c in data["capacities"].items()} if "capacities" in data else None,
            meta=dict(data.get("meta", {})),
        )
    except (KeyError, TypeError) as e:
        raise InstanceValidationError(f"malformed instance JSON: {e}") from e
    if "n" in data and int(data["n"]) != inst.n:
        raise InstanceValidationError(f"declared n={data['n']} but {inst.n} elements given")
    return inst


def mixed_to_dict(mixed: MixedInstance) -> dict:
    return {"states": [{"weight": w, "instance": instance_to_dict(inst)} for w, inst in mixed.states]}


def mixed_from_dict(data: Mapping) -> MixedInstance:
    try:
        states = tuple((float(s["weight"]), instance_from_dict(s["instance"])) for s in data["states"])
    except (KeyError, TypeError) as e:
        raise InstanceValidationError(f"malformed mixed instance JSON: {e}") from e
    return MixedInstance(states)


def load_instance(path: str) -> PureInstance | MixedInstance:
    """Read a pure or mixed instance JSON file."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if "states" in data:
        return mixed_from_dict(data)
    return instance_from_dict(data)


def dump_instance(obj: PureInstance | MixedInstance, path: str) -> None:
    data = mixed_to_dict(obj) if isinstance(obj, MixedInstance) else instance_to_dict(obj)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2)
