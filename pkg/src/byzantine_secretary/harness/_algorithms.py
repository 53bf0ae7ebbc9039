"""Algorithm registry: name -> policy factory, feasibility, benchmark and default payoff.

Names are plain (``dynkin``) or carry arguments after colons:
``two_checkpoint:T1,T2``, ``filter:<base>:r,r'``, ``general_matroid:<oracle>``,
``guess_n:<algo>`` and ``half_n:<algo>``.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field, replace

from byzantine_secretary._errors import ConfigError, UnknownAlgorithmError
from byzantine_secretary.harness._estimation import GuessN, HalfN
from byzantine_secretary.matroids._general import GeneralMatroidPolicy
from byzantine_secretary.matroids._oracles import PartitionStructure, make_oracle
from byzantine_secretary.matroids._partition import PartitionPolicy
from byzantine_secretary.model._execution import (
    Feasibility,
    KnapsackCapacity,
    MatroidFeasibility,
    OnlinePolicy,
    PartitionCapacity,
    SingleItem,
    UniformCapacity,
)
from byzantine_secretary.model._instances import MixedInstance, PureInstance
from byzantine_secretary.model._oracle import BenchmarkSpec
from byzantine_secretary.multi_select._knapsack import KnapsackCore, KnapsackGeneral, KnapsackParams
from byzantine_secretary.multi_select._uniform import SubsampleFilter, extended_rank, uniform_constant, uniform_doubling
from byzantine_secretary.single_item._logstar import value_max_logstar
from byzantine_secretary.single_item._ordinal import as_mixed, ordinal_known_distribution
from byzantine_secretary.single_item._posterior import SecondMaxPosterior
from byzantine_secretary.single_item._two_blue import TwoBlueMixed, two_blue_policy
from byzantine_secretary.subroutines._policies import (
    Dynkin,
    IntervalWindow,
    RandomElement,
    TwoCheckpoints,
    dynkin_time,
)

logger = logging.getLogger("byzantine_secretary.harness")

PAYOFFS = ("ordinal_success", "value_ratio", "select_max")


@dataclass
class AlgorithmContext:
    """What a factory may look at: n, flat params, the source and a per-worker cache."""

    n: int
    params: Mapping = field(default_factory=dict)
    source: PureInstance | MixedInstance | TwoBlueMixed | None = None
    cache: dict = field(default_factory=dict)

    def param(self, key, default=None, cast=None):
        value = self.params.get(key, default)
        if value is None:
            return None
        return cast(value) if cast else value

    def pure(self) -> PureInstance:
        """A representative pure instance (the first state of a mixed source)."""
        if isinstance(self.source, PureInstance):
            return self.source
        if isinstance(self.source, MixedInstance):
            return self.source.states[0][1]
        raise ConfigError("this algorithm needs a pure or mixed instance")

    def capacity(self) -> float:
        K = self.params.get("K")
        if K is None and self.source is not None and not isinstance(self.source, TwoBlueMixed):
            K = self.pure().meta.get("K")
        if K is None:
            raise ConfigError("knapsack algorithms need K (param --K or instance meta)")
        return float(K)

    def rank(self) -> int:
        r = self.params.get("r")
        if r is None:
            raise ConfigError("this algorithm needs the rank r (param --r)")
        return int(r)


@dataclass(frozen=True)
class Algorithm:
    name: str
    build: Callable[[AlgorithmContext], OnlinePolicy]
    feasibility: Callable[[AlgorithmContext], Feasibility]
    benchmark: Callable[[AlgorithmContext], BenchmarkSpec | None]
    payoff: str = "ordinal_success"
    summary: str = ""

    def policy(self, ctx: AlgorithmContext) -> OnlinePolicy:
        return self.build(ctx)


# ============================================================
# Shared pieces
# ============================================================


def _single_item(ctx):
    return SingleItem()


def _single_item_benchmark(ctx):
    return BenchmarkSpec.single_item()


def _knapsack_params(ctx: AlgorithmContext, n: int) -> KnapsackParams:
    K = ctx.capacity()
    epsilon = ctx.param("epsilon", 0.2, float)
    overrides = {k: float(ctx.params[k]) for k in ("delta", "c", "H", "K_floor", "reject_prob") if k in ctx.params}
    if ctx.params.get("desk", False) in (True, "true", "1", 1):
        return KnapsackParams.for_desk(n, K, epsilon, **overrides)
    return KnapsackParams.resolve(n, K, epsilon=epsilon, **overrides)


def _knapsack_feasibility(ctx):
    return KnapsackCapacity(ctx.capacity())


def _knapsack_benchmark(ctx):
    return BenchmarkSpec.knapsack(ctx.capacity())


def _uniform_benchmark(ctx):
    return BenchmarkSpec.uniform(ctx.rank())


def _ordinal_engine(ctx: AlgorithmContext) -> SecondMaxPosterior:
    engine = ctx.cache.get("posterior_engine")
    if engine is None:
        if not isinstance(ctx.source, (PureInstance, MixedInstance)):
            raise ConfigError("ordinal_knowndist needs a pure or mixed instance as its known distribution")
        engine = SecondMaxPosterior(as_mixed(ctx.source))
        ctx.cache["posterior_engine"] = engine
    return engine


def _two_blue_source(ctx) -> TwoBlueMixed:
    if not isinstance(ctx.source, TwoBlueMixed):
        raise ConfigError("two_blue needs a two-blue mixed instance")
    return ctx.source


def _partition_structure(ctx) -> PartitionStructure:
    structure = ctx.cache.get("partition_structure")
    if structure is None:
        structure = PartitionStructure.from_instance(ctx.pure())
        ctx.cache["partition_structure"] = structure
    return structure


def _oracle(ctx, spec: str):
    key = f"oracle:{spec}"
    if key not in ctx.cache:
        pure = None if isinstance(ctx.source, TwoBlueMixed) or ctx.source is None else ctx.pure()
        ctx.cache[key] = make_oracle(spec, pure)
    return ctx.cache[key]


# ============================================================
# Registry
# ============================================================


_REGISTRY: dict[str, Algorithm] = {
    "random": Algorithm(
        "random", lambda ctx: RandomElement(ctx.n), _single_item, _single_item_benchmark,
        summary="select the k-th arrival for uniform k",
    ),
    "dynkin": Algorithm(
        "dynkin", lambda ctx: Dynkin(ctx.n), _single_item, _single_item_benchmark, "select_max",
        summary="skip n/e arrivals, take the next record",
    ),
    "dynkin_time": Algorithm(
        "dynkin_time", lambda ctx: dynkin_time(),
        _single_item, _single_item_benchmark, "select_max",
        summary="observe [0, 1/e], take the next record",
    ),
    "value_logstar": Algorithm(
        "value_logstar", lambda ctx: value_max_logstar(ctx.n), _single_item, _single_item_benchmark, "value_ratio",
        summary="value maximization with iterated-log checkpoints",
    ),
    "ordinal_knowndist": Algorithm(
        "ordinal_knowndist", lambda ctx: ordinal_known_distribution(as_mixed(ctx.source), engine=_ordinal_engine(ctx)),
        _single_item, _single_item_benchmark,
        summary="posterior-driven ordinal rule for a known mixed instance",
    ),
    "two_blue": Algorithm(
        "two_blue", lambda ctx: two_blue_policy(_two_blue_source(ctx), ctx.n), _single_item, lambda ctx: None,
        summary="four-armed rule for the two-blue model",
    ),
    "knapsack_core": Algorithm(
        "knapsack_core", lambda ctx: KnapsackCore(_knapsack_params(ctx, ctx.n)),
        _knapsack_feasibility, _knapsack_benchmark, "value_ratio",
        summary="cascading and dedicated density budgets",
    ),
    "knapsack_general": Algorithm(
        "knapsack_general", lambda ctx: KnapsackGeneral(_knapsack_params(ctx, ctx.n)),
        _knapsack_feasibility, _knapsack_benchmark, "value_ratio",
        summary="random element, rescaled core and value slots",
    ),
    "uniform_constant": Algorithm(
        "uniform_constant", lambda ctx: uniform_constant(ctx.n, ctx.rank()),
        lambda ctx: UniformCapacity(ctx.rank()), _uniform_benchmark, "value_ratio",
        summary="doubling thresholds subsampled to r selections",
    ),
    "uniform_doubling": Algorithm(
        "uniform_doubling", lambda ctx: uniform_doubling(ctx.n, ctx.rank()),
        lambda ctx: UniformCapacity(extended_rank(ctx.n, ctx.rank())), _uniform_benchmark, "value_ratio",
        summary="doubling thresholds, up to r + log n selections",
    ),
    "partition": Algorithm(
        "partition", lambda ctx: PartitionPolicy(_partition_structure(ctx), ctx.n),
        lambda ctx: PartitionCapacity(_partition_structure(ctx).parts, _partition_structure(ctx).capacities),
        lambda ctx: BenchmarkSpec.partition(), "value_ratio",
        summary="per-part value levels over log log n checkpoints",
    ),
}

_PREFIXED = {
    "two_checkpoint": "two_checkpoint:T1,T2",
    "filter": "filter:<base>:r,r'",
    "general_matroid": "general_matroid:<oracle>",
    "guess_n": "guess_n:<algo>",
    "half_n": "half_n:<algo>",
}


def algorithm_names() -> list[str]:
    return sorted(_REGISTRY) + sorted(_PREFIXED.values())


def algorithm_catalog() -> dict[str, dict]:
    out = {name: {"payoff": a.payoff, "summary": a.summary} for name, a in _REGISTRY.items()}
    for form in _PREFIXED.values():
        out[form] = {"payoff": "inherited" if form.startswith(("filter", "guess", "half")) else "ordinal_success"}
    return out


def _floats(arg: str, count: int, name: str) -> list[float]:
    try:
        values = [float(x) for x in arg.split(",")]
    except ValueError as e:
        raise ConfigError(f"{name}: expected {count} comma-separated numbers, got {arg!r}") from e
    if len(values) != count:
        raise ConfigError(f"{name}: expected {count} comma-separated numbers, got {arg!r}")
    return values


def resolve_algorithm(name: str) -> Algorithm:
    """Look up a registered algorithm, parsing argument-carrying names."""
    if name in _REGISTRY:
        return _REGISTRY[name]
    head, _, rest = name.partition(":")

    if head == "two_checkpoint" and rest:
        T1, T2 = _floats(rest, 2, "two_checkpoint")
        window = IntervalWindow(T1, T2)
        return Algorithm(name, lambda ctx: TwoCheckpoints(window), _single_item, _single_item_benchmark)

    if head == "filter" and rest:
        base_name, _, counts = rest.rpartition(":")
        if not base_name:
            raise ConfigError(f"filter needs a base algorithm: {name!r}")
        r, r_prime = (int(v) for v in _floats(counts, 2, "filter"))
        base = resolve_algorithm(base_name)

        def build_filter(ctx):
            policy = SubsampleFilter(base.build(ctx), r, r_prime)
            policy.name = name
            return policy

        return Algorithm(
            name, build_filter, lambda ctx: UniformCapacity(r), lambda ctx: BenchmarkSpec.uniform(r), "value_ratio"
        )

    if head == "general_matroid" and rest:
        return Algorithm(
            name,
            lambda ctx: GeneralMatroidPolicy(_oracle(ctx, rest), ctx.n),
            lambda ctx: MatroidFeasibility(_oracle(ctx, rest)),
            lambda ctx: BenchmarkSpec.general_matroid(_oracle(ctx, rest)),
            "value_ratio",
        )

    if head in ("guess_n", "half_n") and rest:
        inner = resolve_algorithm(rest)
        wrapper = GuessN if head == "guess_n" else HalfN

        def build_wrapped(ctx):
            return wrapper(lambda n: inner.build(replace(ctx, n=n)), inner.name)

        return Algorithm(name, build_wrapped, inner.feasibility, inner.benchmark, inner.payoff, inner.summary)

    raise UnknownAlgorithmError(
        f"unknown algorithm {name!r}",
        details={"available": algorithm_names()},
    )
