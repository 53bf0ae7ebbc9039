"""Multiple-selection algorithms: knapsack budgets, the uniform-matroid doubling rule and subsampling."""

from __future__ import annotations

from byzantine_secretary._response import from_exception, success
from byzantine_secretary.multi_select._knapsack import (
    BudgetLedger,
    DensityLevels,
    KnapsackCore,
    KnapsackGeneral,
    KnapsackParams,
    LedgerDecline,
    LedgerEvent,
    ValueSlots,
    audit_budget_conservation,
    audit_dedicated_dichotomy,
    audit_never_skip_heavy,
    knapsack_core,
    knapsack_general,
    level_count,
)
from byzantine_secretary.multi_select._uniform import (
    DoublingThreshold,
    SubsampleFilter,
    UniformDoubling,
    extended_rank,
    subsample_filter,
    uniform_constant,
    uniform_doubling,
)

__all__ = [
    "BudgetLedger",
    "DensityLevels",
    "DoublingThreshold",
    "KnapsackCore",
    "KnapsackGeneral",
    "KnapsackParams",
    "LedgerDecline",
    "LedgerEvent",
    "SubsampleFilter",
    "UniformDoubling",
    "ValueSlots",
    "audit_budget_conservation",
    "audit_dedicated_dichotomy",
    "audit_never_skip_heavy",
    "extended_rank",
    "knapsack_core",
    "knapsack_general",
    "knapsack_params",
    "level_count",
    "subsample_filter",
    "uniform_constant",
    "uniform_doubling",
]


def knapsack_params(
    *,
    n: int,
    K: float,
    epsilon: float = 0.2,
    delta: float | None = None,
    c: float = 1.0,
    H: float | None = None,
    K_floor: float | None = None,
    desk: bool = False,
) -> dict:
    """Resolved knapsack constants (levels, intervals, H, floor) for given n and K."""
    overrides = {k: v for k, v in {"delta": delta, "H": H, "K_floor": K_floor}.items() if v is not None}
    try:
        if desk:
            params = KnapsackParams.for_desk(n, K, epsilon, c=c, **overrides)
        else:
            params = KnapsackParams.resolve(n, K, epsilon=epsilon, c=c, **overrides)
    except Exception as e:
        return from_exception(e)
    data = params.to_dict()
    below = params.K < params.K_floor
    return success(data, f"L={params.levels}, 1/delta={params.intervals}" + (" (K below floor)" if below else ""))
