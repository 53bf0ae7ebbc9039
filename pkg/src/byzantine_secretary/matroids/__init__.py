"""Matroid algorithms: partition matroids and general matroids behind an independence oracle."""

from __future__ import annotations

from byzantine_secretary._response import from_exception, success
from byzantine_secretary.matroids._general import GeneralMatroidPolicy, general_matroid_policy, level_span
from byzantine_secretary.matroids._oracles import (
    IndependenceOracle,
    PartitionMatroidOracle,
    PartitionStructure,
    UniformMatroidOracle,
    loglog,
    make_oracle,
    root_log,
    spot_check_matroid,
)
from byzantine_secretary.matroids._partition import PartitionPolicy, level_floors, partition_policy
from byzantine_secretary.model._instances import MixedInstance, load_instance

__all__ = [
    "GeneralMatroidPolicy",
    "IndependenceOracle",
    "PartitionMatroidOracle",
    "PartitionPolicy",
    "PartitionStructure",
    "UniformMatroidOracle",
    "check_oracle",
    "general_matroid_policy",
    "level_floors",
    "level_span",
    "loglog",
    "make_oracle",
    "partition_policy",
    "root_log",
    "spot_check_matroid",
]


def check_oracle(*, oracle: str, instance: str | None = None, ground: int = 8) -> dict:
    """Spot-check downward closure and exchange of an oracle on a small ground set."""
    try:
        inst = load_instance(instance) if instance else None
        if isinstance(inst, MixedInstance):
            inst = inst.states[0][1]
        built = make_oracle(oracle, inst)
        ids = [e.id for e in inst.elements] if inst is not None else [f"e{i}" for i in range(ground)]
        problems = spot_check_matroid(built, ids, max_ground=ground)
    except Exception as e:
        return from_exception(e)
    return success(
        {"oracle": oracle, "rank": built.rank, "ground": min(ground, len(ids)), "problems": problems},
        "oracle passes" if not problems else f"{len(problems)} problems found",
    )
