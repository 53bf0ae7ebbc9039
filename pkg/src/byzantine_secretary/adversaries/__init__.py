"""Adversary families: lower-bound, hard single-item, knapsack, two-blue and baseline instances."""

from __future__ import annotations

import json

from byzantine_secretary._response import from_exception, success
from byzantine_secretary.adversaries._families import (
    FAMILIES,
    GREEN_PROFILES,
    KNAPSACK_KINDS,
    TWO_BLUE_ADVERSARIES,
    FamilySpec,
    gen_hard_single_item,
    gen_knapsack_family,
    gen_lower_bound_increasing_reds,
    gen_partition_green,
    gen_pure_green,
    gen_reduced_states,
    gen_two_blue_states,
    generate,
    hard_instance,
    lower_bound_instance,
    s_star_by_level,
)
from byzantine_secretary.model._instances import MixedInstance, instance_to_dict, mixed_to_dict
from byzantine_secretary.single_item._two_blue import TwoBlueMixed, two_blue_to_dict

__all__ = [
    "FAMILIES",
    "GREEN_PROFILES",
    "KNAPSACK_KINDS",
    "TWO_BLUE_ADVERSARIES",
    "FamilySpec",
    "family_to_dict",
    "gen_hard_single_item",
    "gen_knapsack_family",
    "gen_lower_bound_increasing_reds",
    "gen_partition_green",
    "gen_pure_green",
    "gen_reduced_states",
    "gen_two_blue_states",
    "generate",
    "generate_family",
    "hard_instance",
    "list_families",
    "lower_bound_instance",
    "s_star_by_level",
]


def family_to_dict(obj) -> dict:
    if isinstance(obj, TwoBlueMixed):
        return two_blue_to_dict(obj)
    if isinstance(obj, MixedInstance):
        return mixed_to_dict(obj)
    return instance_to_dict(obj)


# ============================================================
# Commands
# ============================================================


def list_families() -> dict:
    """Registered families and the parameters each accepts."""
    data = {name: {"params": entry["params"], "summary": entry["summary"]} for name, entry in FAMILIES.items()}
    return success(data, f"{len(data)} families")


def generate_family(*, family: str, n: int, seed: int = 0, out: str | None = None, params: dict | None = None) -> dict:
    """Generate an instance from a registered family; write JSON to ``out`` when given."""
    try:
        obj = generate(FamilySpec(family, n, params or {}, seed))
        payload = family_to_dict(obj)
        if out:
            with open(out, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=2)
    except Exception as e:
        return from_exception(e)
    kind = "two_blue" if isinstance(obj, TwoBlueMixed) else "mixed" if isinstance(obj, MixedInstance) else "pure"
    data = {"family": family, "n": n, "seed": seed, "kind": kind, "out": out}
    if not out:
        data["instance"] = payload
    return success(data, f"Generated {kind} {family} instance (n={n})" + (f" -> {out}" if out else ""))
