"""Building-block policies reused by every algorithm family.

Construct with the factories below and execute with
``byzantine_secretary.model.run_policy``.
"""

from __future__ import annotations

from byzantine_secretary.subroutines._policies import (
    Dynkin,
    IntervalWindow,
    RandomElement,
    TwoCheckpoints,
    dynkin,
    dynkin_time,
    select_random_element,
    two_checkpoints,
)

__all__ = [
    "Dynkin",
    "IntervalWindow",
    "RandomElement",
    "TwoCheckpoints",
    "dynkin",
    "dynkin_time",
    "select_random_element",
    "two_checkpoints",
]
