"""Single-item algorithms.

value_max_logstar: value maximization with iterated-log checkpoints
ordinal_known_distribution: ordinal rule driven by the posterior of g2
two_blue_policy: four-armed rule for the two-blue model

Policy factories return ``OnlinePolicy`` objects for the harness; the
command functions below wrap inspection utilities for the CLI.
"""

from __future__ import annotations

from fractions import Fraction

from byzantine_secretary._response import from_exception, success
from byzantine_secretary.model._instances import load_instance, realize_stream
from byzantine_secretary.single_item._logstar import LogStarSchedule, LogStarThreshold, iterated_log, log_star
from byzantine_secretary.single_item._logstar import value_max_logstar
from byzantine_secretary.single_item._ordinal import (
    CandidateRecursion,
    CandidateState,
    CenterThreshold,
    SmallSetThreshold,
    as_mixed,
    center_index,
    ordinal_known_distribution,
    split_bot,
)
from byzantine_secretary.single_item._posterior import (
    OrdinalSchedule,
    PosteriorTable,
    SecondMaxPosterior,
    compute_posterior_second_max,
    hard_event_holds,
)
from byzantine_secretary.single_item._two_blue import (
    PosteriorArgmaxThreshold,
    RandomIntervalThreshold,
    ReducedMixed,
    ReducedState,
    TopQuarterThreshold,
    TwoBlueMixed,
    TwoBlueState,
    classify_input_good_bad,
    exact_two_blue_payoff,
    good_probability,
    load_two_blue,
    two_blue_from_dict,
    two_blue_policy,
    two_blue_posterior,
    two_blue_to_dict,
)

__all__ = [
    "CandidateRecursion",
    "CandidateState",
    "CenterThreshold",
    "LogStarSchedule",
    "LogStarThreshold",
    "OrdinalSchedule",
    "PosteriorArgmaxThreshold",
    "PosteriorTable",
    "RandomIntervalThreshold",
    "ReducedMixed",
    "ReducedState",
    "SecondMaxPosterior",
    "SmallSetThreshold",
    "TopQuarterThreshold",
    "TwoBlueMixed",
    "TwoBlueState",
    "as_mixed",
    "center_index",
    "classify_input_good_bad",
    "compute_posterior_second_max",
    "exact_two_blue_payoff",
    "good_input_probability",
    "good_probability",
    "hard_event_holds",
    "iterated_log",
    "load_two_blue",
    "log_star",
    "logstar_schedule",
    "ordinal_known_distribution",
    "posterior_second_max",
    "split_bot",
    "two_blue_exact",
    "two_blue_from_dict",
    "two_blue_policy",
    "two_blue_posterior",
    "two_blue_to_dict",
    "value_max_logstar",
]


# ============================================================
# Commands
# ============================================================


def logstar_schedule(*, n: int) -> dict:
    """Checkpoints and iterated logs used by value_logstar for a given n."""
    try:
        schedule = LogStarSchedule.for_n(n)
    except Exception as e:
        return from_exception(e)
    return success(
        {
            "n": n,
            "log_star": schedule.depth,
            "checkpoints": list(schedule.checkpoints),
            "iterated_logs": list(schedule.iterated),
        },
        f"log*({n}) = {schedule.depth}",
    )


def posterior_second_max(*, instance: str, seed: int = 0, checkpoint: int = 0, state: int = 0) -> dict:
    """Realize one state of a mixed instance on the grid and tabulate Pr[e = g2 | prefix]."""
    try:
        obj = as_mixed(load_instance(instance))
        stream = realize_stream(obj.states[state][1], seed, discretize=True)
        table = compute_posterior_second_max(obj, stream.arrivals, checkpoint)
    except Exception as e:
        return from_exception(e)
    return success(
        {
            "checkpoint": checkpoint,
            "probabilities": table.probabilities,
            "unseen": table.unseen,
            "mode": table.mode,
            "samples": table.samples,
        },
        f"posterior over {len(table.probabilities)} observed elements ({table.mode})",
    )


def two_blue_exact(*, instance: str) -> dict:
    """Exact success probability of two_blue on a two-blue mixed JSON file."""
    try:
        result = exact_two_blue_payoff(load_two_blue(instance))
    except Exception as e:
        return from_exception(e)
    return success(result, f"exact success = {result['success']:.6f}")


def good_input_probability(*, N: int = 8, states: int = 20, seed: int = 0) -> dict:
    """Exact Pr[good input] for a random rational-weight reduced distribution."""
    from byzantine_secretary.adversaries._families import gen_reduced_states

    try:
        mixed = gen_reduced_states(N, states, seed)
        p = good_probability(mixed)
    except Exception as e:
        return from_exception(e)
    bound = Fraction(49, 99)
    return success(
        {"N": N, "states": states, "seed": seed, "good_probability": str(p), "value": float(p), "bound_holds": p >= bound},
        f"Pr[good] = {float(p):.6f} (bound 49/99 {'holds' if p >= bound else 'VIOLATED'})",
    )
