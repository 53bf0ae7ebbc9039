"""Confidence intervals and order-independent aggregates for Monte Carlo payoffs."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.stats import norm

Z_95 = float(norm.ppf(0.975))


def wilson_interval(successes: float, total: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a Bernoulli rate.

    ``successes`` may be fractional when trials carry exact per-trial
    probabilities (enumerated arms); the bounds are clipped to [0, 1].
    """
    if total <= 0:
        return (0.0, 1.0)
    z = Z_95 if confidence == 0.95 else float(norm.ppf(0.5 + confidence / 2))
    p = min(1.0, max(0.0, successes / total))
    z2 = z * z
    denom = 1.0 + z2 / total
    center = (p + z2 / (2.0 * total)) / denom
    margin = z * math.sqrt(p * (1.0 - p) / total + z2 / (4.0 * total * total)) / denom
    return (max(0.0, min(p, center - margin)), min(1.0, max(p, center + margin)))


@dataclass(frozen=True)
class TrialOutcome:
    index: int
    success: float
    value: float
    benchmark: float = 0.0
    arm: str | None = None
    collision: bool = False
    violated: bool = False
    audit_failed: bool = False


@dataclass(frozen=True)
class Summary:
    trials: int
    success_rate: float
    mean_value: float
    value_stderr: float
    benchmark: float
    ratio: float
    collisions: int
    violations: int
    audit_failures: int = 0


def summarize(outcomes) -> Summary:
    """Aggregate trial outcomes with exactly rounded sums, so the result ignores trial order."""
    outcomes = list(outcomes)
    t = len(outcomes)
    if t == 0:
        return Summary(0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0)
    mean_value = math.fsum(o.value for o in outcomes) / t
    if t > 1:
        var = math.fsum((o.value - mean_value) ** 2 for o in outcomes) / (t - 1)
        stderr = math.sqrt(var / t)
    else:
        stderr = 0.0
    bench = math.fsum(o.benchmark for o in outcomes)
    ratio = math.fsum(o.value for o in outcomes) / bench if bench > 0 else 0.0
    return Summary(
        trials=t,
        success_rate=math.fsum(o.success for o in outcomes) / t,
        mean_value=mean_value,
        value_stderr=stderr,
        benchmark=bench / t,
        ratio=ratio,
        collisions=sum(o.collision for o in outcomes),
        violations=sum(o.violated for o in outcomes),
        audit_failures=sum(o.audit_failed for o in outcomes),
    )
