"""Experiment harness: algorithm registry, seeded Monte Carlo runs, n-estimation and reports."""

from __future__ import annotations

import json
import math
from collections import Counter

from byzantine_secretary._response import from_exception, success
from byzantine_secretary.harness._algorithms import (
    PAYOFFS,
    Algorithm,
    AlgorithmContext,
    algorithm_catalog,
    algorithm_names,
    resolve_algorithm,
)
from byzantine_secretary.harness._estimation import (
    MIN_GUESS,
    GuessN,
    HalfN,
    estimate_n_first_half,
    guess_mass,
    guess_weight,
    normalizer,
    sample_n_guess,
    tail_mass,
)
from byzantine_secretary.harness._experiment import (
    ExperimentConfig,
    ExperimentReport,
    load_source,
    run_experiment,
    score,
    stratified_counts,
    trial_plan,
)
from byzantine_secretary.harness._report import COLUMNS, read_csv, render_csv, render_markdown, write_csv
from byzantine_secretary.harness._stats import Summary, TrialOutcome, summarize, wilson_interval
from byzantine_secretary.model._instances import MixedInstance, load_instance, make_rng, realize_stream

__all__ = [
    "COLUMNS",
    "MIN_GUESS",
    "PAYOFFS",
    "Algorithm",
    "AlgorithmContext",
    "ExperimentConfig",
    "ExperimentReport",
    "GuessN",
    "HalfN",
    "Summary",
    "TrialOutcome",
    "algorithm_catalog",
    "algorithm_names",
    "estimate_n",
    "estimate_n_first_half",
    "guess_mass",
    "guess_weight",
    "list_algorithms",
    "load_source",
    "n_guess",
    "normalizer",
    "read_csv",
    "render_csv",
    "render_markdown",
    "report",
    "resolve_algorithm",
    "run",
    "run_experiment",
    "sample_n_guess",
    "score",
    "stratified_counts",
    "summarize",
    "tail_mass",
    "trial_plan",
    "wilson_interval",
    "write_csv",
]

_CONFIG_KEYS = ("trials", "seed", "instance", "family", "n", "payoff", "discretize", "resample", "label", "audit", "workers")


# ============================================================
# Commands
# ============================================================


def run(
    *,
    algo: str | None = None,
    config: str | None = None,
    out: str | None = None,
    family_params: dict | str | None = None,
    **options,
) -> dict:
    """Run one experiment from flags or a JSON config; write a one-row CSV to ``out`` when given.

    Flags other than the experiment keys are passed to the algorithm as params.
    """
    try:
        if config:
            cfg = ExperimentConfig.from_json(config)
        else:
            if not algo:
                raise ValueError("run needs --algo (or --config)")
            if isinstance(family_params, str):
                family_params = json.loads(family_params)
            settings = {k: options.pop(k) for k in _CONFIG_KEYS if k in options}
            cfg = ExperimentConfig(algo=algo, family_params=dict(family_params or {}), params=options, **settings)
        report = run_experiment(cfg)
        if out:
            write_csv([report], out)
    except Exception as e:
        return from_exception(e)
    return success(
        report.to_dict(),
        f"{report.algo}: success {report.success_rate:.4f} [{report.ci_low:.4f}, {report.ci_high:.4f}], "
        f"ratio {report.ratio:.4f} over {report.trials} trials",
    )


def report(*, input: str, format: str = "md", out: str | None = None) -> dict:
    """Render a results CSV as markdown or normalized CSV."""
    try:
        if format not in ("md", "csv"):
            raise ValueError(f"format must be md or csv, got {format!r}")
        rows = read_csv(input)
        text = render_markdown(rows) if format == "md" else render_csv(rows)
        if out:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
    except Exception as e:
        return from_exception(e)
    return success({"rows": len(rows), "format": format, "out": out, "text": text}, f"{len(rows)} runs")


def n_guess(*, draws: int = 10000, seed: int = 0) -> dict:
    """Histogram of heavy-tailed n guesses by power of two."""
    try:
        if draws < 1:
            raise ValueError(f"draws must be >= 1, got {draws}")
        rng = make_rng(seed)
        buckets = Counter(int(math.log2(sample_n_guess(rng))) for _ in range(draws))
    except Exception as e:
        return from_exception(e)
    return success(
        {"draws": draws, "normalizer": normalizer(), "log2_buckets": {str(k): buckets[k] for k in sorted(buckets)}},
        f"{draws} guesses, min support {MIN_GUESS}",
    )


def estimate_n(*, instance: str, seed: int = 0) -> dict:
    """First-half estimate of n on one realized stream of a pure instance."""
    try:
        obj = load_instance(instance)
        if isinstance(obj, MixedInstance):
            raise ValueError("estimate_n needs a pure instance")
        stream = realize_stream(obj, seed)
        estimate = estimate_n_first_half(stream)
    except Exception as e:
        return from_exception(e)
    return success({"n": obj.n, "estimate": estimate}, f"n estimate {estimate} (true n = {obj.n})")


def list_algorithms() -> dict:
    """Registered algorithm names with their default payoff."""
    return success(algorithm_catalog(), f"{len(algorithm_names())} algorithms")
