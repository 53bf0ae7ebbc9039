"""Posterior of the second-highest green given an observed prefix.

The algorithm knows the mixed instance and has seen every arrival up to
checkpoint T on the n^3 time grid. For each state that satisfies the hard
event H (every checkpoint interval holds a red above g2), the observation
is explained by the state's reds at their grid times plus some subset of
its greens landing on the observed grid points; rank consistency fixes
how many greens fall into each value gap between the observed reds. The
count of such completions is a product of binomials, so the exact
posterior comes in closed form per gap. When the number of completions
exceeds the enumeration budget, a rejection sampler over (state, observed
green subset) estimates the same table.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from byzantine_secretary._errors import PosteriorBudgetError, UndefinedPosteriorError
from byzantine_secretary.model._instances import Arrival, MixedInstance, PureInstance, grid_size

logger = logging.getLogger("byzantine_secretary.single_item")

EXACT_COMPLETION_LIMIT = 10**7
MIN_ACCEPTED_SAMPLES = 10**5
SAMPLE_BATCH = 20_000
MAX_DRAW_FACTOR = 100


# ============================================================
# Schedule
# ============================================================


@dataclass(frozen=True)
class OrdinalSchedule:
    """T_0 = 1/4 and T_i = 1/4 + i/(2 log n) for i in [1..log n], log n = ceil(log2 n)."""

    n: int
    log_n: int
    checkpoints: tuple[float, ...]

    @classmethod
    def for_n(cls, n: int) -> OrdinalSchedule:
        log_n = max(1, math.ceil(math.log2(max(2, n))))
        checkpoints = (0.25,) + tuple(0.25 + i / (2 * log_n) for i in range(1, log_n + 1))
        return cls(n, log_n, checkpoints)

    def interval_of(self, t: float) -> int:
        for i, T in enumerate(self.checkpoints):
            if t <= T:
                return i
        return self.log_n + 1


def _grid_index(t: float, big_n: int) -> int:
    return math.floor(t * big_n + 1e-9)


def _log_comb(a: int, b: int) -> float:
    if b < 0 or b > a:
        return -math.inf
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


# ============================================================
# Table
# ============================================================


@dataclass
class PosteriorTable:
    """p_e for every observed id, plus the mass on g2 not having arrived yet."""

    probabilities: dict[str, float]
    unseen: float
    mode: str = "exact"
    samples: int = 0
    stderr: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, element_id: str) -> float:
        return self.probabilities.get(element_id, 0.0)

    def mass_of(self, ids) -> float:
        return math.fsum(self.probabilities.get(i, 0.0) for i in ids)

    def total(self) -> float:
        return math.fsum(self.probabilities.values()) + self.unseen

    def argmax(self) -> str | None:
        if not self.probabilities:
            return None
        return max(self.probabilities, key=lambda k: (self.probabilities[k], k))


# ============================================================
# Engine
# ============================================================


@dataclass
class _StateModel:
    weight: float
    hard: bool
    reds: list[tuple[int, int, float, str]]  # (grid index, tie rank, value, id)
    green_values: list[float]  # ascending
    g2_value: float | None


@dataclass
class _Explanation:
    """How one state explains the observed prefix."""

    state: int
    log_weight: float
    k: int
    gaps: list[tuple[int, int]]  # (a_j, b_j) per value gap
    gap_greens: list[list[float]]  # state green values per gap, ascending
    observed_by_gap: list[list[str]]  # observed green ids per gap, ascending by value
    g2_gap: int
    g2_pos: int


def hard_event_holds(inst: PureInstance, schedule: OrdinalSchedule) -> bool:
    """True iff every interval I_1..I_logn holds a red above v(g2)."""
    g2 = inst.g2
    if g2 is None:
        return False
    big_n = grid_size(inst.n)
    best = [-math.inf] * (schedule.log_n + 2)
    for red in inst.reds:
        t = _grid_index(inst.red_arrivals[red.id], big_n) / big_n
        i = schedule.interval_of(t)
        best[i] = max(best[i], red.value)
    return all(best[i] > g2.value for i in range(1, schedule.log_n + 1))


class SecondMaxPosterior:
    """Reusable posterior engine for one mixed instance."""

    def __init__(
        self,
        mixed: MixedInstance,
        schedule: OrdinalSchedule | None = None,
        *,
        exact_limit: int = EXACT_COMPLETION_LIMIT,
        min_accepted: int = MIN_ACCEPTED_SAMPLES,
    ):
        self.mixed = mixed
        self.schedule = schedule or OrdinalSchedule.for_n(mixed.n)
        self.exact_limit = exact_limit
        self.min_accepted = min_accepted
        self.big_n = grid_size(mixed.n)
        self.states: list[_StateModel] = []
        for w, inst in mixed.states:
            reds = sorted(
                (_grid_index(inst.red_arrivals[r.id], self.big_n), inst.red_rank(r.id), r.value, r.id)
                for r in inst.reds
            )
            greens = sorted(g.value for g in inst.greens)
            g2 = inst.g2
            self.states.append(
                _StateModel(w, hard_event_holds(inst, self.schedule), reds, greens, g2.value if g2 else None)
            )
        if not any(s.hard for s in self.states):
            raise UndefinedPosteriorError("hard event has zero prior mass in this mixed instance")

    # -- explanation of a prefix by one state ---------------------------

    def _explain(self, idx: int, state: _StateModel, prefix: Sequence[Arrival], k_t: int) -> _Explanation | None:
        obs_grid = [_grid_index(a.time, self.big_n) for a in prefix]
        free: dict[int, list[int]] = {}
        for pos, g in enumerate(obs_grid):
            free.setdefault(g, []).append(pos)

        red_pos: list[tuple[float, int]] = []  # (true value, observed position)
        for grid, _, value, _ in state.reds:
            if grid > k_t:
                continue
            slots = free.get(grid)
            if not slots:
                return None
            red_pos.append((value, slots.pop(0)))

        k = len(prefix) - len(red_pos)
        if k < 0 or k > len(state.green_values):
            return None

        # Reds must appear in the observed value order exactly as in the true order.
        red_pos.sort()
        observed_red_values = [prefix[p].value for _, p in red_pos]
        if any(b <= a for a, b in zip(observed_red_values, observed_red_values[1:])):
            return None

        taken = {p for _, p in red_pos}
        observed_greens = sorted(
            ((prefix[p].value, prefix[p].id) for p in range(len(prefix)) if p not in taken)
        )
        bounds_obs = observed_red_values
        bounds_true = [v for v, _ in red_pos]

        gap_count = len(bounds_true) + 1
        observed_by_gap: list[list[str]] = [[] for _ in range(gap_count)]
        for value, eid in observed_greens:
            observed_by_gap[_gap_of(value, bounds_obs)].append(eid)
        gap_greens: list[list[float]] = [[] for _ in range(gap_count)]
        for value in state.green_values:
            gap_greens[_gap_of(value, bounds_true)].append(value)

        gaps = [(len(gap_greens[j]), len(observed_by_gap[j])) for j in range(gap_count)]
        if any(b > a for a, b in gaps):
            return None

        unseen = len(state.green_values) - k
        f_t = min(k_t + 1, self.big_n) / self.big_n
        if unseen and f_t >= 1.0:
            return None
        log_weight = (
            math.log(state.weight)
            - k * math.log(self.big_n)
            + (unseen * math.log1p(-f_t) if unseen else 0.0)
            + sum(_log_comb(a, b) for a, b in gaps)
        )
        g2_gap = _gap_of(state.g2_value, bounds_true)
        g2_pos = gap_greens[g2_gap].index(state.g2_value)
        return _Explanation(idx, log_weight, k, gaps, gap_greens, observed_by_gap, g2_gap, g2_pos)

    def _explanations(self, prefix: Sequence[Arrival], T: float) -> tuple[list[_Explanation], int]:
        k_t = _grid_index(T, self.big_n)
        prefix = [a for a in prefix if _grid_index(a.time, self.big_n) <= k_t]
        found = []
        for idx, state in enumerate(self.states):
            if not state.hard:
                continue
            explanation = self._explain(idx, state, prefix, k_t)
            if explanation is not None and explanation.log_weight > -math.inf:
                found.append(explanation)
        return found, k_t

    # -- public API ------------------------------------------------------

    def table(self, prefix: Sequence[Arrival], checkpoint_i: int, rng: np.random.Generator | None = None) -> PosteriorTable:
        T = self.schedule.checkpoints[checkpoint_i]
        explanations, k_t = self._explanations(prefix, T)
        if not explanations:
            raise UndefinedPosteriorError(
                f"no hard state is consistent with the prefix at checkpoint {checkpoint_i}",
                details={"checkpoint": checkpoint_i, "prefix_len": len(prefix)},
            )
        log_completions = logsumexp([sum(_log_comb(a, b) for a, b in ex.gaps) for ex in explanations])
        if log_completions <= math.log(self.exact_limit):
            return self._exact(explanations)
        logger.debug(
            "posterior at checkpoint %d: ~%.3g completions exceed the exact budget, sampling",
            checkpoint_i,
            math.exp(min(log_completions, 700.0)),
        )
        return self._sampled(explanations, k_t, rng or np.random.default_rng(0))

    def _exact(self, explanations: list[_Explanation]) -> PosteriorTable:
        log_weights = np.array([ex.log_weight for ex in explanations])
        posterior = np.exp(log_weights - logsumexp(log_weights))
        probabilities: dict[str, float] = {}
        unseen = 0.0
        for weight, ex in zip(posterior.tolist(), explanations):
            a, b = ex.gaps[ex.g2_gap]
            q = ex.g2_pos
            base = _log_comb(a, b)
            for r, eid in enumerate(ex.observed_by_gap[ex.g2_gap]):
                lp = _log_comb(q, r) + _log_comb(a - q - 1, b - r - 1) - base
                if lp > -math.inf:
                    probabilities[eid] = probabilities.get(eid, 0.0) + weight * math.exp(lp)
            lp_unseen = _log_comb(a - 1, b) - base
            if lp_unseen > -math.inf:
                unseen += weight * math.exp(lp_unseen)
        return PosteriorTable(probabilities, unseen, mode="exact")

    def _sampled(self, explanations: list[_Explanation], k_t: int, rng: np.random.Generator) -> PosteriorTable:
        f_t = min(k_t + 1, self.big_n) / self.big_n
        k_min = min(ex.k for ex in explanations)
        # Proposal draws each green in the prefix w.p. F(T); the exact grid
        # match contributes (1/(N F))^k, folded into an extra acceptance step.
        log_ratio = -math.log(self.big_n * f_t)
        prior = np.array([self.states[ex.state].weight for ex in explanations])
        prior = prior / prior.sum()

        counts: dict[str, int] = {}
        accepted = 0
        draws = 0
        max_draws = MAX_DRAW_FACTOR * self.min_accepted
        while accepted < self.min_accepted and draws < max_draws:
            picks = rng.choice(len(explanations), size=SAMPLE_BATCH, p=prior)
            draws += SAMPLE_BATCH
            for e_idx in np.unique(picks):
                ex = explanations[int(e_idx)]
                rows = int(np.count_nonzero(picks == e_idx))
                accepted += self._sample_one(ex, rows, f_t, math.exp(log_ratio * (ex.k - k_min)), rng, counts)
        if accepted < self.min_accepted:
            raise PosteriorBudgetError(
                f"rejection sampler accepted {accepted} of {draws} draws; {self.min_accepted} required",
                details={"accepted": accepted, "draws": draws},
            )
        probabilities = {eid: c / accepted for eid, c in counts.items()}
        stderr = {eid: math.sqrt(p * (1 - p) / accepted) for eid, p in probabilities.items()}
        unseen = max(0.0, 1.0 - math.fsum(probabilities.values()))
        return PosteriorTable(probabilities, unseen, mode="sampled", samples=accepted, stderr=stderr)

    @staticmethod
    def _sample_one(ex: _Explanation, rows: int, f_t: float, extra: float, rng, counts: dict[str, int]) -> int:
        sizes = [a for a, _ in ex.gaps]
        total = sum(sizes)
        if total == 0:
            return 0
        chosen = rng.random((rows, total)) < f_t
        ok = np.ones(rows, dtype=bool)
        start = 0
        for a, b in ex.gaps:
            ok &= chosen[:, start : start + a].sum(axis=1) == b
            start += a
        ok &= rng.random(rows) < extra
        if not ok.any():
            return 0
        chosen = chosen[ok]
        accepted = int(ok.sum())
        offset = sum(sizes[: ex.g2_gap])
        g2_col = offset + ex.g2_pos
        seen = chosen[:, g2_col]
        ranks = chosen[:, offset:g2_col].sum(axis=1)
        observed = ex.observed_by_gap[ex.g2_gap]
        for r in ranks[seen].tolist():
            counts[observed[r]] = counts.get(observed[r], 0) + 1
        return accepted


def _gap_of(value: float, bounds: Sequence[float]) -> int:
    """Index of the gap between consecutive sorted bounds that holds ``value``."""
    lo, hi = 0, len(bounds)
    while lo < hi:
        mid = (lo + hi) // 2
        if bounds[mid] < value:
            lo = mid + 1
        else:
            hi = mid
    return lo


def compute_posterior_second_max(
    mixed: MixedInstance,
    observed_prefix: Sequence[Arrival],
    checkpoint_i: int,
    *,
    schedule: OrdinalSchedule | None = None,
    rng: np.random.Generator | None = None,
    exact_limit: int = EXACT_COMPLETION_LIMIT,
    min_accepted: int = MIN_ACCEPTED_SAMPLES,
) -> PosteriorTable:
    """p_e = Pr[e = g2 | H and the prefix observed up to T_i]."""
    engine = SecondMaxPosterior(mixed, schedule, exact_limit=exact_limit, min_accepted=min_accepted)
    return engine.table(observed_prefix, checkpoint_i, rng)
