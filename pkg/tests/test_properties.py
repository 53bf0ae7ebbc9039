"""Property-based checks of invariants that must hold for every input."""

import itertools
import math

from hypothesis import given, settings
from hypothesis import strategies as st

from byzantine_secretary.model import (
    Arrival,
    BenchmarkSpec,
    Color,
    Element,
    PureInstance,
    RealizedStream,
    SelectFirst,
    run_policy,
)
from byzantine_secretary.model._oracle import compute_benchmark
from byzantine_secretary.multi_select import BudgetLedger, SubsampleFilter, audit_budget_conservation
from byzantine_secretary.single_item import value_max_logstar
from byzantine_secretary.subroutines import Dynkin, IntervalWindow, RandomElement, TwoCheckpoints

distinct_values = st.lists(st.integers(1, 10**6), min_size=4, max_size=30, unique=True)
seeds = st.integers(0, 2**32 - 1)

MONOTONE_MAPS = (
    lambda v: v**3,
    math.sqrt,
    lambda v: 1e-6 * v + 5.0,
    math.log1p,
)


def _stream(values, colors=None):
    n = len(values)
    arrivals = [Arrival(k, (k + 1) / (n + 1), f"e{k}", float(v), 1.0) for k, v in enumerate(values)]
    colors = colors or {}
    return RealizedStream(arrivals, {a.id: colors.get(a.id, Color.GREEN) for a in arrivals})


def _ordinal_policies(n):
    return [Dynkin(n), RandomElement(n), TwoCheckpoints(IntervalWindow(0.2, 0.6))]


# ============================================================
# Ordinal policies
# ============================================================


class TestOrdinalInvariance:
    @given(values=distinct_values, seed=seeds, which=st.integers(0, len(MONOTONE_MAPS) - 1))
    @settings(max_examples=60, deadline=None)
    def test_monotone_map_keeps_selection(self, values, seed, which):
        stream = _stream(values)
        mapped = stream.with_values(MONOTONE_MAPS[which])
        for policy in _ordinal_policies(len(values)):
            a = run_policy(stream, policy, rng=seed)
            b = run_policy(mapped, policy, rng=seed)
            assert a.selected_ids == b.selected_ids


# ============================================================
# Color blindness
# ============================================================


class TestColorBlindness:
    @given(values=distinct_values, seed=seeds, data=st.data())
    @settings(max_examples=40, deadline=None)
    def test_recoloring_changes_nothing(self, values, seed, data):
        stream = _stream(values)
        reds = data.draw(st.sets(st.sampled_from([f"e{k}" for k in range(len(values))])))
        recolored = stream.recolored({rid: Color.RED for rid in reds})
        for policy in [*_ordinal_policies(len(values)), value_max_logstar(len(values))]:
            a = run_policy(stream, policy, rng=seed)
            b = run_policy(recolored, policy, rng=seed)
            assert a.decisions == b.decisions
            assert a.arm == b.arm


# ============================================================
# Knapsack budgets and benchmark
# ============================================================


ledger_steps = st.lists(
    st.tuples(
        st.sampled_from(["cascade", "dedicated", "close"]),
        st.integers(0, 5),
        st.floats(0.0, 3.0, allow_nan=False),
    ),
    max_size=60,
)


class TestLedgerConservation:
    @given(steps=ledger_steps, budget=st.floats(0.01, 5.0), dedicated=st.floats(0.0, 2.0))
    @settings(max_examples=80, deadline=None)
    def test_interval_totals_constant(self, steps, budget, dedicated):
        ledger = BudgetLedger(6, budget, dedicated)
        for action, level, size in steps:
            if action == "cascade":
                ledger.charge_cascading(level, size)
            elif action == "dedicated":
                ledger.charge_dedicated(level, size)
            else:
                ledger.close_interval()
        ledger.finalize()
        summary = ledger.summary()
        assert audit_budget_conservation(summary) == []
        assert all(abs(t - budget) <= 1e-9 * max(1.0, budget) for t in summary["interval_totals"])


class TestKnapsackBenchmark:
    @given(
        items=st.lists(
            st.tuples(st.integers(1, 1000), st.floats(0.05, 1.0, allow_nan=False)),
            min_size=1,
            max_size=9,
            unique_by=lambda item: item[0],
        ),
        K=st.floats(0.1, 4.0),
    )
    @settings(max_examples=40, deadline=None)
    def test_matches_enumeration(self, items, K):
        elements = tuple(Element(f"g{k}", float(v), float(s), Color.GREEN) for k, (v, s) in enumerate(items))
        inst = PureInstance(elements, {})
        result = compute_benchmark(inst, BenchmarkSpec.knapsack(K))
        candidates = inst.greens[1:]
        best = max(
            (
                sum(e.value for e in combo)
                for r in range(len(candidates) + 1)
                for combo in itertools.combinations(candidates, r)
                if sum(e.size for e in combo) <= K + 1e-12
            ),
            default=0.0,
        )
        assert abs(result.value - best) < 1e-9


# ============================================================
# Subsampling
# ============================================================


class TestSubsampleBound:
    @given(
        count=st.integers(0, 40),
        r=st.integers(1, 6),
        extra=st.integers(0, 10),
        seed=seeds,
    )
    @settings(max_examples=60, deadline=None)
    def test_never_more_than_r(self, count, r, extra, seed):
        stream = _stream(list(range(1, count + 1)))
        trace = run_policy(stream, SubsampleFilter(SelectFirst(), r, r + extra), rng=seed)
        assert len(trace.selected_ids) <= r
        assert set(trace.selected_ids) <= {a.id for a in stream.arrivals}
