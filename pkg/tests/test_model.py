"""Tests for instances, stream realization, the policy runner and benchmark oracles."""

import itertools
import json

import numpy as np
import pytest

from byzantine_secretary import model
from byzantine_secretary._errors import ContractViolationError, InstanceValidationError, OracleInconsistencyError
from byzantine_secretary.model import (
    Arrival,
    BenchmarkSpec,
    Color,
    ConsistencyGuard,
    Element,
    KnapsackCapacity,
    MixedInstance,
    OnlinePolicy,
    PartitionCapacity,
    PureInstance,
    RealizedStream,
    SelectFirst,
    SingleItem,
    SkipAll,
    UniformCapacity,
    grid_size,
    instance_from_dict,
    instance_to_dict,
    make_rng,
    run_policy,
)
from byzantine_secretary.model._instances import discretize_time, realize_stream
from byzantine_secretary.model._oracle import compute_benchmark


def _greens(values, sizes=None):
    sizes = sizes or [1.0] * len(values)
    return [Element(f"g{k}", v, s) for k, (v, s) in enumerate(zip(values, sizes))]


def _instance(green_values, red_values=(), red_times=None, **kwargs):
    reds = [Element(f"r{k}", v, color="red") for k, v in enumerate(red_values)]
    times = red_times or [0.1 * (k + 1) for k in range(len(reds))]
    return PureInstance(_greens(green_values) + reds, {r.id: t for r, t in zip(reds, times)}, **kwargs)


def _stream(values, times=None, colors=None):
    times = times or [(k + 1) / (len(values) + 1) for k in range(len(values))]
    arrivals = [Arrival(k, t, f"e{k}", float(v), 1.0) for k, (v, t) in enumerate(zip(values, times))]
    colors = colors or {a.id: Color.GREEN for a in arrivals}
    return RealizedStream(arrivals, colors)


# ============================================================
# Instances
# ============================================================


class TestElement:
    def test_value_must_be_positive(self):
        with pytest.raises(InstanceValidationError):
            Element("a", 0.0)

    def test_size_must_lie_in_unit_interval(self):
        with pytest.raises(InstanceValidationError):
            Element("a", 1.0, size=1.5)
        with pytest.raises(InstanceValidationError):
            Element("a", 1.0, size=0.0)

    def test_unknown_color(self):
        with pytest.raises(InstanceValidationError):
            Element("a", 1.0, color="blue")

    def test_color_from_string(self):
        assert Element("a", 1.0, color="red").color is Color.RED


class TestPureInstance:
    def test_greens_sorted_descending(self):
        inst = _instance([3.0, 7.0, 5.0], [9.0])
        assert [g.value for g in inst.greens] == [7.0, 5.0, 3.0]
        assert inst.g_max.value == 7.0
        assert inst.g2.value == 5.0
        assert inst.n == 4

    def test_single_green_has_no_second(self):
        inst = _instance([2.0], [5.0])
        assert inst.g2 is None

    def test_duplicate_ids_rejected(self):
        with pytest.raises(InstanceValidationError, match="unique"):
            PureInstance([Element("a", 1.0), Element("a", 2.0)], {})

    def test_equal_values_rejected(self):
        with pytest.raises(InstanceValidationError, match="distinct"):
            _instance([1.0, 1.0])

    def test_needs_a_green(self):
        with pytest.raises(InstanceValidationError, match="green"):
            PureInstance([Element("r", 1.0, color="red")], {"r": 0.5})

    def test_red_needs_time(self):
        with pytest.raises(InstanceValidationError, match="arrival time"):
            PureInstance([Element("g", 1.0), Element("r", 2.0, color="red")], {})

    def test_red_time_in_range(self):
        with pytest.raises(InstanceValidationError, match="outside"):
            _instance([1.0], [2.0], red_times=[1.5])

    def test_shared_red_time_needs_order(self):
        with pytest.raises(InstanceValidationError, match="red_order"):
            _instance([1.0], [2.0, 3.0], red_times=[0.5, 0.5])
        inst = _instance([1.0], [2.0, 3.0], red_times=[0.5, 0.5], red_order=("r1", "r0"))
        assert inst.red_rank("r1") == 0
        assert inst.red_rank("r0") == 1

    def test_red_order_must_agree_with_times(self):
        with pytest.raises(InstanceValidationError, match="contradicts"):
            _instance([1.0], [2.0, 3.0], red_times=[0.2, 0.7], red_order=("r1", "r0"))

    def test_parts_must_cover(self):
        with pytest.raises(InstanceValidationError, match="cover"):
            _instance([1.0, 2.0], parts={"A": ("g0",)}, capacities={"A": 1})

    def test_with_values_keeps_structure(self):
        inst = _instance([1.0, 2.0], [3.0])
        doubled = inst.with_values(lambda v: 2 * v)
        assert [e.value for e in doubled.elements] == [2.0, 4.0, 6.0]
        assert doubled.red_arrivals == inst.red_arrivals


class TestMixedInstance:
    def test_weights_must_sum_to_one(self):
        a, b = _instance([1.0, 2.0]), _instance([3.0, 4.0])
        with pytest.raises(InstanceValidationError, match="sum to 1"):
            MixedInstance(((0.5, a), (0.4, b)))

    def test_weights_must_be_positive(self):
        a, b = _instance([1.0, 2.0]), _instance([3.0, 4.0])
        with pytest.raises(InstanceValidationError, match="positive"):
            MixedInstance(((1.0, a), (0.0, b)))

    def test_states_share_n(self):
        with pytest.raises(InstanceValidationError, match="same n"):
            MixedInstance.uniform([_instance([1.0, 2.0]), _instance([1.0, 2.0, 3.0])])

    def test_uniform_weights_sum_exactly(self):
        mixed = MixedInstance.uniform([_instance([1.0, float(k + 2)]) for k in range(7)])
        assert abs(sum(mixed.weights) - 1.0) < 1e-15
        assert mixed.n == 2


class TestJsonCodec:
    def test_round_trip_keeps_order_parts_and_meta(self, tmp_path):
        inst = _instance(
            [1.0, 2.0],
            [3.0, 4.0],
            red_times=[0.5, 0.5],
            red_order=("r0", "r1"),
            parts={"A": ("g0", "r0"), "B": ("g1", "r1")},
            capacities={"A": 1, "B": 2},
            meta={"family": "test"},
        )
        path = tmp_path / "inst.json"
        model.dump_instance(inst, str(path))
        back = model.load_instance(str(path))
        assert instance_to_dict(back) == instance_to_dict(inst)

    def test_declared_n_checked(self):
        data = instance_to_dict(_instance([1.0, 2.0]))
        data["n"] = 5
        with pytest.raises(InstanceValidationError, match="declared n"):
            instance_from_dict(data)

    def test_mixed_detected_by_states_key(self, tmp_path):
        mixed = MixedInstance.uniform([_instance([1.0, 2.0]), _instance([3.0, 4.0])])
        path = tmp_path / "mixed.json"
        model.dump_instance(mixed, str(path))
        assert isinstance(model.load_instance(str(path)), MixedInstance)


# ============================================================
# Streams
# ============================================================


class TestRealizeStream:
    def test_same_seed_same_stream(self):
        inst = _instance([1.0, 2.0, 3.0, 4.0], [10.0, 11.0])
        a = realize_stream(inst, 42)
        b = realize_stream(inst, 42)
        assert a.arrivals == b.arrivals

    def test_tuple_seeds_are_independent(self):
        inst = _instance([float(k + 1) for k in range(20)])
        a = realize_stream(inst, (7, 0, 0))
        b = realize_stream(inst, (7, 1, 0))
        assert [x.id for x in a.arrivals] != [x.id for x in b.arrivals]

    def test_sorted_and_complete(self):
        inst = _instance([1.0, 2.0, 3.0], [5.0, 6.0], red_times=[0.3, 0.9])
        stream = realize_stream(inst, 3)
        times = [a.time for a in stream.arrivals]
        assert times == sorted(times)
        assert sorted(a.id for a in stream.arrivals) == sorted(e.id for e in inst.elements)
        assert [a.index for a in stream.arrivals] == list(range(inst.n))

    def test_red_times_are_fixed(self):
        inst = _instance([1.0, 2.0], [5.0, 6.0], red_times=[0.25, 0.75])
        for seed in range(5):
            stream = realize_stream(inst, seed)
            by_id = {a.id: a.time for a in stream.arrivals}
            assert by_id["r0"] == 0.25
            assert by_id["r1"] == 0.75

    def test_tied_reds_follow_red_order(self):
        inst = _instance([1.0], [5.0, 6.0, 7.0], red_times=[0.5, 0.5, 0.5], red_order=("r2", "r0", "r1"))
        stream = realize_stream(inst, 1)
        reds = [a.id for a in stream.arrivals if a.id.startswith("r")]
        assert reds == ["r2", "r0", "r1"]

    def test_arrivals_carry_no_color(self):
        assert "color" not in Arrival._fields
        stream = realize_stream(_instance([1.0, 2.0], [3.0]), 0)
        assert stream.color_of("r0") is Color.RED
        assert sorted(stream.green_ids()) == ["g0", "g1"]

    def test_discretized_times_on_grid(self):
        inst = _instance([float(k + 1) for k in range(6)], [10.0], red_times=[0.3])
        stream = realize_stream(inst, 5, discretize=True)
        big_n = grid_size(inst.n)
        for a in stream.arrivals:
            assert abs(a.time * big_n - round(a.time * big_n)) < 1e-6
        assert stream.discretized

    def test_grid_collision_flagged(self):
        # Two reds on the same grid point (distinct raw times) collide after snapping
        inst = _instance([1.0], [5.0, 6.0], red_times=[0.5, 0.5 + 1e-6])
        stream = realize_stream(inst, 0, discretize=True)
        assert stream.grid_collision


class TestDiscretizeTime:
    def test_floor_to_grid(self):
        # n = 2 -> N = 8; 0.3 * 8 = 2.4 -> 2/8
        assert discretize_time(0.3, 2) == 0.25
        assert discretize_time(1.0, 2) == 1.0
        assert grid_size(10) == 1000


# ============================================================
# Policy runner
# ============================================================


class _NamesOther(OnlinePolicy):
    name = "names_other"

    def decide(self, arrival):
        return "someone-else"


class _AddsInFinish(OnlinePolicy):
    name = "adds"

    def decide(self, arrival):
        return False

    def finish(self, selected):
        return ["e0"]


class _DropsAll(OnlinePolicy):
    def decide(self, arrival):
        return True

    def finish(self, selected):
        return []


class TestRunPolicy:
    def test_single_item_refuses_second_pick(self):
        trace = run_policy(_stream([1, 2, 3]), SelectFirst(), SingleItem())
        assert trace.selected_ids == ["e0"]
        assert [d.action for d in trace.decisions] == ["select", "rejected_infeasible", "rejected_infeasible"]
        assert len(trace.violations) == 2

    def test_skip_all_logs_every_arrival(self):
        trace = run_policy(_stream([1, 2, 3, 4]), SkipAll())
        assert trace.selected_ids == []
        assert len(trace.decisions) == 4
        assert trace.total_value == 0

    def test_uniform_capacity(self):
        trace = run_policy(_stream([1, 2, 3, 4]), SelectFirst(), UniformCapacity(2))
        assert trace.selected_ids == ["e0", "e1"]

    def test_naming_another_element_is_a_violation(self):
        with pytest.raises(ContractViolationError):
            run_policy(_stream([1, 2]), _NamesOther())

    def test_finish_may_not_add(self):
        with pytest.raises(ContractViolationError):
            run_policy(_stream([1, 2]), _AddsInFinish())

    def test_post_hoc_rejection_recorded(self):
        trace = run_policy(_stream([1, 2]), _DropsAll())
        assert trace.selected_ids == []
        assert trace.post_hoc_rejected == ["e0", "e1"]

    def test_rng_before_start(self):
        with pytest.raises(ContractViolationError):
            SkipAll().rng  # noqa: B018

    def test_knapsack_trims_latest_after_finish(self):
        arrivals = [Arrival(k, (k + 1) / 5, f"e{k}", float(k + 1), 0.5) for k in range(4)]
        stream = RealizedStream(arrivals, {a.id: Color.GREEN for a in arrivals})
        trace = run_policy(stream, SelectFirst(), KnapsackCapacity(1.0))
        # Online overshoot is allowed; two of the four half-size picks survive
        assert trace.selected_ids == ["e0", "e1"]
        assert trace.violations == ["capacity exceeded after post-hoc rejection; dropped 2"]
        assert abs(trace.total_size - 1.0) < 1e-12

    def test_partition_capacity(self):
        feas = PartitionCapacity({"A": ("e0", "e1"), "B": ("e2",)}, {"A": 1, "B": 1})
        trace = run_policy(_stream([1, 2, 3]), SelectFirst(), feas)
        assert trace.selected_ids == ["e0", "e2"]

    def test_rng_seed_argument(self):
        a = run_policy(_stream([1, 2, 3]), SkipAll(), rng=(1, 2))
        b = run_policy(_stream([1, 2, 3]), SkipAll(), rng=make_rng((1, 2)))
        assert a.selected_ids == b.selected_ids


class _FlipFlopOracle:
    """Rejects {a} but later accepts {a, b}."""

    rank = 2

    def is_independent(self, ids):
        return ids != frozenset({"a"})


class TestConsistencyGuard:
    def test_detects_non_downward_closed(self):
        guard = ConsistencyGuard(_FlipFlopOracle())
        assert guard.is_independent({"a"}) is False
        with pytest.raises(OracleInconsistencyError):
            guard.is_independent({"a", "b"})


# ============================================================
# Benchmark oracles
# ============================================================


def _brute_force_knapsack(inst, K):
    candidates = list(inst.greens[1:])
    best = 0.0
    for k in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates, k):
            if sum(e.size for e in combo) <= K + 1e-12:
                best = max(best, sum(e.value for e in combo))
    return best


class TestComputeBenchmark:
    def test_single_item_is_second_green(self):
        inst = _instance([3.0, 9.0, 5.0], [100.0])
        result = compute_benchmark(inst, "single_item")
        assert result.value == 5.0
        assert result.members == ("g2",)

    def test_single_green_gives_zero(self):
        assert compute_benchmark(_instance([3.0], [100.0])).value == 0

    def test_uniform_skips_gmax(self):
        inst = _instance([1.0, 2.0, 3.0, 4.0, 5.0])
        # Leave out 5, take the next two: 4 + 3
        assert compute_benchmark(inst, BenchmarkSpec.uniform(2)).value == 7.0

    def test_reds_never_count(self):
        inst = _instance([1.0, 2.0], [50.0, 60.0])
        assert compute_benchmark(inst, BenchmarkSpec.uniform(3)).value == 1.0

    def test_partition_respects_capacities(self):
        inst = _instance(
            [10.0, 9.0, 8.0, 1.0],
            parts={"A": ("g0", "g1", "g2"), "B": ("g3",)},
            capacities={"A": 1, "B": 1},
        )
        # g0 = g_max is excluded; part A then contributes 9, part B contributes 1
        result = compute_benchmark(inst, BenchmarkSpec.partition())
        assert result.value == 10.0

    def test_general_matroid_matches_uniform(self):
        from byzantine_secretary.matroids import UniformMatroidOracle

        inst = _instance([1.0, 2.0, 3.0, 4.0, 5.0])
        via_oracle = compute_benchmark(inst, BenchmarkSpec.general_matroid(UniformMatroidOracle(3)))
        assert via_oracle.value == compute_benchmark(inst, BenchmarkSpec.uniform(3)).value

    @pytest.mark.parametrize("seed", range(8))
    def test_knapsack_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(4, 12))
        values = (rng.permutation(m) + 1.0) * rng.uniform(0.5, 2.0)
        sizes = rng.uniform(0.05, 1.0, size=m)
        inst = PureInstance(_greens(values.tolist(), sizes.tolist()), {})
        K = float(rng.uniform(0.5, 3.0))
        result = compute_benchmark(inst, BenchmarkSpec.knapsack(K))
        assert result.exact
        assert abs(result.value - _brute_force_knapsack(inst, K)) < 1e-9
        assert sum(inst.by_id[i].size for i in result.members) <= K + 1e-12

    def test_unknown_kind(self):
        from byzantine_secretary._errors import ConfigError

        with pytest.raises(ConfigError):
            BenchmarkSpec("fractional")


# ============================================================
# Commands
# ============================================================


class TestModelCommands:
    def test_validate_instance(self, tmp_path):
        path = tmp_path / "inst.json"
        model.dump_instance(_instance([1.0, 2.0], [3.0]), str(path))
        result = model.validate_instance(instance=str(path))
        assert result["status"] is True
        assert result["data"] == {"kind": "pure", "n": 3, "greens": 2, "reds": 1}

    def test_validate_instance_reports_invariant(self, tmp_path):
        path = tmp_path / "bad.json"
        data = {"elements": [{"id": "a", "value": 1.0}, {"id": "b", "value": 1.0}]}
        path.write_text(json.dumps(data))
        result = model.validate_instance(instance=str(path))
        assert result["status"] is False
        assert result["data"]["error_code"] == "INVALID_INSTANCE"

    def test_compute_benchmark_knapsack(self, tmp_path):
        path = tmp_path / "inst.json"
        inst = PureInstance(_greens([5.0, 4.0, 3.0, 2.0], [0.6, 0.6, 0.5, 0.5]), {})
        model.dump_instance(inst, str(path))
        result = model.compute_benchmark(instance=str(path), kind="knapsack", K=1.0)
        # Without g0: best under K=1 is {3, 2} (sizes 0.5 + 0.5)
        assert result["status"] is True
        assert result["data"]["value"] == 5.0

    def test_discretize_time_command(self):
        result = model.discretize_time(t=0.3, n=2)
        assert result["data"]["grid_time"] == 0.25
        assert result["data"]["N"] == 8

    def test_realize_stream_command(self, tmp_path):
        path = tmp_path / "inst.json"
        model.dump_instance(_instance([1.0, 2.0], [3.0]), str(path))
        result = model.realize_stream(instance=str(path), seed=4)
        assert len(result["data"]["arrivals"]) == 3
        assert "color" not in result["data"]["arrivals"][0]
