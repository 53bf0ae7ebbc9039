"""Tests for the building-block policies and the single-item algorithms."""

import math
from fractions import Fraction

import numpy as np
import pytest

from byzantine_secretary import single_item
from byzantine_secretary._errors import ConfigError, InstanceValidationError, UndefinedPosteriorError
from byzantine_secretary.adversaries import gen_hard_single_item, gen_reduced_states, gen_two_blue_states
from byzantine_secretary.model import Arrival, Color, Element, PureInstance, RealizedStream, SingleItem, make_rng
from byzantine_secretary.model import run_policy
from byzantine_secretary.model._instances import realize_stream
from byzantine_secretary.single_item import (
    CenterThreshold,
    LogStarSchedule,
    LogStarThreshold,
    OrdinalSchedule,
    ReducedMixed,
    ReducedState,
    SecondMaxPosterior,
    TwoBlueMixed,
    TwoBlueState,
    center_index,
    classify_input_good_bad,
    compute_posterior_second_max,
    exact_two_blue_payoff,
    good_probability,
    hard_event_holds,
    iterated_log,
    log_star,
    ordinal_known_distribution,
    split_bot,
    two_blue_policy,
    two_blue_posterior,
    value_max_logstar,
)
from byzantine_secretary.single_item._two_blue import PosteriorArgmaxThreshold, sequence_stream, top_count
from byzantine_secretary.subroutines import Dynkin, IntervalWindow, RandomElement, dynkin_time, two_checkpoints


def _stream(pairs):
    """Stream from (time, value) pairs, all green."""
    arrivals = [Arrival(k, t, f"e{k}", float(v), 1.0) for k, (t, v) in enumerate(pairs)]
    return RealizedStream(arrivals, {a.id: Color.GREEN for a in arrivals})


# ============================================================
# Building blocks
# ============================================================


class TestRandomElement:
    def test_selects_the_drawn_position(self):
        stream = _stream([(0.1 * (k + 1), k + 1) for k in range(5)])
        for seed in range(20):
            policy = RandomElement(5)
            trace = run_policy(stream, policy, SingleItem(), rng=seed)
            assert trace.selected_ids == [f"e{policy.audit['k'] - 1}"]

    def test_roughly_uniform(self):
        stream = _stream([(0.1 * (k + 1), k + 1) for k in range(4)])
        counts = dict.fromkeys(range(4), 0)
        for seed in range(2000):
            trace = run_policy(stream, RandomElement(4), SingleItem(), rng=seed)
            counts[int(trace.selected_ids[0][1:])] += 1
        # 500 expected per position; stderr ~19
        assert all(abs(c - 500) < 100 for c in counts.values())

    def test_needs_positive_n(self):
        with pytest.raises(ConfigError):
            RandomElement(0)


class TestTwoCheckpoints:
    def test_takes_first_at_least_window_max(self):
        stream = _stream([(0.1, 100), (0.3, 5), (0.4, 7), (0.6, 6), (0.7, 7.5), (0.8, 9)])
        trace = run_policy(stream, two_checkpoints((0.2, 0.5)), SingleItem())
        # Window max is 7; the arrival at 0.1 is before the window and ignored
        assert trace.selected_ids == ["e4"]
        assert trace.audit["tau"] == 7.0

    def test_window_validation(self):
        with pytest.raises(ConfigError):
            IntervalWindow(0.6, 0.4)
        with pytest.raises(ConfigError):
            IntervalWindow(0.0, 1.5)

    def test_dynkin_time_observes_until_one_over_e(self):
        policy = dynkin_time()
        assert policy.name == "dynkin_time"
        assert abs(policy.window.T2 - 1 / math.e) < 1e-12


class TestDynkin:
    def test_skips_cutoff_then_takes_record(self):
        # n = 10 -> skip ceil(10/e) = 4 arrivals
        values = [5, 1, 2, 3, 4, 6, 7, 8, 9, 10]
        stream = _stream([((k + 1) / 11, v) for k, v in enumerate(values)])
        trace = run_policy(stream, Dynkin(10), SingleItem())
        assert trace.selected_ids == ["e5"]

    def test_classic_success_rate(self):
        # P[select max] -> 1/e for large n; n = 20 gives about 0.384
        rng = np.random.default_rng(0)
        wins = 0
        trials = 3000
        for seed in range(trials):
            values = rng.permutation(20) + 1
            stream = _stream([((k + 1) / 21, v) for k, v in enumerate(values)])
            trace = run_policy(stream, Dynkin(20), SingleItem(), rng=seed)
            wins += trace.selected_ids == [f"e{int(np.argmax(values))}"]
        assert abs(wins / trials - 0.384) < 0.04


# ============================================================
# value_logstar
# ============================================================


class TestLogStar:
    def test_log_star(self):
        assert log_star(1) == 0
        assert log_star(2) == 1
        assert log_star(4) == 2
        assert log_star(16) == 3
        assert log_star(65536) == 4
        assert log_star(65537) == 5

    def test_iterated_log_ceils(self):
        assert iterated_log(16, 0) == 16
        assert iterated_log(16, 1) == 4
        assert iterated_log(16, 2) == 2
        # log2(1000) = 9.97 -> 10 -> log2(10) = 3.32 -> 4
        assert iterated_log(1000, 2) == 4

    def test_schedule(self):
        schedule = LogStarSchedule.for_n(16)
        assert schedule.depth == 3
        assert schedule.checkpoints[0] == 0.5
        assert abs(schedule.checkpoints[-1] - 0.75) < 1e-12
        assert schedule.iterated == (16, 4, 2, 1)
        assert schedule.interval_of(0.3) == 0
        assert schedule.interval_of(0.9) == 4

    def test_threshold_grid(self):
        schedule = LogStarSchedule.for_n(16)
        # v_1 log^(1) n / 2^s for s in 0..2*4
        grid = schedule.threshold_grid(8.0, 1)
        assert len(grid) == 9
        assert grid[0] == 32.0
        assert grid[1] == 16.0

    def test_small_n_rejected(self):
        with pytest.raises(ConfigError):
            LogStarSchedule.for_n(3)

    def test_threshold_arm(self):
        schedule = LogStarSchedule.for_n(16)
        stream = _stream([(0.1, 100), (0.55, 8), (0.6, 15), (0.7, 17), (0.8, 50)])
        trace = run_policy(stream, LogStarThreshold(schedule, 1, 1), SingleItem())
        # v_1 = 8, threshold 8 * 4 / 2 = 16
        assert trace.selected_ids == ["e3"]
        assert trace.audit["tau"] == 16.0

    def test_empty_interval_selects_nothing(self):
        schedule = LogStarSchedule.for_n(16)
        stream = _stream([(0.1, 100), (0.7, 17), (0.8, 50)])
        trace = run_policy(stream, LogStarThreshold(schedule, 1, 0), SingleItem())
        assert trace.selected_ids == []

    def test_arm_labels(self):
        stream = _stream([((k + 1) / 33, k + 1) for k in range(32)])
        policy = value_max_logstar(32)
        arms = set()
        for seed in range(60):
            trace = run_policy(stream, policy, SingleItem(), rng=seed)
            arms.add(trace.arm.split("/")[0])
            assert len(trace.selected_ids) <= 1
        assert arms == {"random", "interval", "threshold"}


# ============================================================
# Ordinal algorithm for a known distribution
# ============================================================


class TestOrdinalSchedule:
    def test_checkpoints(self):
        schedule = OrdinalSchedule.for_n(16)
        assert schedule.log_n == 4
        assert schedule.checkpoints == (0.25, 0.375, 0.5, 0.625, 0.75)

    def test_center(self):
        assert center_index(5) == 2
        assert center_index(4) == 1
        assert center_index(1) == 0
        bot, rest = split_bot(list(range(5)))
        assert bot == [0, 1, 2]
        assert rest == [3, 4]


class TestHardEvent:
    def test_generated_instances_satisfy_hard_event(self):
        for seed in range(5):
            inst = gen_hard_single_item(16, seed=seed)
            assert hard_event_holds(inst, OrdinalSchedule.for_n(16))

    def test_easy_interval_breaks_it(self):
        inst = gen_hard_single_item(16, seed=0, easy_interval=2)
        assert not hard_event_holds(inst, OrdinalSchedule.for_n(16))

    def test_no_hard_state_is_undefined(self):
        inst = PureInstance([Element("a", 1.0), Element("b", 2.0)], {})
        with pytest.raises(UndefinedPosteriorError):
            SecondMaxPosterior(single_item.as_mixed(inst))


class TestPosterior:
    def _prefix(self, seed=3):
        mixed = gen_hard_single_item(16, seed=seed, states=3)
        trial = seed
        stream = realize_stream(mixed.states[0][1], trial, discretize=True)
        while stream.grid_collision:
            trial += 100
            stream = realize_stream(mixed.states[0][1], trial, discretize=True)
        return mixed, stream

    def test_exact_table_is_a_distribution(self):
        mixed, stream = self._prefix()
        for checkpoint in range(OrdinalSchedule.for_n(16).log_n + 1):
            table = compute_posterior_second_max(mixed, stream.arrivals, checkpoint)
            assert table.mode == "exact"
            assert all(p >= 0 for p in table.probabilities.values())
            assert abs(table.total() - 1.0) < 1e-9

    def test_only_observed_ids_carry_mass(self):
        mixed, stream = self._prefix()
        T = OrdinalSchedule.for_n(16).checkpoints[1]
        table = compute_posterior_second_max(mixed, stream.arrivals, 1)
        observed = {a.id for a in stream.arrivals if a.time <= T}
        assert set(table.probabilities) <= observed

    def test_sampler_agrees_with_exact(self):
        mixed, stream = self._prefix(seed=5)
        exact = compute_posterior_second_max(mixed, stream.arrivals, 2)
        sampled = compute_posterior_second_max(
            mixed, stream.arrivals, 2, exact_limit=1, min_accepted=20000, rng=np.random.default_rng(1)
        )
        for eid in set(exact.probabilities) | set(sampled.probabilities):
            assert abs(exact[eid] - sampled[eid]) < 0.03


class TestOrdinalKnownDistribution:
    def test_candidate_sets_halve(self):
        mixed = gen_hard_single_item(16, seed=2, states=4)
        engine = SecondMaxPosterior(mixed)
        checked = 0
        for seed in range(8):
            stream = realize_stream(mixed.states[seed % 4][1], seed, discretize=True)
            if stream.grid_collision:
                continue
            policy = CenterThreshold(engine, engine.schedule.log_n)
            run_policy(stream, policy, SingleItem(), rng=seed)
            assert "abandoned" not in policy.audit
            sizes = policy.audit.get("sizes", [])
            for before, after in zip(sizes, sizes[1:]):
                assert after <= math.ceil(before / 2)
            checked += 1
        assert checked > 0

    def test_arms_and_single_selection(self):
        inst = gen_hard_single_item(16, seed=0)
        policy = ordinal_known_distribution(inst)
        arms = set()
        for seed in range(40):
            stream = realize_stream(inst, seed, discretize=True)
            trace = run_policy(stream, policy, SingleItem(), rng=seed)
            arms.add(trace.arm.split("/")[0])
            assert len(trace.selected_ids) <= 1
            assert not trace.violations
        assert arms == {"two_checkpoints", "center", "candidates"}


# ============================================================
# Two-blue model
# ============================================================


class TestTwoBlueModel:
    def test_sequence_places_blues(self):
        state = TwoBlueState(1.0, (1, 2, 3), 5, 4)
        assert state.sequence(0, 2) == [5, 1, 4, 2, 3]

    def test_validation(self):
        with pytest.raises(InstanceValidationError):
            TwoBlueMixed(5, (TwoBlueState(1.0, (1, 2, 3), 4, 5),))
        with pytest.raises(InstanceValidationError):
            TwoBlueMixed(5, (TwoBlueState(1.0, (1, 2, 2), 5, 4),))
        with pytest.raises(InstanceValidationError):
            TwoBlueMixed(5, (TwoBlueState(0.5, (1, 2, 3), 5, 4),))

    def test_realize_is_a_permutation(self):
        mixed = gen_two_blue_states(10, "uniform_reds", 3, seed=1)
        stream = mixed.realize(0, make_rng(0))
        assert sorted(a.value for a in stream.arrivals) == [float(v) for v in range(1, 11)]
        state = mixed.states[0]
        assert sorted(stream.green_ids()) == sorted([f"v{state.b1}", f"v{state.b2}"])

    def test_top_count(self):
        assert top_count(8) == 4
        assert top_count(27) == 9

    def test_posterior_normalized(self):
        mixed = gen_two_blue_states(10, "posterior_flat", 4, seed=2)
        state = mixed.states[0]
        # b2 at position 1 (first half), b1 at position 7 (second half)
        prefix = state.sequence(7, 1)[:5]
        posterior = two_blue_posterior(mixed, prefix)
        assert abs(sum(posterior.values()) - 1.0) < 1e-12
        assert state.b2 in posterior

    def test_posterior_ignores_states_with_b1_in_prefix(self):
        # The heavy state explains [4, 3, 1] only with its b1=4 in the prefix,
        # so only the light state (b2=1, b1=6 later) survives the conditioning.
        heavy = TwoBlueState(0.9, (1, 2, 5, 6), 4, 3)
        light = TwoBlueState(0.1, (4, 3, 2, 5), 6, 1)
        mixed = TwoBlueMixed(6, (heavy, light))
        assert two_blue_posterior(mixed, [4, 3, 1]) == {1: 1.0}

    def test_posterior_arm_thresholds_at_conditioned_argmax(self):
        heavy = TwoBlueState(0.9, (1, 2, 5, 6), 4, 3)
        light = TwoBlueState(0.1, (4, 3, 2, 5), 6, 1)
        mixed = TwoBlueMixed(6, (heavy, light))
        # light state with b2 at position 2 and b1 at position 4: [4, 3, 1, 2, 6, 5]
        stream = sequence_stream(light.sequence(4, 2), blues=(6, 1))
        policy = PosteriorArgmaxThreshold(mixed)
        trace = run_policy(stream, policy, SingleItem(), rng=0)
        assert policy.audit == {"tau": 1.0, "p_tau": 1.0}
        # first value above 1 after the first half is the red 2
        assert trace.selected_ids == ["v2"]

    def test_posterior_weights_states_sharing_b2(self):
        a = TwoBlueState(0.3, (2, 4, 3, 5), 6, 1)
        b = TwoBlueState(0.2, (2, 4, 5, 3), 6, 1)
        c = TwoBlueState(0.4, (2, 1, 3, 5), 6, 4)
        # b1=2 sits in the prefix, so this state is excluded
        d = TwoBlueState(0.1, (3, 4, 5, 6), 2, 1)
        mixed = TwoBlueMixed(6, (a, b, c, d))
        posterior = two_blue_posterior(mixed, [2, 1, 4])
        assert posterior == pytest.approx({1: 5 / 9, 4: 4 / 9})

    def test_posterior_undefined_for_impossible_prefix(self):
        mixed = TwoBlueMixed(4, (TwoBlueState(1.0, (1, 2), 4, 3),))
        with pytest.raises(UndefinedPosteriorError):
            two_blue_posterior(mixed, [2, 1])
        # b2 seen but b1 seen too: outside the conditioning event
        with pytest.raises(UndefinedPosteriorError):
            two_blue_posterior(mixed, [4, 3])


class TestTwoBluePayoff:
    def test_exact_is_a_probability(self):
        mixed = gen_two_blue_states(8, "low_second_max", 3, seed=0)
        result = exact_two_blue_payoff(mixed)
        assert 0.0 <= result["success"] <= 1.0
        assert set(result["per_arm"]) == {"interval", "random", "posterior", "top_quarter"}
        assert abs(result["success"] - sum(result["per_arm"].values()) / 4) < 1e-12

    def test_monte_carlo_matches_exact(self):
        mixed = gen_two_blue_states(8, "uniform_reds", 4, seed=0)
        exact = exact_two_blue_payoff(mixed)["success"]
        policy = two_blue_policy(mixed)
        rng = np.random.default_rng(11)
        trials = 6000
        wins = 0
        for trial in range(trials):
            s = int(rng.choice(len(mixed.states), p=mixed.weights))
            stream = mixed.realize(s, rng)
            trace = run_policy(stream, policy, SingleItem(), rng=make_rng(trial, 1))
            wins += any(a.value >= mixed.states[s].b2 for a in trace.selected)
        stderr = math.sqrt(exact * (1 - exact) / trials)
        assert abs(wins / trials - exact) < 4 * stderr + 1e-3


class TestGoodBadInputs:
    @pytest.mark.parametrize("N,seed", [(5, 0), (6, 1), (8, 2), (8, 3)])
    def test_good_probability_bound(self, N, seed):
        p = good_probability(gen_reduced_states(N, 6, seed))
        assert p >= Fraction(49, 99)

    def test_weights_are_exact(self):
        mixed = gen_reduced_states(6, 5, seed=4)
        assert sum(s.weight for s in mixed.states) == 1

    def test_single_state_input_is_good_or_bad_by_side(self):
        mixed = ReducedMixed(4, (ReducedState(Fraction(1), (1, 2, 3), 4),))
        # Blue at position 0 (left half) -> left mass only -> good
        assert classify_input_good_bad(mixed, (4, 1, 2, 3)) == "good"
        # Blue at position 3 (right half) -> right mass only -> bad
        assert classify_input_good_bad(mixed, (1, 2, 3, 4)) == "bad"

    def test_zero_probability_input(self):
        mixed = ReducedMixed(4, (ReducedState(Fraction(1), (1, 2, 3), 4),))
        with pytest.raises(UndefinedPosteriorError):
            classify_input_good_bad(mixed, (3, 2, 1, 4))


# ============================================================
# Commands
# ============================================================


class TestSingleItemCommands:
    def test_logstar_schedule(self):
        result = single_item.logstar_schedule(n=16)
        assert result["status"] is True
        assert result["data"]["log_star"] == 3

    def test_logstar_schedule_bad_n(self):
        result = single_item.logstar_schedule(n=2)
        assert result["status"] is False
        assert result["data"]["error_code"] == "CONFIG_ERROR"

    def test_good_input_probability(self):
        result = single_item.good_input_probability(N=6, states=4, seed=1)
        assert result["status"] is True
        assert result["data"]["bound_holds"] is True

    def test_two_blue_exact(self, tmp_path):
        import json

        from byzantine_secretary.single_item import two_blue_to_dict

        path = tmp_path / "tb.json"
        path.write_text(json.dumps(two_blue_to_dict(gen_two_blue_states(8, seed=3))))
        result = single_item.two_blue_exact(instance=str(path))
        assert result["status"] is True
        assert 0 <= result["data"]["success"] <= 1
