"""Model parsing, validation, objective normalization, round-trips."""

from fractions import Fraction

import pytest

from cptmdp.errors import ParseError, ValidationError
from cptmdp.model import (
    MeanPayoffObjective,
    ModelKind,
    Strategy,
    StrategyScope,
    WeightedReachObjective,
    apply_strategy,
    model_to_json_dict,
    outcome_vector,
    parse_model,
    serialize_model,
    strategy_from_json_dict,
    strategy_to_json_dict,
    validate_objective,
)


class TestParse:
    def test_running_example(self, running_example):
        model, obj = running_example
        assert model.kind is ModelKind.MDP
        assert len(model.states) == 5
        assert model.actions["s0"] == ("a1", "a2")
        assert obj.targets == {"s1": 20.0, "s3": -5.0, "s4": 50.0}
        assert obj.penalty == 0.0

    def test_single_state_chain_no_targets(self):
        text = '{"type":"mc","states":["s"],"initial":"s",' \
               '"transitions":{"s":{"a":{"s":1}}},' \
               '"objective":{"kind":"weighted-reachability","targets":{}}}'
        model, obj = parse_model(text)
        assert model.kind is ModelKind.MC
        assert obj.targets == {}

    def test_non_stochastic_row_rejected(self):
        text = '{"type":"mc","states":["s","t"],"initial":"s",' \
               '"transitions":{"s":{"a":{"t":0.9}},"t":{"a":{"t":1}}},' \
               '"objective":{"kind":"weighted-reachability","targets":{}}}'
        with pytest.raises(ValidationError, match="sums to"):
            parse_model(text)

    def test_dangling_reference_rejected(self):
        text = '{"type":"mc","states":["s"],"initial":"s",' \
               '"transitions":{"s":{"a":{"ghost":1}}},' \
               '"objective":{"kind":"weighted-reachability","targets":{}}}'
        with pytest.raises(ValidationError, match="undeclared"):
            parse_model(text)

    def test_negative_probability_rejected(self):
        text = '{"type":"mc","states":["s","t"],"initial":"s",' \
               '"transitions":{"s":{"a":{"s":1.5,"t":-0.5}},"t":{"a":{"t":1}}},' \
               '"objective":{"kind":"weighted-reachability","targets":{}}}'
        with pytest.raises(ValidationError, match="negative"):
            parse_model(text)

    def test_bad_json_reports_position(self):
        with pytest.raises(ParseError, match="line"):
            parse_model("{not json")

    def test_chain_with_two_actions_rejected(self):
        text = '{"type":"mc","states":["s"],"initial":"s",' \
               '"transitions":{"s":{"a":{"s":1},"b":{"s":1}}},' \
               '"objective":{"kind":"weighted-reachability","targets":{}}}'
        with pytest.raises(ValidationError, match="exactly one action"):
            parse_model(text)

    def test_unsupported_objective(self):
        text = '{"type":"mc","states":["s"],"initial":"s",' \
               '"transitions":{"s":{"a":{"s":1}}},' \
               '"objective":{"kind":"total-reward"}}'
        with pytest.raises(ValidationError, match="unsupported objective"):
            parse_model(text)

    def test_rational_probabilities(self):
        text = '{"type":"mc","states":["s","t","u"],"initial":"s",' \
               '"transitions":{"s":{"a":{"t":"44/100","u":"56/100"}},' \
               '"t":{"a":{"t":1}},"u":{"a":{"u":1}}},' \
               '"objective":{"kind":"weighted-reachability","targets":{"t":3}}}'
        model, _ = parse_model(text)
        assert model.transitions["s"]["a"]["t"] == Fraction(11, 25)

    def test_mean_payoff_fills_missing_rewards(self):
        text = '{"type":"mc","states":["s","t"],"initial":"s",' \
               '"transitions":{"s":{"a":{"t":1}},"t":{"a":{"t":1}}},' \
               '"objective":{"kind":"mean-payoff","rewards":{"t":4}}}'
        _, obj = parse_model(text)
        assert isinstance(obj, MeanPayoffObjective)
        assert obj.rewards == {"s": 0.0, "t": 4.0}

    def test_round_trip(self, running_example, two_coupon):
        for model, obj in (running_example, two_coupon):
            text = serialize_model(model, obj)
            model2, obj2 = parse_model(text)
            assert model_to_json_dict(model, obj) == model_to_json_dict(model2, obj2)

    def test_round_trip_preserves_rationals(self):
        text = '{"type":"mc","states":["s","t","u"],"initial":"s",' \
               '"transitions":{"s":{"a":{"t":"1/3","u":"2/3"}},' \
               '"t":{"a":{"t":1}},"u":{"a":{"u":1}}},' \
               '"objective":{"kind":"weighted-reachability","targets":{"t":3}}}'
        model, obj = parse_model(text)
        model2, obj2 = parse_model(serialize_model(model, obj))
        assert model2.transitions["s"]["a"]["t"] == Fraction(1, 3)


class TestValidateObjective:
    def test_running_example_unchanged(self, running_example):
        model, obj = running_example
        model2, obj2 = validate_objective(model, obj)
        assert model2 is model
        assert obj2.targets == obj.targets

    def test_non_absorbing_target_rewritten(self):
        text = '{"type":"mdp","states":["s","t","u"],"initial":"s",' \
               '"transitions":{"s":{"a":{"t":1}},"t":{"a":{"u":1}},"u":{"a":{"u":1}}},' \
               '"objective":{"kind":"weighted-reachability","targets":{"t":7}}}'
        model, obj = parse_model(text)
        model2, obj2 = validate_objective(model, obj)
        assert model2.successors("t", model2.single_action("t")) == {"t": 1.0}
        assert obj2.targets == {"t": 7.0}

    def test_penalty_valued_target_dropped(self):
        obj = WeightedReachObjective(targets={"s1": 0.0, "s3": -5.0, "s4": 50.0})
        text = '{"type":"mc","states":["s1","s3","s4"],"initial":"s1",' \
               '"transitions":{"s1":{"a":{"s1":1}},"s3":{"a":{"s3":1}},' \
               '"s4":{"a":{"s4":1}}},' \
               '"objective":{"kind":"weighted-reachability","targets":{}}}'
        model, _ = parse_model(text)
        _, obj2 = validate_objective(model, obj)
        assert set(obj2.targets) == {"s3", "s4"}

    def test_idempotent(self, running_example):
        model, obj = running_example
        m1, o1 = validate_objective(model, obj)
        m2, o2 = validate_objective(m1, o1)
        assert o1 == o2
        assert model_to_json_dict(m1, o1) == model_to_json_dict(m2, o2)


class TestOutcomeVector:
    def test_running_example(self, running_example):
        _, obj = running_example
        assert outcome_vector(obj) == (-5.0, 0.0, 20.0, 50.0)

    def test_empty_targets(self):
        assert outcome_vector(WeightedReachObjective(targets={})) == (0.0,)

    def test_deduplication(self):
        obj = WeightedReachObjective(targets={"a": 7.0, "b": 7.0})
        assert outcome_vector(obj) == (0.0, 7.0)

    def test_strictly_increasing_and_contains_penalty(self):
        obj = WeightedReachObjective(targets={"a": 3.0, "b": -2.0}, penalty=1.0)
        vec = outcome_vector(obj)
        assert all(b > a for a, b in zip(vec, vec[1:]))
        assert 1.0 in vec


class TestStrategy:
    def test_apply_strategy_mixes_rows(self, running_example):
        model, _ = running_example
        sigma = Strategy(choices={"s0": {"a1": 0.5, "a2": 0.5},
                                  "s1": {"loop": 1.0}, "s2": {"loop": 1.0},
                                  "s3": {"loop": 1.0}, "s4": {"loop": 1.0}})
        chain = apply_strategy(model, sigma)
        assert chain.kind is ModelKind.MC
        row = chain.successors("s0", chain.single_action("s0"))
        assert row["s1"] == pytest.approx(0.475)
        assert row["s2"] == pytest.approx(0.05)

    def test_quotient_scope_rejected(self, running_example):
        model, _ = running_example
        sigma = Strategy(choices={}, scope=StrategyScope.QUOTIENT)
        from cptmdp.errors import ScopeError
        with pytest.raises(ScopeError):
            apply_strategy(model, sigma)

    def test_json_round_trip(self):
        sigma = Strategy(choices={"s": {"a": 0.25, "b": 0.75}},
                         scope=StrategyScope.ORIGINAL, notes="x")
        assert strategy_from_json_dict(strategy_to_json_dict(sigma)) == sigma
