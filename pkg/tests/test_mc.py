"""Chain engine: absorption probabilities, induced prospects, chain values."""

import math

import numpy as np
import pytest

from cptmdp.errors import ValidationError
from cptmdp.mc import absorption_probabilities, induced_prospect, mc_cpt_value, mc_eu_value
from cptmdp.model import Model, ModelKind, WeightedReachObjective
from cptmdp.prospects import cpt, eu

from generators import random_mc
from oracles import outcome_distribution, simulate_outcome_counts


def chain(action_label, rows, initial="s0"):
    states = tuple(rows)
    return Model(kind=ModelKind.MC, states=states, initial=initial,
                 actions={s: (action_label,) for s in states},
                 transitions={s: {action_label: rows[s]} for s in states})


@pytest.fixture(scope="module")
def always_a1():
    return chain("a", {"s0": {"s1": 0.95, "s2": 0.05},
                       "s1": {"s1": 1.0}, "s2": {"s2": 1.0}})


@pytest.fixture(scope="module")
def always_a2():
    return chain("a", {"s0": {"s2": 0.05, "s3": 0.44, "s4": 0.51},
                       "s2": {"s2": 1.0}, "s3": {"s3": 1.0}, "s4": {"s4": 1.0}})


OBJ_A1 = WeightedReachObjective(targets={"s1": 20.0})
OBJ_A2 = WeightedReachObjective(targets={"s3": -5.0, "s4": 50.0})


class TestAbsorption:
    def test_running_chain(self, always_a1):
        probs = absorption_probabilities(always_a1, [("s1",), ("s2",)])
        assert probs == pytest.approx((0.95, 0.05), abs=1e-12)

    def test_initial_absorbing(self, always_a1):
        m = chain("a", {"s1": {"s1": 1.0}, "s2": {"s2": 1.0}}, initial="s1")
        assert absorption_probabilities(m, [("s1",), ("s2",)]) == (1.0, 0.0)

    def test_symmetric_split(self):
        m = chain("a", {"s0": {"l": 0.5, "r": 0.5}, "l": {"l": 1.0}, "r": {"r": 1.0}})
        probs = absorption_probabilities(m, [("l",), ("r",)])
        assert probs == pytest.approx((0.5, 0.5), abs=1e-12)

    def test_open_set_rejected(self, always_a1):
        with pytest.raises(ValidationError, match="not closed"):
            absorption_probabilities(always_a1, [("s0",)])


class TestInducedProspect:
    def test_always_a1(self, always_a1):
        induced = induced_prospect(always_a1, OBJ_A1)
        assert induced.prospect.outcomes == (0.0, 20.0)
        assert induced.prospect.probs == pytest.approx((0.05, 0.95), abs=1e-12)
        assert induced.per_outcome_states[20.0] == ("s1",)

    def test_always_a2(self, always_a2):
        induced = induced_prospect(always_a2, OBJ_A2)
        assert induced.prospect.outcomes == (-5.0, 0.0, 50.0)
        assert induced.prospect.probs == pytest.approx((0.44, 0.05, 0.51), abs=1e-12)

    def test_no_targets(self):
        m = chain("a", {"s0": {"s0": 1.0}})
        induced = induced_prospect(m, WeightedReachObjective(targets={}))
        assert induced.prospect.outcomes == (0.0,)
        assert induced.prospect.probs == (1.0,)

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(41)
        for _ in range(40):
            model, obj = random_mc(rng, n_states=int(rng.integers(3, 12)),
                                   n_targets=int(rng.integers(0, 4)))
            induced = induced_prospect(model, obj)
            assert sum(induced.prospect.probs) == pytest.approx(1.0, abs=1e-9)

    def test_matches_hitting_probability_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(40):
            model, obj = random_mc(rng, n_states=int(rng.integers(3, 12)),
                                   n_targets=int(rng.integers(1, 4)))
            induced = induced_prospect(model, obj)
            oracle = outcome_distribution(model, obj)
            for o, p in zip(induced.prospect.outcomes, induced.prospect.probs):
                assert p == pytest.approx(oracle[o], abs=1e-9)

    def test_monte_carlo_oracle_small(self):
        # the full 1e6-path version runs in the acceptance suite
        rng = np.random.default_rng(43)
        n_paths = 200_000
        for seed in range(3):
            model, obj = random_mc(rng, n_states=10, n_targets=3)
            induced = induced_prospect(model, obj)
            counts = simulate_outcome_counts(model, obj, n_paths, seed=seed)
            for o, p in zip(induced.prospect.outcomes, induced.prospect.probs):
                se = math.sqrt(max(p * (1.0 - p), 0.0) / n_paths)
                assert abs(counts[o] / n_paths - p) <= 3.0 * se + 1e-9


class TestChainValues:
    def test_cpt_values(self, always_a1, always_a2, standard_params):
        assert mc_cpt_value(always_a1, OBJ_A1, standard_params) == \
            pytest.approx(11.07, abs=0.01)
        assert mc_cpt_value(always_a2, OBJ_A2, standard_params) == \
            pytest.approx(10.19, abs=0.01)

    def test_identity_gives_expectation(self, always_a1, identity_params):
        assert mc_cpt_value(always_a1, OBJ_A1, identity_params) == \
            pytest.approx(19.0, abs=1e-12)
        assert mc_eu_value(always_a1, OBJ_A1, identity_params) == \
            pytest.approx(19.0, abs=1e-12)

    def test_identity_weights_match_expected_utility(self, standard_params):
        # cpt with identity weights equals the expectation of u(outcome)
        from cptmdp.prospects import CptParams, UtilitySpec, WeightSpec
        params = CptParams.create(UtilitySpec.tk_power(), WeightSpec.identity(),
                                  WeightSpec.identity())
        rng = np.random.default_rng(44)
        for _ in range(20):
            model, obj = random_mc(rng, n_states=8, n_targets=3)
            prospect = induced_prospect(model, obj).prospect
            assert mc_cpt_value(model, obj, params) == \
                pytest.approx(eu(params, prospect), abs=1e-12)
