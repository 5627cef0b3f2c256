import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import static_two_sensor_model
from decrho import (DecPomdpModel, PlanTimeStatistic, ZeroLikelihoodError, belief_update, condition,
                    expected_stage_reward, filter_sequence, propagate, random_instance, statistic_update)
from decrho.verification import random_tree_policy

# hand oracle for two 0.8-accurate sensors on a static two-state model:
# both report s0 with probability 0.5 * 0.8 * 0.8 = 0.32 from s0 and 0.5 * 0.2 * 0.2 = 0.02 from s1
BOTH_S0 = 0.5 * 0.8 * 0.8
BOTH_S0_FROM_S1 = 0.5 * 0.2 * 0.2


def _only_rule():
    return [lambda seq: 0, lambda seq: 0]


def test_belief_update_two_sensors(two_sensor):
    post, lik = belief_update(two_sensor, 0, [0.5, 0.5], (0, 0), (0, 0))
    assert lik == pytest.approx(BOTH_S0 + BOTH_S0_FROM_S1)
    assert lik == pytest.approx(0.34)
    np.testing.assert_allclose(post, [BOTH_S0 / 0.34, BOTH_S0_FROM_S1 / 0.34])
    np.testing.assert_allclose(post, [0.941, 0.059], atol=5e-4)


def test_perfect_sensor_collapses_belief():
    dyn = np.zeros((2, 1, 2, 2))
    dyn[0, 0, 0, 0] = dyn[1, 0, 1, 1] = 1.0
    model = DecPomdpModel.homogeneous(1, [0.3, 0.7], (1,), (2,), dyn, np.zeros((2, 1)))
    post, lik = belief_update(model, 0, [0.3, 0.7], (0,), (0,))
    np.testing.assert_array_equal(post, [1.0, 0.0])
    assert lik == pytest.approx(0.3)


def test_uninformative_sensor_only_predicts():
    trans = np.array([[[0.2, 0.8]], [[0.6, 0.4]]])
    obs = np.full((1, 2, 3), 1 / 3)
    model = DecPomdpModel.from_factored(1, [0.5, 0.5], (1,), (3,), trans, obs, np.zeros((2, 1)))
    post, lik = belief_update(model, 0, [0.5, 0.5], (0,), (2,))
    np.testing.assert_allclose(post, [0.5 * 0.2 + 0.5 * 0.6, 0.5 * 0.8 + 0.5 * 0.4])
    assert lik == pytest.approx(1 / 3)


def test_impossible_observation_raises():
    dyn = np.zeros((2, 1, 2, 2))
    dyn[0, 0, 0, 0] = dyn[1, 0, 1, 1] = 1.0
    model = DecPomdpModel.homogeneous(1, [1.0, 0.0], (1,), (2,), dyn, np.zeros((2, 1)))
    with pytest.raises(ZeroLikelihoodError):
        belief_update(model, 0, [1.0, 0.0], (0,), (1,))


def test_statistic_update_two_sensors(two_sensor):
    sigma1 = statistic_update(two_sensor, PlanTimeStatistic.initial(two_sensor), _only_rule())
    assert sigma1.t == 1
    assert sigma1.total_mass() == pytest.approx(1.0)
    assert len(sigma1) == 4
    assert sigma1.entries[((0, 0),)][0] == pytest.approx(BOTH_S0)
    assert sigma1.entries[((0, 0),)][0] == pytest.approx(0.32)


def test_condition_two_sensors(two_sensor):
    sigma1 = statistic_update(two_sensor, PlanTimeStatistic.initial(two_sensor), _only_rule())
    belief, mass = condition(sigma1, [(0, 0)])
    assert mass == pytest.approx(0.34)
    np.testing.assert_allclose(belief, [0.941, 0.059], atol=5e-4)


def test_condition_single_sequence_and_unseen():
    sigma = PlanTimeStatistic.from_entries(1, 1, {((0,),): [0.25, 0.75]})
    belief, mass = condition(sigma, [(0,)])
    assert mass == pytest.approx(1.0)
    np.testing.assert_allclose(belief, [0.25, 0.75])
    assert sigma.marginal([(1,)]) == 0.0
    with pytest.raises(ZeroLikelihoodError):
        condition(sigma, [(1,)])


def test_deterministic_model_has_one_extension_per_sequence():
    dyn = np.zeros((3, 1, 3, 3))
    for s in range(3):
        dyn[s, 0, s, (s + 1) % 3] = 1.0
    model = DecPomdpModel.homogeneous(3, [1.0, 0.0, 0.0], (1,), (3,), dyn, np.zeros((3, 1)))
    stats = propagate(model, [[lambda seq: 0]] * 3)
    assert [len(s) for s in stats] == [1, 1, 1, 1]
    assert list(stats[-1].entries) == [((0,), (1,), (2,))]


def test_expected_stage_reward_cases(two_sensor):
    sigma0 = PlanTimeStatistic.initial(two_sensor)
    assert expected_stage_reward(two_sensor, sigma0, _only_rule()) == 0.0
    constant = static_two_sensor_model(horizon=2, rewards=[2.5, 2.5])
    assert expected_stage_reward(constant, PlanTimeStatistic.initial(constant), _only_rule()) == pytest.approx(2.5)
    indicator = static_two_sensor_model(horizon=2, rewards=[1.0, 0.0])
    sigma1 = statistic_update(indicator, PlanTimeStatistic.initial(indicator), _only_rule())
    assert expected_stage_reward(indicator, sigma1, _only_rule()) == pytest.approx(0.5)


def test_statistic_past_horizon_is_rejected(two_sensor):
    sigma1 = statistic_update(two_sensor, PlanTimeStatistic.initial(two_sensor), _only_rule())
    with pytest.raises(Exception, match="horizon"):
        statistic_update(two_sensor, sigma1, _only_rule())


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), horizon=st.integers(1, 3), n_states=st.integers(1, 4))
def test_statistics_conserve_mass_and_match_filtering(seed, horizon, n_states):
    rng = np.random.default_rng(seed)
    model = random_instance(rng, n_states=n_states, horizon=horizon)
    policy = random_tree_policy(model, rng)
    stats = propagate(model, policy.decision_rules(horizon))
    for t, sigma in enumerate(stats):
        assert sigma.t == t
        assert sigma.total_mass() == pytest.approx(1.0, abs=1e-12)
        for zvec in sigma.entries:
            belief, _ = condition(sigma, zvec)
            actions = [tuple(p.action(tuple(z[i] for z in zvec[:k])) for i, p in enumerate(policy.agents))
                       for k in range(t)]
            np.testing.assert_allclose(belief, filter_sequence(model, actions, list(zvec)), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_individual_weights_sum_to_statistic(seed):
    rng = np.random.default_rng(seed)
    model = random_instance(rng, n_states=3, horizon=2)
    sigma = propagate(model, random_tree_policy(model, rng).decision_rules(2))[-1]
    total = sum(row for row in sigma.entries.values())
    for i in range(model.n_agents):
        np.testing.assert_allclose(sum(sigma.individual_weights(i).values()), total, atol=1e-12)
