from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decrho import DpomdpParseError, DpomdpSemanticError, DpomdpSyntaxError, random_instance, validate_model
from decrho.benchmarks import DOMAINS, domain_by_name
from decrho.io import parse_dpomdp, read_dpomdp, write_dpomdp

FIXTURES = Path(__file__).parent / "fixtures"


def _tables_equal(a, b):
    return (np.array_equal(a.initial_belief, b.initial_belief)
            and all(np.array_equal(x, y) for x, y in zip(a.dynamics, b.dynamics))
            and all(np.array_equal(x, y) for x, y in zip(a.rewards, b.rewards)))


def test_hand_written_entry():
    model = read_dpomdp(FIXTURES / "two_agent_hand.dpomdp")
    trans, obs = model.factors
    assert model.n_agents == 2 and model.n_states == 2 and model.horizon == 2
    assert trans[0, model.joint_action_index(0, (0, 0)), 1] == 0.3
    assert trans[1, model.joint_action_index(0, (0, 0))].tolist() == [0.0, 1.0]
    np.testing.assert_array_equal(trans[:, model.joint_action_index(0, (0, 1))], np.eye(2))
    assert model.action_names == (("stay", "move"), ("stay", "move"))
    # later entries override earlier ones
    assert model.rewards[0][0, model.joint_action_index(0, (1, 1))] == -0.5
    assert model.rewards[0][0, model.joint_action_index(0, (0, 1))] == 1.0


def test_uniform_keyword():
    model = read_dpomdp(FIXTURES / "tiger_uniform.dpomdp")
    np.testing.assert_array_equal(model.factors[0], 0.5)
    assert validate_model(model) == []


def test_out_of_range_state_names_the_line():
    with pytest.raises(DpomdpSemanticError) as info:
        read_dpomdp(FIXTURES / "bad_state_index.dpomdp")
    assert info.value.line == 13
    assert "line 13" in str(info.value) and "5" in str(info.value)


@pytest.mark.parametrize("name, error", [
    ("bad_identifier.dpomdp", DpomdpSemanticError),
    ("bad_arity.dpomdp", DpomdpSemanticError),
    ("bad_row_sum.dpomdp", DpomdpSemanticError),
    ("bad_discount.dpomdp", DpomdpSemanticError),
    ("bad_number.dpomdp", DpomdpSyntaxError),
    ("bad_fields.dpomdp", DpomdpSyntaxError),
])
def test_malformed_fixtures(name, error):
    with pytest.raises(error):
        read_dpomdp(FIXTURES / name)


def test_syntax_errors_carry_a_column():
    with pytest.raises(DpomdpSyntaxError) as info:
        read_dpomdp(FIXTURES / "bad_number.dpomdp")
    assert (info.value.line, info.value.column) == (13, 20)


def test_missing_horizon():
    text = (FIXTURES / "tiger_uniform.dpomdp").read_text().replace("# horizon: 1\n", "")
    with pytest.raises(DpomdpSemanticError, match="horizon"):
        parse_dpomdp(text)
    assert parse_dpomdp(text, horizon=3).horizon == 3


def test_missing_file_is_an_os_error():
    with pytest.raises(OSError):
        read_dpomdp(FIXTURES / "no_such_file.dpomdp")


def test_parse_errors_are_value_errors():
    assert issubclass(DpomdpParseError, ValueError)


@pytest.mark.parametrize("name", DOMAINS)
@pytest.mark.parametrize("horizon", [1, 3])
def test_benchmark_round_trip(name, horizon):
    model = domain_by_name(name, horizon)
    back = parse_dpomdp(write_dpomdp(model))
    assert back.horizon == horizon
    assert back.action_sizes == model.action_sizes and back.observation_sizes == model.observation_sizes
    assert _tables_equal(back, model)
    assert write_dpomdp(back) == write_dpomdp(model)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_states=st.integers(1, 4), n_agents=st.integers(1, 3),
       stage=st.booleans())
def test_random_instance_round_trip(seed, n_states, n_agents, stage):
    model = random_instance(np.random.default_rng(seed), n_states=n_states, n_agents=n_agents, horizon=2,
                            stage_rewards=stage)
    assert _tables_equal(parse_dpomdp(write_dpomdp(model)), model)
