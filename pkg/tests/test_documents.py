import json

import numpy as np
import pytest

from conftest import tangent_converted
from decrho import (ApasConfig, FscNode, JointPolicy, LayeredFsc, PlannerParams, PolicyStructureError, TreePolicy,
                    coupled_tag, plan, run_apas)
from decrho.io import parse_policy, read_policy_document, serialize_policy, serialize_report
from decrho.io.documents import report_to_dict
from decrho.planner import _Problem


def test_single_node_document():
    policy = JointPolicy((LayeredFsc([[FscNode(1)]]),))
    doc = json.loads(serialize_policy(policy))
    assert doc["horizon"] == 1
    assert doc["agents"] == [{"layers": [[{"action": 1, "edges": []}]]}]
    assert "prediction_rules" not in doc


def test_planner_output_round_trips():
    converted = tangent_converted(coupled_tag(2))
    policy = plan(converted, PlannerParams(seed=0))
    text = serialize_policy(policy, -0.5, converted.gamma.points, 0)
    back, meta = read_policy_document(text)
    assert back == policy
    assert meta["value"] == -0.5 and meta["seed"] == 0
    np.testing.assert_array_equal(meta["gamma_points"], converted.gamma.points)


def test_random_controllers_round_trip():
    model = coupled_tag(3)
    for seed in range(10):
        policy = _Problem(model).initial_policy(3, np.random.default_rng(seed))
        assert parse_policy(serialize_policy(policy)) == policy


def test_dangling_edge_is_rejected_on_write():
    fsc = LayeredFsc([[FscNode(0, (0, 0))], [FscNode(0)]])
    # bypass construction checks the way a hand edit could
    object.__setattr__(fsc, "layers", ((FscNode(0, (0, 3)),), (FscNode(0),)))
    with pytest.raises(PolicyStructureError, match="dangling"):
        serialize_policy(JointPolicy((fsc,)))


def test_tree_policies_cannot_be_written():
    with pytest.raises(PolicyStructureError):
        serialize_policy(JointPolicy((TreePolicy([{(): 0}]),)))


def test_document_errors():
    with pytest.raises(PolicyStructureError, match="lacks"):
        parse_policy('{"agents": []}')
    bad_horizon = {"horizon": 3, "agents": [{"layers": [[{"action": 0, "edges": []}]]}]}
    with pytest.raises(PolicyStructureError, match="horizon"):
        parse_policy(json.dumps(bad_horizon))
    with pytest.raises(json.JSONDecodeError):
        parse_policy("{not json")


def test_report_is_reproducible_outside_timing():
    model = coupled_tag(2)
    config = ApasConfig(outer_iterations=2, planner=PlannerParams(improvement_iterations=4), seed=1)
    a = report_to_dict(run_apas(model, None, config)[1], "p.json")
    b = report_to_dict(run_apas(model, None, config)[1], "p.json")
    a.pop("timing"), b.pop("timing")
    assert a == b
    assert a["iterations"][0]["phase_times"] == ["adapt", "evaluate", "plan"]
    assert a["best"]["policy_path"] == "p.json"
    assert json.loads(serialize_report(run_apas(model, None, config)[1]))["config"]["K"] == 3
