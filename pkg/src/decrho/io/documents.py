"""JSON documents for policies and run reports.

Policy document::

    {"horizon": h,
     "agents": [{"layers": [[{"action": a, "edges": [q, ...]}, ...], ...]}, ...],
     "value": v, "gamma_points": [[...], ...], "seed": s,
     "prediction_rules": [[{"sequence": [z, ...], "action": k}, ...], ...]}

``prediction_rules`` is optional. Report document::

    {"config": {...},
     "iterations": [{"gamma": [[...]], "value": v, "true_value": v, "phase_times": [...]}, ...],
     "best": {"value": v, "policy_path": p},
     "timing": {...}}

Each iteration's ``phase_times`` names the phases it ran; the durations sit in
``timing`` so that everything outside that section is identical across
repeated runs with the same seed.
"""

from __future__ import annotations

import json
from dataclasses import asdict, is_dataclass

import numpy as np

from ..exceptions import PolicyStructureError
from ..policy import FscNode, JointPolicy, LayeredFsc, PredictionRule


def _plain(obj):
    """Convert numpy scalars and arrays to JSON-ready Python values."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if is_dataclass(obj) and not isinstance(obj, type):
        return _plain(asdict(obj))
    return obj


def policy_to_dict(policy: JointPolicy, value=None, gamma_points=None, seed=None) -> dict:
    agents = []
    for i, fsc in enumerate(policy.agents):
        if not isinstance(fsc, LayeredFsc):
            raise PolicyStructureError(f"agent {i} policy is not a layered controller")
        # re-run the structural checks: a hand-built controller may bypass them
        LayeredFsc(fsc.layers)
        agents.append({"layers": [[{"action": int(n.action), "edges": [int(e) for e in n.edges]}
                                   for n in layer] for layer in fsc.layers]})
    doc = {
        "horizon": policy.horizon,
        "agents": agents,
        "value": None if value is None else float(value),
        "gamma_points": None if gamma_points is None else _plain(np.asarray(gamma_points)),
        "seed": seed,
    }
    if policy.prediction_rule is not None:
        doc["prediction_rules"] = [
            [{"sequence": list(seq), "action": int(a)} for seq, a in rule.items()]
            for rule in policy.prediction_rule.rules
        ]
    return doc


def serialize_policy(policy: JointPolicy, value=None, gamma_points=None, seed=None) -> str:
    """Policy document text; raises ``PolicyStructureError`` on a dangling edge."""
    return json.dumps(policy_to_dict(policy, value, gamma_points, seed), indent=1)


def policy_from_dict(doc: dict) -> JointPolicy:
    missing = [k for k in ("horizon", "agents") if k not in doc]
    if missing:
        raise PolicyStructureError(f"policy document lacks {missing}")
    agents = []
    for spec in doc["agents"]:
        layers = [[FscNode(int(n["action"]), tuple(int(e) for e in n.get("edges", ()))) for n in layer]
                  for layer in spec["layers"]]
        agents.append(LayeredFsc(layers))
    rule = None
    if doc.get("prediction_rules") is not None:
        rule = PredictionRule(tuple({tuple(e["sequence"]): int(e["action"]) for e in rules}
                                    for rules in doc["prediction_rules"]))
    policy = JointPolicy(tuple(agents), rule)
    if policy.horizon != doc["horizon"]:
        raise PolicyStructureError(f"document horizon {doc['horizon']} but controllers have {policy.horizon} layers")
    return policy


def parse_policy(text: str) -> JointPolicy:
    return policy_from_dict(json.loads(text))


def read_policy_document(text: str):
    """``(policy, metadata)`` where metadata holds value, gamma_points and seed."""
    doc = json.loads(text)
    return policy_from_dict(doc), {k: doc.get(k) for k in ("value", "gamma_points", "seed")}


def report_to_dict(report, policy_path=None) -> dict:
    """Report document for an APAS run; timings are collected under ``timing``."""
    iterations, timing = [], []
    for rec in report.iterations:
        iterations.append({
            "gamma": _plain(rec.gamma_points),
            "value": float(rec.value),
            "true_value": float(rec.true_value),
            "rho_value": float(rec.rho_value),
            "planner_value": float(rec.planner_value),
            "best_value": float(rec.best_value),
            "phase_times": sorted(rec.phase_times),
        })
        timing.append({k: float(v) for k, v in sorted(rec.phase_times.items())})
    return {
        "config": _plain(report.config),
        "iterations": iterations,
        "best": {"value": float(report.best_value), "policy_path": policy_path},
        "converged": bool(report.converged),
        "timing": {"phase_times": timing, "total": float(sum(sum(t.values()) for t in timing))},
    }


def serialize_report(report, policy_path=None) -> str:
    return json.dumps(report_to_dict(report, policy_path), indent=1, sort_keys=True)
