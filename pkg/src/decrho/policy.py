"""Deterministic policy representations.

* :class:`LayeredFsc` -- a finite-horizon finite-state controller: one layer
  of nodes per time step, each node emitting an action and holding one edge
  per next observation into the following layer.
* :class:`TreePolicy` -- an explicit individual policy over observation
  histories (what the brute-force oracle returns).
* :class:`PredictionRule` -- per-agent map from final individual observation
  sequence to a prediction action.
* :class:`JointPolicy` -- one individual policy per agent plus an optional
  prediction rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import PolicyStructureError


@dataclass(frozen=True)
class FscNode:
    action: int
    edges: tuple = ()


class LayeredFsc:
    """Individual policy as a layered controller; layer 0 has a single start node."""

    def __init__(self, layers):
        self.layers = tuple(
            tuple(n if isinstance(n, FscNode) else FscNode(int(n[0]), tuple(int(e) for e in n[1]))
                  for n in layer)
            for layer in layers
        )
        self._check()

    def _check(self):
        if not self.layers:
            raise PolicyStructureError("controller needs at least one layer")
        if len(self.layers[0]) != 1:
            raise PolicyStructureError("layer 0 must contain exactly one start node")
        for t, layer in enumerate(self.layers):
            if not layer:
                raise PolicyStructureError(f"layer {t} is empty")
            last = t == len(self.layers) - 1
            for q, node in enumerate(layer):
                if last and node.edges:
                    raise PolicyStructureError(f"final-layer node {q} has outgoing edges")
                if not last:
                    if not node.edges:
                        raise PolicyStructureError(f"node {q} in layer {t} has no edges")
                    width = len(self.layers[t + 1])
                    for z, e in enumerate(node.edges):
                        if not 0 <= e < width:
                            raise PolicyStructureError(
                                f"dangling edge: layer {t} node {q} observation {z} -> {e} "
                                f"(layer {t + 1} has {width} nodes)")

    @property
    def horizon(self) -> int:
        return len(self.layers)

    def widths(self) -> tuple:
        return tuple(len(layer) for layer in self.layers)

    def node(self, seq) -> int:
        """Index of the node reached after observing ``seq`` from the start node."""
        q = 0
        for t, z in enumerate(seq):
            edges = self.layers[t][q].edges
            if not 0 <= z < len(edges):
                raise PolicyStructureError(f"observation {z} has no edge at layer {t} node {q}")
            q = edges[z]
        return q

    def action(self, seq) -> int:
        seq = tuple(seq)
        return self.layers[len(seq)][self.node(seq)].action

    __call__ = action

    def action_table(self, t: int) -> np.ndarray:
        return np.array([n.action for n in self.layers[t]], dtype=np.int64)

    def edge_table(self, t: int) -> np.ndarray:
        return np.array([n.edges for n in self.layers[t]], dtype=np.int64)

    def check_spaces(self, action_sizes, observation_sizes, agent: int, steps: int):
        """Raise unless actions and edges fit the agent's spaces for ``steps`` steps."""
        if self.horizon < steps:
            raise PolicyStructureError(f"controller has {self.horizon} layers, problem needs {steps}")
        for t in range(steps):
            n_act = action_sizes[t][agent]
            for q, node in enumerate(self.layers[t]):
                if not 0 <= node.action < n_act:
                    raise PolicyStructureError(f"layer {t} node {q} action {node.action} out of range")
                if t + 1 < self.horizon and len(node.edges) != observation_sizes[t][agent]:
                    raise PolicyStructureError(
                        f"layer {t} node {q} has {len(node.edges)} edges, agent observes "
                        f"{observation_sizes[t][agent]} values")

    def __eq__(self, other):
        return isinstance(other, LayeredFsc) and self.layers == other.layers

    def __hash__(self):
        return hash(self.layers)

    def __repr__(self):
        return f"LayeredFsc(widths={self.widths()})"


class TreePolicy:
    """Individual policy given as one mapping ``sequence -> action`` per step.

    Sequences missing from a mapping fall back to ``default``.
    """

    def __init__(self, rules, default: int = 0):
        self.rules = tuple(dict(r) for r in rules)
        self.default = default

    @property
    def horizon(self) -> int:
        return len(self.rules)

    def action(self, seq) -> int:
        seq = tuple(seq)
        return self.rules[len(seq)].get(seq, self.default)

    __call__ = action

    def check_spaces(self, action_sizes, observation_sizes, agent: int, steps: int):
        if self.horizon < steps:
            raise PolicyStructureError(f"policy has {self.horizon} steps, problem needs {steps}")
        for t in range(steps):
            for a in list(self.rules[t].values()) + [self.default]:
                if not 0 <= a < action_sizes[t][agent]:
                    raise PolicyStructureError(f"action {a} out of range at t={t}")

    def __eq__(self, other):
        return isinstance(other, TreePolicy) and self.rules == other.rules and self.default == other.default

    def __repr__(self):
        return f"TreePolicy(horizon={self.horizon})"


@dataclass(frozen=True)
class PredictionRule:
    """``rules[i][zvec_i]`` is agent ``i``'s prediction action index."""

    rules: tuple

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(dict(sorted(r.items())) for r in self.rules))

    def action(self, agent: int, seq) -> int:
        try:
            return self.rules[agent][tuple(seq)]
        except KeyError:
            raise PolicyStructureError(
                f"prediction rule of agent {agent} undefined for {tuple(seq)!r}") from None

    def joint(self, zvec) -> tuple:
        return tuple(self.action(i, tuple(z[i] for z in zvec)) for i in range(len(self.rules)))


@dataclass(frozen=True)
class JointPolicy:
    """Tuple of individual policies with an optional terminal prediction rule."""

    agents: tuple
    prediction_rule: Optional[PredictionRule] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if not self.agents:
            raise PolicyStructureError("joint policy needs at least one agent")

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def horizon(self) -> int:
        return min(p.horizon for p in self.agents)

    def decision_rule(self, t: int) -> list:
        """Per-agent callables ``sequence -> action`` at step ``t``."""
        return [p.action for p in self.agents]

    def decision_rules(self, steps: int) -> list:
        return [self.decision_rule(t) for t in range(steps)]

    def check(self, model, steps: Optional[int] = None):
        steps = model.horizon if steps is None else steps
        if self.n_agents != model.n_agents:
            raise PolicyStructureError(f"policy has {self.n_agents} agents, model has {model.n_agents}")
        for i, p in enumerate(self.agents):
            p.check_spaces(model.action_sizes, model.observation_sizes, i, steps)
        return self

    def with_prediction_rule(self, rule: Optional[PredictionRule]) -> "JointPolicy":
        return JointPolicy(self.agents, rule)


def random_fsc(action_sizes, observation_sizes, agent: int, widths, rng) -> LayeredFsc:
    """Controller with uniform-random actions and edges.

    ``widths[t]`` is the number of nodes in layer ``t`` (forced to 1 for t=0).
    """
    rng = np.random.default_rng(rng)
    layers = []
    steps = len(widths)
    for t in range(steps):
        width = 1 if t == 0 else widths[t]
        layer = []
        for _ in range(width):
            action = int(rng.integers(action_sizes[t][agent]))
            if t + 1 < steps:
                edges = tuple(int(e) for e in rng.integers(widths[t + 1], size=observation_sizes[t][agent]))
            else:
                edges = ()
            layer.append(FscNode(action, edges))
        layers.append(layer)
    return LayeredFsc(layers)


def random_joint_fsc(model, width: int, rng, steps: Optional[int] = None) -> JointPolicy:
    """Random joint controller policy with ``width`` nodes per layer (1 in layer 0)."""
    steps = model.horizon if steps is None else steps
    widths = [1] + [width] * (steps - 1)
    rng = np.random.default_rng(rng)
    return JointPolicy(tuple(random_fsc(model.action_sizes, model.observation_sizes, i, widths, rng)
                             for i in range(model.n_agents)))
