"""Conversion of a Dec-POMDP with a centralized prediction reward into a standard Dec-POMDP.

Every agent gets one extra step at time ``h`` whose actions are individual
predictions, one per alpha vector. The state is frozen and a single null
observation is emitted. The reward of a joint prediction is the average of
the agents' chosen alpha vectors evaluated at the true state.

The planner uses :class:`ConvertedModel` implicitly (the final step is handled
in closed form); :attr:`ConvertedModel.model` materializes the explicit
horizon ``h + 1`` model when a table-level view is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .beliefs import PlanTimeStatistic, project
from .exceptions import ModelError
from .model import DecPomdpModel
from .policy import PredictionRule
from .rewards import AlphaSet, expected_centralized_reward

GAP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DecRhoPomdp:
    """A Dec-POMDP paired with the alpha vectors of its final prediction reward."""

    model: DecPomdpModel
    gamma: AlphaSet

    def __post_init__(self):
        if self.gamma.n_states != self.model.n_states:
            raise ModelError(f"alpha vectors have {self.gamma.n_states} entries, "
                             f"model has {self.model.n_states} states")

    def convert(self) -> "ConvertedModel":
        return ConvertedModel(self.model, self.gamma)


class ConvertedModel:
    """A Dec-POMDP ``M`` extended with prediction actions for ``gamma``."""

    def __init__(self, source: DecPomdpModel, gamma: AlphaSet):
        if len(gamma) == 0:
            raise ModelError("alpha set is empty")
        if gamma.n_states != source.n_states:
            raise ModelError(f"alpha vectors have {gamma.n_states} entries, model has {source.n_states} states")
        self.source = source
        self.gamma = gamma
        # prediction action k selects alpha vector link[k]
        self.link = tuple(range(len(gamma)))

    @property
    def n_agents(self) -> int:
        return self.source.n_agents

    @property
    def n_states(self) -> int:
        return self.source.n_states

    @property
    def prediction_step(self) -> int:
        return self.source.horizon

    @property
    def horizon(self) -> int:
        return self.source.horizon + 1

    @property
    def n_predictions(self) -> int:
        return len(self.link)

    def prediction_vectors(self) -> np.ndarray:
        """Alpha vector of each prediction action, in action order."""
        return self.gamma.vectors[list(self.link)]

    def individual_reward(self, s: int, action: int) -> float:
        return float(self.gamma.vectors[self.link[action], s])

    @cached_property
    def model(self) -> DecPomdpModel:
        src = self.source
        n, k, s = src.n_agents, self.n_predictions, src.n_states
        sizes = (k,) * n
        joint = np.array(np.unravel_index(np.arange(k ** n), sizes)).T  # (k^n, n)
        vectors = self.prediction_vectors()
        final_reward = vectors[joint].mean(axis=1).T  # (s, k^n)
        final_dyn = np.zeros((s, k ** n, 1, s))
        final_dyn[np.arange(s), :, 0, np.arange(s)] = 1.0
        return DecPomdpModel(
            horizon=src.horizon + 1,
            initial_belief=src.initial_belief,
            action_sizes=src.action_sizes + (sizes,),
            observation_sizes=src.observation_sizes + ((1,) * n,),
            dynamics=src.dynamics + (final_dyn,),
            rewards=src.rewards + (final_reward,),
            state_names=src.state_names,
            agent_names=src.agent_names,
        )

    def __repr__(self):
        return f"ConvertedModel(horizon={self.horizon}, n_predictions={self.n_predictions})"


def convert_to_standard(model: DecPomdpModel, gamma: AlphaSet) -> ConvertedModel:
    """Add individual prediction actions for every alpha vector in ``gamma``."""
    return ConvertedModel(model, gamma)


def _best_predictions(sigma: PlanTimeStatistic, vectors: np.ndarray) -> list:
    rules = []
    for i in range(sigma.n_agents):
        weights = sigma.individual_weights(i)
        if not weights:
            rules.append({})
            continue
        seqs = list(weights)
        scores = np.array([weights[u] for u in seqs]) @ vectors.T
        # np.argmax returns the first maximum: lowest action index on ties
        best = np.argmax(scores, axis=1)
        rules.append({u: int(k) for u, k in zip(seqs, best)})
    return rules


def optimal_prediction_rule(sigma_h: PlanTimeStatistic, converted: ConvertedModel) -> PredictionRule:
    """Per-agent prediction maximizing the expected individual prediction reward.

    Each agent conditions only on its own final observation sequence.
    """
    if sigma_h.t != converted.prediction_step:
        raise ModelError(f"statistic is at t={sigma_h.t}, predictions happen at t={converted.prediction_step}")
    return PredictionRule(tuple(_best_predictions(sigma_h, converted.prediction_vectors())))


def expected_decentralized_reward(sigma_h: PlanTimeStatistic, converted: ConvertedModel,
                                  phi: PredictionRule) -> float:
    """Expected average individual prediction reward of joint prediction rule ``phi``."""
    vectors = converted.prediction_vectors()
    n = sigma_h.n_agents
    total = 0.0
    for zvec, row in sigma_h.entries.items():
        acts = [phi.action(i, project(zvec, i)) for i in range(n)]
        total += float(row @ vectors[acts].mean(axis=0))
    return total


def optimal_decentralized_reward(sigma_h: PlanTimeStatistic, gamma: AlphaSet) -> float:
    """Expected decentralized prediction reward under the optimal prediction rule."""
    n = sigma_h.n_agents
    total = 0.0
    for i in range(n):
        weights = sigma_h.individual_weights(i)
        if weights:
            scores = np.array(list(weights.values())) @ gamma.vectors.T
            total += scores.max(axis=1).sum()
    return float(total / n)


def decentralization_gap(sigma_h: PlanTimeStatistic, gamma: AlphaSet, clamp: bool = True) -> float:
    """Centralized minus optimal decentralized expected prediction reward.

    Values in ``[-1e-9, 0)`` are floating-point noise and clamp to 0 unless
    ``clamp`` is false.
    """
    gap = expected_centralized_reward(sigma_h, gamma) - optimal_decentralized_reward(sigma_h, gamma)
    if clamp and -GAP_TOL <= gap < 0.0:
        return 0.0
    return gap
