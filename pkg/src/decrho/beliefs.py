"""Bayesian filtering and plan-time sufficient statistics.

A plan-time statistic at time ``t`` is the joint distribution over the state
and the joint observation sequence induced by a past joint policy. It is
stored sparsely: a mapping from joint observation sequence to the
(unnormalized) vector ``sigma(., zvec)`` over states. Sequences with zero mass
are dropped exactly (no epsilon pruning).

A joint observation sequence is a tuple of joint observations, one per step,
each a tuple of per-agent observation indices. ``project(zvec, i)`` gives the
individual sequence of agent ``i``.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exceptions import BudgetExceededError, ModelError, PolicyStructureError, ZeroLikelihoodError
from .model import DecPomdpModel

MASS_TOL = 1e-9


def project(zvec: tuple, agent: int) -> tuple:
    """Individual observation sequence of ``agent`` inside a joint sequence."""
    return tuple(z[agent] for z in zvec)


def project_others(zvec: tuple, agent: int) -> tuple:
    """Joint sequence of every agent except ``agent``."""
    return tuple(z[:agent] + z[agent + 1:] for z in zvec)


def check_belief(b, n_states=None, tol=MASS_TOL) -> np.ndarray:
    """Validate a probability vector and return it as a float array."""
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1:
        raise ValueError(f"belief must be 1-D, got shape {b.shape}")
    if n_states is not None and b.shape[0] != n_states:
        raise ValueError(f"belief has {b.shape[0]} entries, model has {n_states} states")
    if np.any(b < 0) or not np.all(np.isfinite(b)):
        raise ValueError("belief entries must be finite and non-negative")
    if abs(b.sum() - 1.0) > tol:
        raise ValueError(f"belief sums to {b.sum():.12g}, not 1")
    return b


def belief_update(model: DecPomdpModel, t: int, b, action, observation):
    """One Bayes filter step from time ``t`` to ``t + 1``.

    ``action`` and ``observation`` are per-agent tuples. Returns the posterior
    and the likelihood ``P(z | b, a)``. Raises :class:`ZeroLikelihoodError`
    when the observation is impossible.
    """
    b = np.asarray(b, dtype=np.float64)
    ja = model.joint_action_index(t, action)
    jz = model.joint_observation_index(t + 1, observation)
    unnorm = b @ model.dynamics[t][:, ja, jz, :]
    likelihood = float(unnorm.sum())
    if likelihood <= 0.0:
        raise ZeroLikelihoodError(
            f"observation {tuple(observation)} has zero probability after action {tuple(action)} at t={t}")
    return unnorm / likelihood, likelihood


def filter_sequence(model: DecPomdpModel, actions, observations, b0=None) -> np.ndarray:
    """Iterate :func:`belief_update` along a joint action/observation history."""
    b = model.initial_belief if b0 is None else np.asarray(b0, dtype=np.float64)
    for t, (a, z) in enumerate(zip(actions, observations)):
        b, _ = belief_update(model, t, b, a, z)
    return b


@dataclass(frozen=True, eq=False)
class PlanTimeStatistic:
    """Sparse ``sigma_t(s, zvec)``; keys are sorted joint observation sequences."""

    t: int
    n_agents: int
    entries: dict

    @classmethod
    def initial(cls, model: DecPomdpModel) -> "PlanTimeStatistic":
        b0 = np.array(model.initial_belief)
        b0.flags.writeable = False
        return cls(0, model.n_agents, {(): b0})

    @classmethod
    def from_entries(cls, t, n_agents, entries) -> "PlanTimeStatistic":
        """Build from an arbitrary mapping; zero-mass rows are dropped."""
        clean = {}
        for key in sorted(entries):
            row = np.array(entries[key], dtype=np.float64)
            if len(key) != t or any(len(z) != n_agents for z in key):
                raise ValueError(f"sequence {key!r} does not have length {t} over {n_agents} agents")
            if np.any(row < 0):
                raise ValueError("statistic entries must be non-negative")
            if row.sum() > 0.0:
                row.flags.writeable = False
                clean[key] = row
        return cls(t, n_agents, clean)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def items(self):
        return self.entries.items()

    @property
    def n_states(self) -> int:
        return next(iter(self.entries.values())).shape[0]

    def total_mass(self) -> float:
        return float(sum(row.sum() for row in self.entries.values()))

    def marginal(self, zvec) -> float:
        row = self.entries.get(tuple(zvec))
        return 0.0 if row is None else float(row.sum())

    def as_array(self):
        """``(keys, matrix)`` with one matrix row per stored sequence."""
        keys = list(self.entries)
        return keys, np.array([self.entries[k] for k in keys])

    def individual_sequences(self, agent: int) -> list:
        """Sorted positive-marginal individual sequences of ``agent``."""
        return sorted({project(k, agent) for k in self.entries})

    def individual_weights(self, agent: int) -> dict:
        """``zvec_i -> sum_{zvec_-i} sigma(., zvec_i, zvec_-i)`` (vector over states)."""
        out = {}
        for key, row in self.entries.items():
            u = project(key, agent)
            if u in out:
                out[u] = out[u] + row
            else:
                out[u] = row.copy()
        return dict(sorted(out.items()))


def as_rule(rule) -> Callable:
    """Wrap an individual decision rule (mapping or callable) as a callable."""
    if isinstance(rule, Mapping):
        def lookup(seq, _rule=rule):
            try:
                return _rule[tuple(seq)]
            except KeyError:
                raise PolicyStructureError(f"decision rule undefined for sequence {tuple(seq)!r}") from None
        return lookup
    if callable(rule):
        return rule
    raise TypeError(f"decision rule must be a mapping or callable, not {type(rule).__name__}")


def joint_action_for(delta: Sequence, zvec: tuple) -> tuple:
    return tuple(int(as_rule(rule)(project(zvec, i))) for i, rule in enumerate(delta))


def _check_action(model, t, action):
    sizes = model.action_sizes[t]
    if len(action) != len(sizes) or any(not 0 <= a < k for a, k in zip(action, sizes)):
        raise PolicyStructureError(f"joint action {action} is invalid at t={t}")


class StatisticTooLargeError(BudgetExceededError):
    """Statistic would exceed the configured (sequence x state) entry budget."""

    def __init__(self, size, limit):
        super().__init__(f"plan-time statistic needs {size} entries, limit is {limit:g}; use Monte Carlo evaluation")


def statistic_update(model: DecPomdpModel, sigma: PlanTimeStatistic, delta: Sequence,
                     max_entries: float = float("inf")) -> PlanTimeStatistic:
    """Extend ``sigma`` by the joint decision rule ``delta``.

    ``delta`` holds one individual rule per agent, mapping the agent's
    length-``t`` observation sequence to an action.
    """
    t = sigma.t
    if t >= model.horizon:
        raise ModelError(f"statistic at t={t} cannot be extended past the horizon {model.horizon}")
    if len(delta) != model.n_agents:
        raise PolicyStructureError(f"decision rule has {len(delta)} agents, model has {model.n_agents}")
    rules = [as_rule(r) for r in delta]
    dyn = model.dynamics[t]
    jz_tuples = [model.joint_observation(t + 1, k) for k in range(dyn.shape[2])]
    n_states = dyn.shape[3]
    out = {}
    for key, row in sigma.entries.items():
        action = tuple(int(rule(project(key, i))) for i, rule in enumerate(rules))
        _check_action(model, t, action)
        block = np.tensordot(row, dyn[:, model.joint_action_index(t, action)], axes=(0, 0))
        for jz in np.flatnonzero(block.sum(axis=1) > 0.0):
            out[key + (jz_tuples[jz],)] = block[jz]
        if len(out) * n_states > max_entries:
            raise StatisticTooLargeError(len(out) * n_states, max_entries)
    for row in out.values():
        row.flags.writeable = False
    return PlanTimeStatistic(t + 1, sigma.n_agents, dict(sorted(out.items())))


def propagate(model: DecPomdpModel, rules: Sequence, sigma: PlanTimeStatistic = None,
              max_entries: float = float("inf")) -> list:
    """Statistics ``[sigma_t, ..., sigma_{t+len(rules)}]`` under successive joint rules."""
    sigma = PlanTimeStatistic.initial(model) if sigma is None else sigma
    out = [sigma]
    for delta in rules:
        sigma = statistic_update(model, sigma, delta, max_entries=max_entries)
        out.append(sigma)
    return out


def condition(sigma: PlanTimeStatistic, zvec):
    """Return ``(sigma(. | zvec), sigma(zvec))``.

    Raises :class:`ZeroLikelihoodError` when the sequence has zero marginal.
    """
    zvec = tuple(tuple(z) for z in zvec)
    if len(zvec) != sigma.t:
        raise ValueError(f"sequence length {len(zvec)} does not match statistic time {sigma.t}")
    row = sigma.entries.get(zvec)
    if row is None:
        raise ZeroLikelihoodError(f"sequence {zvec!r} has zero probability")
    mass = float(row.sum())
    return row / mass, mass


def expected_stage_reward(model: DecPomdpModel, sigma: PlanTimeStatistic, delta: Sequence) -> float:
    """Expected immediate reward of joint rule ``delta`` under ``sigma``."""
    t = sigma.t
    rules = [as_rule(r) for r in delta]
    rew = model.rewards[t]
    total = 0.0
    for key, row in sigma.entries.items():
        action = tuple(int(rule(project(key, i))) for i, rule in enumerate(rules))
        total += float(row @ rew[:, model.joint_action_index(t, action)])
    return total
