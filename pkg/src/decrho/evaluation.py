"""Exact and Monte Carlo policy evaluation, and trajectory sampling.

Three kinds of problem are understood:

* a plain :class:`DecPomdpModel` -- sum of stage rewards;
* a :class:`DecRhoPomdp` -- stage rewards plus the centralized prediction
  reward of the final joint estimate;
* a :class:`ConvertedModel` -- stage rewards plus the decentralized prediction
  reward of a joint prediction rule (by default the optimal one).

Passing ``reward=f`` replaces the final term with ``f`` of the joint estimate,
which is how values are compared across different alpha sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beliefs import PlanTimeStatistic, expected_stage_reward, project, statistic_update
from .conversion import (ConvertedModel, DecRhoPomdp, expected_decentralized_reward,
                         optimal_prediction_rule)
from .exceptions import PolicyStructureError
from .model import DecPomdpModel
from .policy import JointPolicy, LayeredFsc, PredictionRule
from .rewards import ConvexReward, expected_centralized_reward, expected_true_final_reward

EXACT_ENTRY_LIMIT = 1e7


def resolve_problem(problem):
    """``(source model, alpha set or None, kind)`` with kind in standard/rho/plus."""
    if isinstance(problem, ConvertedModel):
        return problem.source, problem.gamma, "plus"
    if isinstance(problem, DecRhoPomdp):
        return problem.model, problem.gamma, "rho"
    if isinstance(problem, DecPomdpModel):
        return problem, None, "standard"
    if isinstance(problem, tuple) and len(problem) == 2:
        return resolve_problem(DecRhoPomdp(*problem))
    raise TypeError(f"cannot evaluate on a {type(problem).__name__}")


def controller_prediction_rule(policy: JointPolicy, sigma_h: PlanTimeStatistic) -> PredictionRule:
    """Prediction rule read off the final controller layer of each agent."""
    rules = []
    for i, agent in enumerate(policy.agents):
        if agent.horizon <= sigma_h.t:
            raise PolicyStructureError(f"agent {i} policy has no prediction step")
        rules.append({u: agent.action(u) for u in sigma_h.individual_sequences(i)})
    return PredictionRule(tuple(rules))


@dataclass
class ExactEvaluation:
    value: float
    stage_rewards: list
    final_reward: float
    statistics: list
    prediction_rule: PredictionRule = None


def evaluate_exact_terms(problem, policy: JointPolicy, reward: ConvexReward = None,
                         prediction: str = "optimal",
                         max_entries: float = EXACT_ENTRY_LIMIT) -> ExactEvaluation:
    """Exact evaluation keeping every intermediate term."""
    model, gamma, kind = resolve_problem(problem)
    policy.check(model)
    h = model.horizon
    sigma = PlanTimeStatistic.initial(model)
    stats = [sigma]
    stages = []
    for t in range(h):
        delta = policy.decision_rule(t)
        stages.append(expected_stage_reward(model, sigma, delta))
        sigma = statistic_update(model, sigma, delta, max_entries=max_entries)
        stats.append(sigma)
    rule = None
    if reward is not None:
        final = expected_true_final_reward(sigma, reward)
    elif kind == "rho":
        final = expected_centralized_reward(sigma, gamma)
    elif kind == "plus":
        if prediction == "optimal":
            rule = optimal_prediction_rule(sigma, problem)
        elif prediction == "policy":
            rule = policy.prediction_rule or controller_prediction_rule(policy, sigma)
        else:
            raise ValueError(f"prediction must be 'optimal' or 'policy', not {prediction!r}")
        final = expected_decentralized_reward(sigma, problem, rule)
    else:
        final = 0.0
    return ExactEvaluation(float(sum(stages) + final), stages, final, stats, rule)


def evaluate_exact(problem, policy: JointPolicy, reward: ConvexReward = None,
                   prediction: str = "optimal", max_entries: float = EXACT_ENTRY_LIMIT) -> float:
    """Expected total reward of ``policy`` computed over plan-time statistics.

    Zero-probability branches are never expanded. Raises a budget error when
    a statistic would need more than ``max_entries`` (sequence x state) cells.
    """
    return evaluate_exact_terms(problem, policy, reward, prediction, max_entries).value


@dataclass
class Trajectories:
    """Batch of sampled trajectories.

    ``states`` has shape ``(n, steps + 1)``; ``actions`` and ``observations``
    have shape ``(n, steps, n_agents)`` with ``observations[:, t]`` received
    after acting at step ``t``.
    """

    states: np.ndarray
    actions: np.ndarray
    observations: np.ndarray


def _sample_rows(probs: np.ndarray, rng) -> np.ndarray:
    cum = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0]) * cum[:, -1]
    # smallest k with cum[k] > u never lands on a zero-probability entry
    return (cum <= u[:, None]).sum(axis=1)


def simulate(model: DecPomdpModel, policy: JointPolicy, n: int, rng, steps: int = None) -> Trajectories:
    """Sample ``n`` trajectories of ``steps`` steps (default: the horizon)."""
    rng = np.random.default_rng(rng)
    steps = model.horizon if steps is None else steps
    policy.check(model, steps)
    n_agents = model.n_agents
    s = _sample_rows(np.broadcast_to(model.initial_belief, (n, model.n_states)), rng)
    states = np.empty((n, steps + 1), dtype=np.int64)
    actions = np.empty((n, steps, n_agents), dtype=np.int64)
    observations = np.empty((n, steps, n_agents), dtype=np.int64)
    states[:, 0] = s
    fsc = [isinstance(p, LayeredFsc) for p in policy.agents]
    nodes = [np.zeros(n, dtype=np.int64) for _ in range(n_agents)]
    for t in range(steps):
        for i, agent in enumerate(policy.agents):
            if fsc[i]:
                actions[:, t, i] = agent.action_table(t)[nodes[i]]
            else:
                hist = observations[:, :t, i]
                actions[:, t, i] = [agent.action(tuple(row)) for row in hist]
        ja = np.ravel_multi_index(tuple(actions[:, t].T), model.action_sizes[t])
        dyn = model.dynamics[t]
        n_next = dyn.shape[3]
        flat = _sample_rows(dyn[s, ja].reshape(n, -1), rng)
        jz, s = np.divmod(flat, n_next)
        observations[:, t] = np.array(np.unravel_index(jz, model.observation_sizes[t])).T
        states[:, t + 1] = s
        for i, agent in enumerate(policy.agents):
            if fsc[i] and t + 1 < agent.horizon:
                nodes[i] = agent.edge_table(t)[nodes[i], observations[:, t, i]]
    return Trajectories(states, actions, observations)


def rollout(model: DecPomdpModel, policy: JointPolicy, rng, steps: int = None):
    """One sampled trajectory as ``(states, joint actions, joint observations)`` lists."""
    traj = simulate(model, policy, 1, rng, steps)
    return ([int(x) for x in traj.states[0]],
            [tuple(int(x) for x in a) for a in traj.actions[0]],
            [tuple(int(x) for x in z) for z in traj.observations[0]])


def filter_batch(model: DecPomdpModel, traj: Trajectories) -> np.ndarray:
    """Final joint state estimate of every trajectory; shape ``(n, n_states)``."""
    n, steps = traj.actions.shape[:2]
    b = np.broadcast_to(model.initial_belief, (n, model.n_states)).copy()
    for t in range(steps):
        ja = np.ravel_multi_index(tuple(traj.actions[:, t].T), model.action_sizes[t])
        jz = np.ravel_multi_index(tuple(traj.observations[:, t].T), model.observation_sizes[t])
        kernel = model.dynamics[t][:, ja, jz, :].transpose(1, 0, 2)
        b = np.einsum("ns,nsk->nk", b, kernel)
        b /= b.sum(axis=1, keepdims=True)
    return b


def evaluate_mc(problem, policy: JointPolicy, n_rollouts: int, rng, reward: ConvexReward = None,
                prediction: str = "optimal"):
    """Monte Carlo estimate of the policy value: ``(mean, standard error)``.

    For a converted problem with ``prediction="optimal"`` the optimal
    prediction rule is computed from the exact final statistic.
    """
    model, gamma, kind = resolve_problem(problem)
    traj = simulate(model, policy, n_rollouts, rng)
    h = model.horizon
    returns = np.zeros(n_rollouts)
    for t in range(h):
        ja = np.ravel_multi_index(tuple(traj.actions[:, t].T), model.action_sizes[t])
        returns += model.rewards[t][traj.states[:, t], ja]
    if reward is not None:
        beliefs = filter_batch(model, traj)
        returns += np.array([reward(b) for b in beliefs])
    elif kind == "rho":
        beliefs = filter_batch(model, traj)
        returns += (beliefs @ gamma.vectors.T).max(axis=1)
    elif kind == "plus":
        if prediction == "optimal":
            rule = evaluate_exact_terms(problem, policy, prediction="optimal").prediction_rule
        else:
            rule = policy.prediction_rule
        vectors = problem.prediction_vectors()
        final_states = traj.states[:, h]
        cache = {}
        for r in range(n_rollouts):
            zvec = tuple(tuple(int(x) for x in z) for z in traj.observations[r])
            if zvec not in cache:
                if rule is None:
                    acts = [agent.action(project(zvec, i)) for i, agent in enumerate(policy.agents)]
                else:
                    acts = list(rule.joint(zvec))
                cache[zvec] = vectors[acts].mean(axis=0)
            returns[r] += cache[zvec][final_states[r]]
    mean = float(returns.mean())
    stderr = float(returns.std(ddof=1) / np.sqrt(n_rollouts)) if n_rollouts > 1 else float("inf")
    return mean, stderr
