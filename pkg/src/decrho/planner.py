"""Finite-horizon policy graph improvement over layered controllers.

Each improvement pass has two phases. A forward pass computes, for every
layer, the occupancy ``P_t[s, q_1, ..., q_n]`` of state and joint controller
node. A backward pass then revisits the layers from last to first; at each
node of each agent it picks the action and the outgoing edges that maximize
expected value-to-go, weighting states and the other agents' nodes by the
occupancy of that node. Other agents' controllers are held at their current
values. With probability ``restart_probability`` a node instead receives a
random action and random edges.

On a :class:`ConvertedModel` the controllers get one extra layer of
prediction nodes, one node per prediction action, whose actions are fixed.
The edges into that layer are optimized like any other. The returned policy
carries the optimal prediction rule, which never does worse than the
controller's own prediction layer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .conversion import ConvertedModel, optimal_prediction_rule
from .evaluation import _sample_rows, evaluate_exact, evaluate_exact_terms, resolve_problem
from .policy import FscNode, JointPolicy, LayeredFsc, random_fsc

TIE_TOL = 1e-12


@dataclass
class PlannerParams:
    """Policy graph improvement settings.

    When a layer has more than ``node_budget`` (state, joint node) cells,
    node occupancies are estimated from ``occupancy_rollouts`` sampled
    trajectories instead of computed exactly.
    """

    fsc_width: int = 2
    improvement_iterations: int = 20
    restart_probability: float = 0.1
    seed: int = None
    node_budget: int = 100_000
    occupancy_rollouts: int = 5_000

    def __post_init__(self):
        if self.fsc_width < 1:
            raise ValueError("fsc_width must be >= 1")
        if self.improvement_iterations < 0:
            raise ValueError("improvement_iterations must be >= 0")
        if not 0.0 <= self.restart_probability <= 1.0:
            raise ValueError("restart_probability must lie in [0, 1]")


class _Problem:
    """Planning view: source model, optional fixed prediction layer."""

    def __init__(self, problem):
        model, _, kind = resolve_problem(problem)
        if kind == "rho":
            raise TypeError("convert a prediction-reward problem before planning on it")
        self.problem = problem
        self.model = model
        self.h = model.horizon
        self.n = model.n_agents
        self.vectors = problem.prediction_vectors() if kind == "plus" else None
        self.layers = self.h + (1 if self.vectors is not None else 0)

    def widths(self, width):
        widths = [1] + [width] * (self.h - 1)
        if self.vectors is not None:
            widths.append(len(self.vectors))
        return widths

    def initial_policy(self, width, rng) -> JointPolicy:
        widths = self.widths(width)
        acts = list(self.model.action_sizes)
        obs = list(self.model.observation_sizes)
        fscs = []
        for i in range(self.n):
            if self.vectors is None:
                fscs.append(random_fsc(acts, obs, i, widths, rng))
                continue
            base = random_fsc(acts + [(len(self.vectors),) * self.n], obs, i, widths, rng)
            layers = [list(layer) for layer in base.layers]
            layers[-1] = [FscNode(k) for k in range(len(self.vectors))]
            fscs.append(LayeredFsc(layers))
        return JointPolicy(tuple(fscs))


def _node_configs(widths):
    return list(itertools.product(*(range(w) for w in widths)))


def _exact_occupancies(prob: _Problem, fscs) -> list:
    model, n = prob.model, prob.n
    occ = [model.initial_belief.reshape((-1,) + (1,) * n).copy()]
    for t in range(min(prob.layers - 1, prob.h)):
        dyn = model.dynamics[t]
        acts = [f.action_table(t) for f in fscs]
        edges = [f.edge_table(t) for f in fscs]
        jz_tuples = [model.joint_observation(t + 1, k) for k in range(dyn.shape[2])]
        nxt = np.zeros((model.n_states,) + tuple(len(f.layers[t + 1]) for f in fscs))
        cur = occ[-1]
        for q in _node_configs(cur.shape[1:]):
            w = cur[(slice(None),) + q]
            if not w.any():
                continue
            ja = model.joint_action_index(t, [acts[i][q[i]] for i in range(n)])
            block = w @ dyn[:, ja].reshape(dyn.shape[0], -1)
            block = block.reshape(dyn.shape[2], dyn.shape[3])
            for jz, z in enumerate(jz_tuples):
                nq = tuple(int(edges[i][q[i], z[i]]) for i in range(n))
                nxt[(slice(None),) + nq] += block[jz]
        occ.append(nxt)
    return occ


def _sampled_occupancies(prob: _Problem, fscs, n_samples, rng) -> list:
    model, n = prob.model, prob.n
    steps = min(prob.layers - 1, prob.h)
    s = _sample_rows(np.broadcast_to(model.initial_belief, (n_samples, model.n_states)), rng)
    nodes = [np.zeros(n_samples, dtype=np.int64) for _ in range(n)]
    occ = []
    for t in range(steps + 1):
        counts = np.zeros((model.n_states,) + tuple(len(f.layers[t]) for f in fscs))
        np.add.at(counts, (s,) + tuple(nodes), 1.0 / n_samples)
        occ.append(counts)
        if t == steps:
            break
        acts = np.stack([fscs[i].action_table(t)[nodes[i]] for i in range(n)])
        ja = np.ravel_multi_index(tuple(acts), model.action_sizes[t])
        dyn = model.dynamics[t]
        flat = _sample_rows(dyn[s, ja].reshape(n_samples, -1), rng)
        jz, s = np.divmod(flat, dyn.shape[3])
        z = np.unravel_index(jz, model.observation_sizes[t])
        nodes = [fscs[i].edge_table(t)[nodes[i], z[i]] for i in range(n)]
    return occ


def node_occupancies(prob: _Problem, fscs, params: PlannerParams, rng) -> list:
    """Exact occupancies when the joint node space fits ``node_budget``, else sampled."""
    size = max(prob.model.n_states * int(np.prod([len(layer) for layer in f_layers]))
               for f_layers in zip(*(f.layers for f in fscs)))
    if size <= params.node_budget:
        return _exact_occupancies(prob, fscs)
    return _sampled_occupancies(prob, fscs, params.occupancy_rollouts, rng)


def _layer_values(prob: _Problem, fscs, t, next_values):
    """``V_t[s, q]`` for layer ``t`` given the values of layer ``t + 1``."""
    model, n = prob.model, prob.n
    widths = tuple(len(f.layers[t]) for f in fscs)
    acts = [f.action_table(t) for f in fscs]
    if prob.vectors is not None and t == prob.h:
        values = np.zeros((model.n_states,) + widths)
        for q in _node_configs(widths):
            values[(slice(None),) + q] = prob.vectors[[acts[i][q[i]] for i in range(n)]].mean(axis=0)
        return values
    rew = model.rewards[t]
    dyn = model.dynamics[t]
    values = np.zeros((model.n_states,) + widths)
    edges = [f.edge_table(t) for f in fscs] if next_values is not None else None
    jz_tuples = [model.joint_observation(t + 1, k) for k in range(dyn.shape[2])]
    for q in _node_configs(widths):
        ja = model.joint_action_index(t, [acts[i][q[i]] for i in range(n)])
        v = rew[:, ja].copy()
        if next_values is not None:
            for jz, z in enumerate(jz_tuples):
                nq = tuple(int(edges[i][q[i], z[i]]) for i in range(n))
                v += dyn[:, ja, jz, :] @ next_values[(slice(None),) + nq]
        values[(slice(None),) + q] = v
    return values


def _improve_node(prob, fscs, t, agent, q_i, occ_t, next_values):
    """Best ``(action, edges)`` for one node, preferring the incumbent on ties."""
    model, n = prob.model, prob.n
    node = fscs[agent].layers[t][q_i]
    weights = np.take(occ_t, q_i, axis=1 + agent)
    if not weights.any():
        weights = np.ones_like(weights)
    others = [j for j in range(n) if j != agent]
    acts = [f.action_table(t) for f in fscs]
    rew = model.rewards[t]
    dyn = model.dynamics[t]
    terminal = next_values is None
    if not terminal:
        edges = [f.edge_table(t) for f in fscs]
        jz_tuples = [model.joint_observation(t + 1, k) for k in range(dyn.shape[2])]
        n_obs = model.observation_sizes[t][agent]
        n_next = next_values.shape[1 + agent]
    other_configs = _node_configs(weights.shape[1:])
    best = None
    incumbent = None
    for a in range(model.action_sizes[t][agent]):
        score = 0.0
        gain = None if terminal else np.zeros((n_obs, n_next))
        for q_o in other_configs:
            w = weights[(slice(None),) + q_o]
            if not w.any():
                continue
            joint = [0] * n
            joint[agent] = a
            for j, qj in zip(others, q_o):
                joint[j] = acts[j][qj]
            ja = model.joint_action_index(t, joint)
            score += float(w @ rew[:, ja])
            if terminal:
                continue
            block = (w @ dyn[:, ja].reshape(dyn.shape[0], -1)).reshape(dyn.shape[2], dyn.shape[3])
            for jz, z in enumerate(jz_tuples):
                if not block[jz].any():
                    continue
                index = [slice(None)] * (n + 1)
                for j, qj in zip(others, q_o):
                    index[1 + j] = int(edges[j][qj, z[j]])
                gain[z[agent]] += block[jz] @ next_values[tuple(index)]
        if terminal:
            choice = ()
        else:
            top = gain.max(axis=1)
            choice = tuple(
                e_old if gain[z, e_old] >= top[z] - TIE_TOL * max(1.0, abs(top[z])) else int(np.argmax(gain[z]))
                for z, e_old in enumerate(node.edges))
            score += float(top.sum())
        if a == node.action:
            incumbent = (score, a, choice)
        if best is None or score > best[0]:
            best = (score, a, choice)
    if incumbent is not None and incumbent[0] >= best[0] - TIE_TOL * max(1.0, abs(best[0])):
        return FscNode(incumbent[1], incumbent[2])
    return FscNode(best[1], best[2])


def _random_node(prob, fscs, t, agent, rng):
    action = int(rng.integers(prob.model.action_sizes[t][agent]))
    if t + 1 >= len(fscs[agent].layers):
        return FscNode(action)
    width = len(fscs[agent].layers[t + 1])
    n_obs = prob.model.observation_sizes[t][agent]
    return FscNode(action, tuple(int(e) for e in rng.integers(width, size=n_obs)))


def improve_once(problem, policy: JointPolicy, params: PlannerParams = None, rng=None) -> JointPolicy:
    """One forward/backward policy graph improvement pass."""
    params = PlannerParams() if params is None else params
    rng = np.random.default_rng(rng)
    prob = _Problem(problem)
    fscs = [LayeredFsc(f.layers) for f in policy.agents]
    occ = node_occupancies(prob, fscs, params, rng)
    layers = [[list(layer) for layer in f.layers] for f in fscs]
    last = prob.layers - 1
    next_values = _layer_values(prob, fscs, last, None) if prob.vectors is not None else None
    top = last - 1 if prob.vectors is not None else last
    for t in range(top, -1, -1):
        for i in range(prob.n):
            for q in range(len(layers[i][t])):
                if rng.random() < params.restart_probability:
                    new = _random_node(prob, fscs, t, i, rng)
                else:
                    new = _improve_node(prob, fscs, t, i, q, occ[t], next_values)
                layers[i][t][q] = new
                fscs[i] = LayeredFsc(layers[i])
        next_values = _layer_values(prob, fscs, t, next_values)
    return JointPolicy(tuple(fscs))


def plan_with_history(problem, params: PlannerParams = None, rng=None):
    """Run the planner; return ``(best policy, best value, value per iteration)``."""
    params = PlannerParams() if params is None else params
    rng = np.random.default_rng(params.seed if rng is None else rng)
    prob = _Problem(problem)
    policy = prob.initial_policy(params.fsc_width, rng)
    best, best_value = policy, evaluate_exact(problem, policy)
    history = [best_value]
    for _ in range(params.improvement_iterations):
        policy = improve_once(problem, policy, params, rng)
        value = evaluate_exact(problem, policy)
        history.append(value)
        if value > best_value:
            best, best_value = policy, value
    if isinstance(problem, ConvertedModel):
        sigma_h = evaluate_exact_terms(problem, best).statistics[-1]
        best = best.with_prediction_rule(optimal_prediction_rule(sigma_h, problem))
    return best, best_value, history


def plan(problem, params: PlannerParams = None, rng=None) -> JointPolicy:
    """Best joint policy seen over a random start and ``improvement_iterations`` passes."""
    return plan_with_history(problem, params, rng)[0]


class PolicyGraphImprovement(BaseEstimator):
    """Estimator-style front end to :func:`plan`.

    ``fit(problem)`` accepts a :class:`DecPomdpModel` or a
    :class:`ConvertedModel`; ``predict`` maps ``(agent, observation
    sequence)`` pairs to actions.
    """

    def __init__(self, fsc_width=2, n_iter=20, restart_prob=0.1, random_state=None):
        self.fsc_width = fsc_width
        self.n_iter = n_iter
        self.restart_prob = restart_prob
        self.random_state = random_state

    def _params(self):
        return PlannerParams(self.fsc_width, self.n_iter, self.restart_prob, self.random_state)

    def fit(self, problem, y=None):
        self.policy_, self.value_, self.history_ = plan_with_history(problem, self._params())
        self.problem_ = problem
        return self

    def predict(self, X):
        check_is_fitted(self, "policy_")
        return np.array([_act(self.policy_, self.problem_, agent, seq) for agent, seq in X])

    def score(self, problem=None, y=None):
        check_is_fitted(self, "policy_")
        return evaluate_exact(self.problem_ if problem is None else problem, self.policy_)


def _act(policy: JointPolicy, problem, agent: int, seq) -> int:
    seq = tuple(int(z) for z in seq)
    model, _, kind = resolve_problem(problem)
    if kind == "plus" and len(seq) == model.horizon and policy.prediction_rule is not None:
        return policy.prediction_rule.action(agent, seq)
    return policy.agents[agent].action(seq)
