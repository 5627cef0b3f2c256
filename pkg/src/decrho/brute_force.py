"""Exhaustive search over deterministic history-based joint policies.

The search walks every joint decision rule restricted to the individual
observation sequences that are reachable, so zero-probability histories never
multiply the policy count. The last acting step is vectorized: for every
combination of final decision rules it scores

* the centralized prediction reward (max over alpha of the joint estimate),
* the decentralized prediction reward under the optimal prediction rule.

One pass therefore yields the optimum of both problems, the centralized value
of the policy that is optimal for the converted problem, and the largest
decentralization gap over all reachable final statistics.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .beliefs import PlanTimeStatistic, expected_stage_reward, project, statistic_update
from .conversion import ConvertedModel, optimal_prediction_rule
from .evaluation import evaluate_exact_terms, resolve_problem
from .exceptions import BudgetExceededError
from .policy import JointPolicy, TreePolicy
from .rewards import AlphaSet

DEFAULT_BUDGET = 10_000_000
_CHUNK_CELLS = 1 << 21


@dataclass
class _Best:
    value: float = -np.inf
    rules: list = None
    rho_of_best: float = None


@dataclass
class BruteForceResult:
    """Outcome of one exhaustive search.

    ``rho_policy`` and ``plus_policy`` are optimal for the centralized and the
    converted problem. ``rho_value_of_plus_policy`` is the centralized value
    of ``plus_policy``. ``max_gap`` and ``min_gap`` range over the final
    statistics of all enumerated policies.
    """

    rho_value: float
    rho_policy: JointPolicy
    plus_value: float
    plus_policy: JointPolicy
    rho_value_of_plus_policy: float
    max_gap: float
    min_gap: float
    n_policies: int
    gammas: AlphaSet = field(repr=False, default=None)

    @property
    def loss_bound(self) -> float:
        return 2.0 * self.max_gap

    @property
    def loss(self) -> float:
        """Centralized value lost by executing the converted problem's optimum."""
        return self.rho_value - self.rho_value_of_plus_policy


class _Search:
    def __init__(self, model, gamma: AlphaSet, budget):
        self.model = model
        self.vectors = gamma.vectors
        self.budget = budget
        self.count = 0
        self.best_rho = _Best()
        self.best_plus = _Best()
        self.max_gap = -np.inf
        self.min_gap = np.inf

    def _agent_rules(self, sigma, t):
        """Per agent: reachable sequences and every action assignment over them."""
        out = []
        for i in range(self.model.n_agents):
            seqs = sigma.individual_sequences(i)
            n_act = self.model.action_sizes[t][i]
            table = np.array(list(itertools.product(range(n_act), repeat=len(seqs))), dtype=np.int64)
            out.append((seqs, table.reshape(-1, len(seqs))))
        return out

    def run(self, sigma, t, prefix, earned=0.0):
        if t == self.model.horizon - 1:
            self._leaf(sigma, t, prefix, earned)
            return
        per_agent = self._agent_rules(sigma, t)
        for combo in itertools.product(*(range(len(tab)) for _, tab in per_agent)):
            rules = [dict(zip(seqs, (int(a) for a in tab[c]))) for (seqs, tab), c in zip(per_agent, combo)]
            delta = [r.__getitem__ for r in rules]
            gained = expected_stage_reward(self.model, sigma, delta)
            nxt = statistic_update(self.model, sigma, delta)
            self.run(nxt, t + 1, prefix + [rules], earned + gained)

    def _leaf(self, sigma, t, prefix, earned):
        model, vectors = self.model, self.vectors
        n = model.n_agents
        keys, rows = sigma.as_array()
        per_agent = self._agent_rules(sigma, t)
        n_combo = int(np.prod([len(tab) for _, tab in per_agent]))
        self.count += n_combo
        if self.count > self.budget:
            raise BudgetExceededError(f"brute force needs more than {self.budget:g} policy evaluations")

        dyn, rew = model.dynamics[t], model.rewards[t]
        blocks = np.einsum("js,sazk->jazk", rows, dyn)
        stage = rows @ rew
        scores = blocks @ vectors.T  # (J, A, Z, K)
        rho_part = stage + scores.max(axis=-1).sum(axis=-1)  # (J, A)

        # joint action of every row under every rule combination
        seq_index = [{u: k for k, u in enumerate(seqs)} for seqs, _ in per_agent]
        strides = np.cumprod((1,) + model.action_sizes[t][::-1])[:-1][::-1]
        parts = []
        for i, (seqs, tab) in enumerate(per_agent):
            cols = [seq_index[i][project(z, i)] for z in keys]
            parts.append(tab[:, cols] * strides[i])  # (C_i, J)
        grids = np.meshgrid(*[np.arange(len(tab)) for _, tab in per_agent], indexing="ij")
        flat_combo = [g.ravel() for g in grids]

        # final individual sequence index for every (row, joint observation)
        obs_sizes = model.observation_sizes[t]
        z_tuples = list(itertools.product(*(range(k) for k in obs_sizes)))
        onehots = []
        for i in range(n):
            seqs = per_agent[i][0]
            idx = np.array([[seq_index[i][project(z, i)] * obs_sizes[i] + zt[i] for zt in z_tuples]
                            for z in keys])
            hot = np.zeros(idx.shape + (len(seqs) * obs_sizes[i],))
            np.put_along_axis(hot, idx[..., None], 1.0, axis=-1)
            onehots.append(hot)

        n_rows = len(keys)
        cells = n_rows * scores.shape[2] * scores.shape[3]
        chunk = max(1, _CHUNK_CELLS // max(cells, 1))
        rows_idx = np.arange(n_rows)
        for start in range(0, n_combo, chunk):
            sel = slice(start, start + chunk)
            ja = sum(parts[i][flat_combo[i][sel]] for i in range(n))  # (C, J)
            rho = earned + rho_part[rows_idx, ja].sum(axis=1)
            chosen = scores[rows_idx, ja]  # (C, J, Z, K)
            stage_sum = stage[rows_idx, ja].sum(axis=1)
            plus_final = np.zeros(len(rho))
            for hot in onehots:
                weights = np.einsum("cjzk,jzf->cfk", chosen, hot)
                plus_final += weights.max(axis=-1).sum(axis=-1)
            plus = earned + stage_sum + plus_final / n
            gap = rho - plus
            self.max_gap = max(self.max_gap, float(gap.max()))
            self.min_gap = min(self.min_gap, float(gap.min()))
            k = int(np.argmax(rho))
            if rho[k] > self.best_rho.value:
                self.best_rho = _Best(float(rho[k]), self._decode(per_agent, flat_combo, start + k, prefix))
            k = int(np.argmax(plus))
            if plus[k] > self.best_plus.value:
                self.best_plus = _Best(float(plus[k]), self._decode(per_agent, flat_combo, start + k, prefix),
                                       float(rho[k]))

    @staticmethod
    def _decode(per_agent, flat_combo, c, prefix):
        last = [dict(zip(seqs, (int(a) for a in tab[flat_combo[i][c]])))
                for i, (seqs, tab) in enumerate(per_agent)]
        return prefix + [last]


def _to_policy(steps, n_agents) -> JointPolicy:
    return JointPolicy(tuple(TreePolicy([step[i] for step in steps]) for i in range(n_agents)))


def brute_force_pair(model, gamma: AlphaSet, budget: float = DEFAULT_BUDGET) -> BruteForceResult:
    """Optimize the centralized and the converted problem for ``(model, gamma)`` at once."""
    search = _Search(model, gamma, budget)
    search.run(PlanTimeStatistic.initial(model), 0, [])
    converted = ConvertedModel(model, gamma)
    plus_policy = _to_policy(search.best_plus.rules, model.n_agents)
    sigma_h = evaluate_exact_terms(converted, plus_policy).statistics[-1]
    plus_policy = plus_policy.with_prediction_rule(optimal_prediction_rule(sigma_h, converted))
    return BruteForceResult(
        rho_value=search.best_rho.value,
        rho_policy=_to_policy(search.best_rho.rules, model.n_agents),
        plus_value=search.best_plus.value,
        plus_policy=plus_policy,
        rho_value_of_plus_policy=search.best_plus.rho_of_best,
        max_gap=max(search.max_gap, 0.0),
        min_gap=search.min_gap,
        n_policies=search.count,
        gammas=gamma,
    )


def brute_force(problem, budget: float = DEFAULT_BUDGET):
    """Optimal deterministic joint policy and its value: ``(policy, value)``.

    Accepts a plain model, a centralized prediction problem, or a converted
    model (whose final prediction step is solved analytically).
    """
    model, gamma, kind = resolve_problem(problem)
    result = brute_force_pair(model, gamma if gamma is not None else AlphaSet.zero(model.n_states), budget)
    if kind == "plus":
        return result.plus_policy, result.plus_value
    return result.rho_policy, result.rho_value
