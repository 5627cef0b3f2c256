"""Randomized and exhaustive property suites for the conversion guarantees.

Every suite returns a :class:`SuiteResult`; ``verify`` on the command line
and the acceptance tests both call these functions.
"""

from __future__ import annotations

import functools
import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .beliefs import (PlanTimeStatistic, condition, filter_sequence, project, project_others,
                      propagate, statistic_update)
from .benchmarks import coupled_tag, decoupled_chains, random_instance, single_tiger
from .brute_force import brute_force_pair
from .conversion import (ConvertedModel, decentralization_gap, expected_decentralized_reward,
                         optimal_prediction_rule)
from .evaluation import evaluate_exact, evaluate_mc
from .policy import JointPolicy, TreePolicy, random_joint_fsc
from .rewards import AlphaSet, NegativeEntropy, rho_value, sample_simplex

GAP_SLACK = 1e-9


@dataclass
class SuiteResult:
    name: str
    passed: bool
    instances: int
    metric_name: str
    metric: float
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{self.name}: {status} ({self.metric_name}={self.metric:.6g}, "
                f"instances={self.instances}, {self.seconds:.2f}s)")


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        result.seconds = time.perf_counter() - start
        return result
    return wrapper


# random instances ----------------------------------------------------------

def random_statistic(rng, n_states: int, seqs_per_agent, density: float = 0.7) -> PlanTimeStatistic:
    """Random final statistic over length-1 joint sequences with some zero-mass cells."""
    rng = np.random.default_rng(rng)
    entries = {}
    for combo in itertools.product(*(range(u) for u in seqs_per_agent)):
        row = rng.random(n_states) * (rng.random(n_states) < density)
        if row.any():
            entries[(tuple(combo),)] = row
    if not entries:
        entries[(tuple(0 for _ in seqs_per_agent),)] = np.ones(n_states)
    total = sum(r.sum() for r in entries.values())
    return PlanTimeStatistic.from_entries(1, len(seqs_per_agent), {k: v / total for k, v in entries.items()})


def product_statistic(rng, per_agent_states, seqs_per_agent) -> PlanTimeStatistic:
    """Statistic over a product state space whose agent ``i`` only observes factor ``i``."""
    rng = np.random.default_rng(rng)
    factors = [rng.random((m, u)) for m, u in zip(per_agent_states, seqs_per_agent)]
    factors = [f / f.sum() for f in factors]
    entries = {}
    for combo in itertools.product(*(range(u) for u in seqs_per_agent)):
        row = factors[0][:, combo[0]]
        for f, z in zip(factors[1:], combo[1:]):
            row = np.multiply.outer(row, f[:, z]).ravel()
        entries[(tuple(combo),)] = row
    return PlanTimeStatistic.from_entries(1, len(seqs_per_agent), entries)


def random_tree_policy(model, rng, steps=None) -> JointPolicy:
    """Deterministic history policy with a random action for every individual sequence."""
    rng = np.random.default_rng(rng)
    steps = model.horizon if steps is None else steps
    agents = []
    for i in range(model.n_agents):
        rules = []
        for t in range(steps):
            seqs = itertools.product(*(range(model.observation_sizes[k][i]) for k in range(t)))
            rules.append({tuple(u): int(rng.integers(model.action_sizes[t][i])) for u in seqs})
        agents.append(TreePolicy(rules))
    return JointPolicy(tuple(agents))


def _tangent_gamma(f, n_states, k, rng) -> AlphaSet:
    return AlphaSet.from_points(f, sample_simplex(n_states, k, rng))


def _converted_for(sigma: PlanTimeStatistic, gamma: AlphaSet) -> ConvertedModel:
    """A static placeholder source model whose horizon matches ``sigma``."""
    from .model import DecPomdpModel

    S, n = sigma.n_states, sigma.n_agents
    dyn = np.eye(S)[:, None, None, :]
    src = DecPomdpModel.homogeneous(sigma.t, np.full(S, 1.0 / S), (1,) * n, (1,) * n,
                                    dyn, np.zeros((S, 1)))
    return ConvertedModel(src, gamma)


# suites ----------------------------------------------------------------------

@_timed
def gap_sign_suite(instances: int = 200, seed: int = 0) -> SuiteResult:
    """Decentralized prediction reward never exceeds the centralized one."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(instances):
        S = int(rng.integers(1, 5))
        K = int(rng.integers(1, 5))
        sigma = random_statistic(rng, S, rng.integers(1, 4, size=2))
        gamma = AlphaSet(rng.normal(size=(K, S)) * 2.0)
        worst = min(worst, decentralization_gap(sigma, gamma, clamp=False))
    return SuiteResult("gap-sign", worst >= -GAP_SLACK, instances, "min_gap", float(worst))


def exhaustive_best_prediction(sigma: PlanTimeStatistic, converted: ConvertedModel) -> float:
    """Best expected final reward over every joint prediction rule, from the explicit reward table."""
    reward = converted.model.rewards[converted.prediction_step]  # (S, K^n)
    K, n = converted.n_predictions, sigma.n_agents
    keys, rows = sigma.as_array()
    q = rows @ reward  # (J, K^n)
    seqs = [sigma.individual_sequences(i) for i in range(n)]
    col = [[seqs[i].index(project(z, i)) for z in keys] for i in range(n)]
    strides = [K ** (n - 1 - i) for i in range(n)]
    tables = [np.array(list(itertools.product(range(K), repeat=len(s))), dtype=np.int64) for s in seqs]
    grids = np.meshgrid(*[np.arange(len(t)) for t in tables], indexing="ij")
    ja = sum(tables[i][grids[i].ravel()][:, col[i]] * strides[i] for i in range(n))  # (C, J)
    return float(q[np.arange(len(keys)), ja].sum(axis=1).max())


@_timed
def prediction_rule_suite(instances: int = 100, seed: int = 0, max_rules: int = 100_000) -> SuiteResult:
    """The per-agent argmax prediction rule matches exhaustive search over joint rules."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    while done < instances:
        S = int(rng.integers(1, 5))
        K = int(rng.integers(1, 5))
        seqs = rng.integers(1, 5, size=2)
        if K ** int(seqs.sum()) > max_rules:
            continue
        sigma = random_statistic(rng, S, seqs)
        gamma = AlphaSet(rng.normal(size=(K, S)))
        converted = _converted_for(sigma, gamma)
        phi = optimal_prediction_rule(sigma, converted)
        got = expected_decentralized_reward(sigma, converted, phi)
        worst = max(worst, abs(got - exhaustive_best_prediction(sigma, converted)))
        done += 1
    return SuiteResult("prediction-rule", worst <= 1e-9, instances, "max_abs_diff", worst)


@_timed
def statistic_equivalence_suite(instances: int = 50, seed: int = 0) -> SuiteResult:
    """Statistics agree between a model and its converted counterpart."""
    rng = np.random.default_rng(seed)
    f = NegativeEntropy()
    worst = 0.0
    keys_match = True
    for k in range(instances):
        h = 1 + k % 3
        model = coupled_tag(h)
        converted = ConvertedModel(model, _tangent_gamma(f, model.n_states, 2, rng))
        policy = random_tree_policy(model, rng)
        rules = policy.decision_rules(h)
        plain = propagate(model, rules)
        plus = propagate(converted.model, rules)
        for a, b in zip(plain, plus):
            if set(a.entries) != set(b.entries):
                keys_match = False
                continue
            for z, row in a.entries.items():
                worst = max(worst, float(np.abs(row - b.entries[z]).max()))
    return SuiteResult("statistic-equivalence", keys_match and worst <= 1e-12, instances, "max_abs_diff", worst,
                       details={"keys_match": keys_match})


@_timed
def loss_bound_suite(instances: int = 20, seed: int = 0) -> SuiteResult:
    """Optimal converted value never exceeds the centralized optimum; loss within twice the max gap."""
    rng = np.random.default_rng(seed)
    f = NegativeEntropy()
    worst_order = -np.inf
    worst_bound = -np.inf
    worst_policy_gap = np.inf
    for k in range(instances):
        S = int(rng.integers(2, 4))
        h = 2 + k % 2
        model = random_instance(rng, n_states=S, horizon=h, stage_rewards=bool(k % 2))
        gamma = _tangent_gamma(f, S, int(rng.integers(1, 4)), rng)
        res = brute_force_pair(model, gamma)
        worst_order = max(worst_order, res.plus_value - res.rho_value)
        worst_bound = max(worst_bound, abs(res.rho_value - res.rho_value_of_plus_policy) - res.loss_bound)
        worst_policy_gap = min(worst_policy_gap, res.min_gap)
    passed = worst_order <= GAP_SLACK and worst_bound <= GAP_SLACK and worst_policy_gap >= -GAP_SLACK
    return SuiteResult("loss-bound", passed, instances, "max_violation", float(max(worst_order, worst_bound)),
                       details={"plus_minus_rho": worst_order, "loss_minus_bound": worst_bound,
                                "min_policy_gap": worst_policy_gap})


def _reachable_final_statistics(model):
    """Final statistic of every deterministic history policy, found by depth-first search."""
    def walk(sigma, t):
        if t == model.horizon:
            yield sigma
            return
        per_agent = []
        for i in range(model.n_agents):
            seqs = sigma.individual_sequences(i)
            per_agent.append([dict(zip(seqs, acts)) for acts in
                              itertools.product(range(model.action_sizes[t][i]), repeat=len(seqs))])
        for rules in itertools.product(*per_agent):
            yield from walk(statistic_update(model, sigma, [r.__getitem__ for r in rules]), t + 1)
    yield from walk(PlanTimeStatistic.initial(model), 0)


def factorization_error(sigma: PlanTimeStatistic) -> float:
    """Largest ``|p(z_i, z_-i) - p(z_i) p(z_-i)|`` over agents and sequence pairs, zero cells included."""
    worst = 0.0
    for i in range(sigma.n_agents):
        joint, own, rest = {}, {}, {}
        for z, row in sigma.entries.items():
            u, v, p = project(z, i), project_others(z, i), float(row.sum())
            joint[u, v] = joint.get((u, v), 0.0) + p
            own[u] = own.get(u, 0.0) + p
            rest[v] = rest.get(v, 0.0) + p
        for u, pu in own.items():
            for v, pv in rest.items():
                worst = max(worst, abs(joint.get((u, v), 0.0) - pu * pv))
    return worst


@_timed
def zero_loss_suite(horizons=(1, 2), K: int = 3, product_instances: int = 50,
                       seed: int = 0) -> SuiteResult:
    """Zero-loss claims: product-form statistics and the single-agent case.

    The alpha set is built from ``K`` tangents at uniformly sampled points.
    Checks that every reachable final statistic of the decoupled domain
    factorizes, that its decentralization gap is zero, and that the single
    agent problem loses nothing through conversion. Randomly constructed
    product-form statistics are checked for a zero gap as well.
    """
    f = NegativeEntropy()
    rng = np.random.default_rng(seed)
    max_fact = 0.0
    max_gap = 0.0
    count = 0
    for h in horizons:
        model = decoupled_chains(h)
        gamma = _tangent_gamma(f, model.n_states, K, rng)
        for sigma in _reachable_final_statistics(model):
            max_fact = max(max_fact, factorization_error(sigma))
            max_gap = max(max_gap, decentralization_gap(sigma, gamma))
            count += 1
    max_product_gap = 0.0
    for _ in range(product_instances):
        sizes = rng.integers(1, 4, size=2)
        sigma = product_statistic(rng, sizes, rng.integers(1, 4, size=2))
        max_product_gap = max(max_product_gap, decentralization_gap(sigma, _tangent_gamma(f, int(np.prod(sizes)), K, rng)))
    tiger = single_tiger(2)
    res = brute_force_pair(tiger, _tangent_gamma(f, tiger.n_states, K, rng))
    tiger_diff = abs(res.rho_value - res.plus_value)
    passed = max_fact <= 1e-9 and max(max_gap, max_product_gap) <= 1e-9 and tiger_diff <= 1e-9
    return SuiteResult("zero-loss", passed, count, "max_gap", max_gap,
                       details={"max_factorization_error": max_fact, "max_product_statistic_gap": max_product_gap,
                                "single_agent_diff": tiger_diff})


@_timed
def tangent_suite(instances: int = 1000, n_states: int = 4, K: int = 5, seed: int = 0) -> SuiteResult:
    """Tangent sets lower-bound negative entropy and touch it at their points."""
    f = NegativeEntropy()
    rng = np.random.default_rng(seed)
    points = sample_simplex(n_states, K, rng)
    gamma = AlphaSet.from_points(f, points)
    beliefs = sample_simplex(n_states, instances, rng)
    above = max(rho_value(gamma, b) - f(b) for b in beliefs)
    touch = max(abs(rho_value(AlphaSet([a]), b) - f(b)) for a, b in zip(gamma.vectors, points))
    touch_set = max(abs(rho_value(gamma, b) - f(b)) for b in points)
    conj = max(abs(f.conjugate(f.gradient(b)) - 1.0) for b in beliefs if (b > 0).all())
    passed = above <= 1e-9 and max(touch, touch_set) <= 1e-9 and conj <= 1e-9
    return SuiteResult("tangent", passed, instances, "max_excess", float(above),
                       details={"tangency_error": max(touch, touch_set), "conjugate_error": conj})


@_timed
def filtering_suite(instances: int = 100, seed: int = 0) -> SuiteResult:
    """Conditioning a propagated statistic equals step-by-step Bayesian filtering."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        model = random_instance(rng, n_states=int(rng.integers(2, 5)), horizon=int(rng.integers(1, 4)))
        policy = random_tree_policy(model, rng)
        stats = propagate(model, policy.decision_rules(model.horizon))
        for t, sigma in enumerate(stats):
            for zvec in sigma.entries:
                belief, _ = condition(sigma, zvec)
                actions = [tuple(p.action(project(zvec[:k], i)) for i, p in enumerate(policy.agents))
                           for k in range(t)]
                direct = filter_sequence(model, actions, list(zvec))
                worst = max(worst, float(np.abs(belief - direct).max()))
    return SuiteResult("filtering", worst <= 1e-9, instances, "max_abs_diff", worst)


@_timed
def evaluation_suite(instances: int = 10, rollouts: int = 100_000, horizon: int = 3, K: int = 3,
                     seed: int = 0) -> SuiteResult:
    """Exact centralized-reward value against Monte Carlo on coupled-tag."""
    rng = np.random.default_rng(seed)
    f = NegativeEntropy()
    model = coupled_tag(horizon)
    gamma = _tangent_gamma(f, model.n_states, K, rng)
    worst = 0.0
    for _ in range(instances):
        policy = random_joint_fsc(model, 2, rng)
        exact = evaluate_exact((model, gamma), policy)
        mean, se = evaluate_mc((model, gamma), policy, rollouts, rng)
        worst = max(worst, abs(exact - mean) / se if se > 0 else (0.0 if exact == mean else np.inf))
    return SuiteResult("evaluation", worst <= 3.0, instances, "max_z_score", worst)


SUITES = {
    "gap-sign": gap_sign_suite,
    "prediction-rule": prediction_rule_suite,
    "statistic-equivalence": statistic_equivalence_suite,
    "loss-bound": loss_bound_suite,
    "zero-loss": zero_loss_suite,
    "tangent": tangent_suite,
    "filtering": filtering_suite,
    "evaluation": evaluation_suite,
}

# short ids accepted by ``decrho verify --suite``
SUITE_ALIASES = {
    "lemma1": "statistic-equivalence",
    "lemma2": "prediction-rule",
    "lemma3": "gap-sign",
    "lemma4": "loss-bound",
    "theorem1": "loss-bound",
    "obs1": "zero-loss",
}
