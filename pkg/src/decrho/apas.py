"""Adaptive prediction action search.

Alternates two phases. Planning converts the problem for the current alpha
set and runs policy graph improvement on it. Adaptation discards the alpha
set and rebuilds it from tangents of ``f`` at joint state estimates reached
by the best policy found so far.

Random streams are split hierarchically from one seed: one stream for
initial and ablation alpha sets, one per planning call and one for
adaptation rollouts. The first iteration is therefore identical with and
without adaptation.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .conversion import ConvertedModel
from .evaluation import evaluate_exact, filter_batch, simulate
from .model import DecPomdpModel
from .planner import PlannerParams, _act, plan_with_history
from .rewards import AlphaSet, ConvexReward, get_reward, sample_simplex

CONVERGENCE_TOL = 1e-6


@dataclass
class ApasConfig:
    K: int = 3
    outer_iterations: int = 10
    planner: PlannerParams = field(default_factory=PlannerParams)
    final_mode: str = "true"
    seed: int = None
    retain_best_gamma: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.outer_iterations < 1:
            raise ValueError("outer_iterations must be >= 1")
        if self.final_mode not in ("true", "rho"):
            raise ValueError("final_mode must be 'true' or 'rho'")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class IterationRecord:
    gamma_points: np.ndarray
    gamma_vectors: np.ndarray
    planner_value: float
    rho_value: float
    true_value: float
    value: float
    best_value: float
    phase_times: dict


@dataclass
class ApasReport:
    config: ApasConfig
    iterations: list = field(default_factory=list)
    best_value: float = -np.inf
    best_policy: object = None
    best_gamma: AlphaSet = None
    converged: bool = False

    @property
    def best_values(self) -> list:
        return [r.best_value for r in self.iterations]


def _points_shift(old: np.ndarray, new: np.ndarray) -> float:
    if old.shape != new.shape:
        return np.inf
    order_old = np.lexsort(old.T[::-1])
    order_new = np.lexsort(new.T[::-1])
    return float(np.abs(old[order_old] - new[order_new]).sum())


def _adapted_points(model, policy, K, rng) -> np.ndarray:
    """Joint state estimates at the end of ``K`` sampled trajectories."""
    traj = simulate(model, policy, K, rng, steps=model.horizon)
    return filter_batch(model, traj)


def _run(model: DecPomdpModel, f: ConvexReward, config: ApasConfig, adapt: bool):
    root = np.random.SeedSequence(config.seed)
    gamma_seq, plan_seq, adapt_seq = root.spawn(3)
    gamma_rng = np.random.default_rng(gamma_seq)
    adapt_rng = np.random.default_rng(adapt_seq)
    plan_rngs = [np.random.default_rng(s) for s in plan_seq.spawn(config.outer_iterations)]

    report = ApasReport(config)
    S = model.n_states
    points = sample_simplex(S, config.K, gamma_rng)
    gamma = AlphaSet.from_points(f, points)
    for it in range(config.outer_iterations):
        times = {}
        start = time.perf_counter()
        converted = ConvertedModel(model, gamma)
        policy, planner_value, _ = plan_with_history(converted, config.planner, plan_rngs[it])
        times["plan"] = time.perf_counter() - start

        start = time.perf_counter()
        rho_value = evaluate_exact((model, gamma), policy)
        true_value = evaluate_exact(model, policy, reward=f)
        value = true_value if config.final_mode == "true" else rho_value
        times["evaluate"] = time.perf_counter() - start

        if value > report.best_value:
            report.best_value, report.best_policy, report.best_gamma = value, policy, gamma
        record = IterationRecord(gamma.points, gamma.vectors, planner_value, rho_value,
                                 true_value, value, report.best_value, times)
        report.iterations.append(record)
        if it == config.outer_iterations - 1:
            break

        start = time.perf_counter()
        if adapt:
            new_points = _adapted_points(model, report.best_policy, config.K, adapt_rng)
            moved = _points_shift(gamma.points, new_points)
            new_gamma = AlphaSet.from_points(f, new_points)
            if config.retain_best_gamma:
                new_gamma = AlphaSet(np.vstack([report.best_gamma.vectors, new_gamma.vectors]),
                                     np.vstack([report.best_gamma.points, new_gamma.points]))
            gamma = new_gamma
        else:
            gamma = AlphaSet.from_points(f, sample_simplex(S, config.K, gamma_rng))
            moved = np.inf
        times["adapt"] = time.perf_counter() - start
        if moved < CONVERGENCE_TOL:
            report.converged = True
            break
    return report.best_policy, report


def run_apas(model: DecPomdpModel, f: ConvexReward = None, config: ApasConfig = None):
    """Plan with adaptive alpha sets; returns ``(best policy, report)``."""
    return _run(model, f or get_reward("negentropy"), config or ApasConfig(), adapt=True)


def run_apas_no_adaptation(model: DecPomdpModel, f: ConvexReward = None, config: ApasConfig = None):
    """Ablation: a fresh uniformly sampled alpha set at every outer iteration."""
    return _run(model, f or get_reward("negentropy"), config or ApasConfig(), adapt=False)


class Apas(BaseEstimator):
    """Estimator wrapper: ``fit(model)`` runs the search, ``predict`` queries the best policy."""

    def __init__(self, K=3, outer_iterations=10, fsc_width=2, n_iter=20, restart_prob=0.1,
                 adapt=True, reward="negentropy", final_mode="true", random_state=None):
        self.K = K
        self.outer_iterations = outer_iterations
        self.fsc_width = fsc_width
        self.n_iter = n_iter
        self.restart_prob = restart_prob
        self.adapt = adapt
        self.reward = reward
        self.final_mode = final_mode
        self.random_state = random_state

    def _config(self) -> ApasConfig:
        params = PlannerParams(self.fsc_width, self.n_iter, self.restart_prob)
        return ApasConfig(self.K, self.outer_iterations, params, self.final_mode, self.random_state)

    def fit(self, model, y=None):
        runner = run_apas if self.adapt else run_apas_no_adaptation
        self.policy_, self.report_ = runner(model, get_reward(self.reward), self._config())
        self.value_ = self.report_.best_value
        self.model_ = model
        return self

    def predict(self, X):
        check_is_fitted(self, "policy_")
        problem = ConvertedModel(self.model_, self.report_.best_gamma)
        return np.array([_act(self.policy_, problem, agent, seq) for agent, seq in X])

    def score(self, model=None, y=None):
        check_is_fitted(self, "policy_")
        return evaluate_exact(self.model_ if model is None else model, self.policy_,
                              reward=get_reward(self.reward))
