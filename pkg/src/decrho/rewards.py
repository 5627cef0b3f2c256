"""Convex information rewards and their piecewise-linear lower approximation.

A convex, differentiable ``f`` on the simplex is approximated from below by
``rho(b) = max_k <b, alpha_k>`` where each ``alpha_k`` is the tangent
hyperplane of ``f`` at a linearization point ``b_k``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp, xlogy
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .beliefs import PlanTimeStatistic

# floor applied inside ln() so deterministic posteriors give finite alphas
BELIEF_FLOOR = 1e-12


class ConvexReward:
    """Interface for a convex final reward ``f`` over beliefs.

    Subclasses provide ``__call__``, ``gradient`` and ``conjugate``; the
    default tangent is ``grad f(b) - f*(grad f(b))``.
    """

    name = "convex"

    def __call__(self, b) -> float:
        raise NotImplementedError

    def gradient(self, b) -> np.ndarray:
        raise NotImplementedError

    def conjugate(self, y) -> float:
        raise NotImplementedError

    def tangent(self, b) -> np.ndarray:
        g = self.gradient(b)
        return g - self.conjugate(g)


class NegativeEntropy(ConvexReward):
    """``f(b) = sum_s b(s) ln b(s)`` with ``0 ln 0 = 0``."""

    name = "negentropy"

    def __init__(self, floor: float = BELIEF_FLOOR):
        self.floor = floor

    def __call__(self, b) -> float:
        b = np.asarray(b, dtype=np.float64)
        return float(xlogy(b, b).sum())

    def gradient(self, b) -> np.ndarray:
        return np.log(np.maximum(np.asarray(b, dtype=np.float64), self.floor)) + 1.0

    def conjugate(self, y) -> float:
        # log-sum-exp
        return float(logsumexp(y))

    def tangent(self, b) -> np.ndarray:
        # closed form of the generic tangent: alpha(s) = ln b(s)
        return np.log(np.maximum(np.asarray(b, dtype=np.float64), self.floor))

    def __repr__(self):
        return f"NegativeEntropy(floor={self.floor:g})"


REWARDS = {"negentropy": NegativeEntropy}


def get_reward(name: str) -> ConvexReward:
    try:
        return REWARDS[name]()
    except KeyError:
        raise ValueError(f"unknown reward {name!r}; choose from {sorted(REWARDS)}") from None


class AlphaSet:
    """Ordered, non-empty set of alpha vectors, optionally with their linearization points."""

    def __init__(self, vectors, points=None):
        vectors = np.array(vectors, dtype=np.float64, ndmin=2)
        if vectors.ndim != 2 or vectors.shape[0] == 0 or vectors.shape[1] == 0:
            raise ValueError("an alpha set needs at least one non-empty vector")
        vectors.flags.writeable = False
        self.vectors = vectors
        if points is not None:
            points = np.array(points, dtype=np.float64, ndmin=2)
            if points.shape != vectors.shape:
                raise ValueError("linearization points must match the alpha vectors' shape")
            points.flags.writeable = False
        self.points = points

    @classmethod
    def zero(cls, n_states: int) -> "AlphaSet":
        """The single all-zero vector: a standard Dec-POMDP final reward."""
        return cls(np.zeros((1, n_states)))

    @classmethod
    def from_points(cls, f: ConvexReward, points) -> "AlphaSet":
        points = np.array(points, dtype=np.float64, ndmin=2)
        return cls([tangent_at(f, b) for b in points], points)

    def __len__(self):
        return self.vectors.shape[0]

    def __iter__(self):
        return iter(self.vectors)

    def __getitem__(self, k):
        return self.vectors[k]

    @property
    def n_states(self) -> int:
        return self.vectors.shape[1]

    def __repr__(self):
        return f"AlphaSet(n={len(self)}, n_states={self.n_states})"


def tangent_at(f: ConvexReward, b) -> np.ndarray:
    """Tangent hyperplane of ``f`` at belief ``b``."""
    return f.tangent(b)


def rho_value(gamma: AlphaSet, b, return_index: bool = False):
    """``max_k <b, alpha_k>``; ties go to the lowest index."""
    scores = gamma.vectors @ np.asarray(b, dtype=np.float64)
    k = int(np.argmax(scores))
    if return_index:
        return float(scores[k]), k
    return float(scores[k])


def expected_centralized_reward(sigma: PlanTimeStatistic, gamma: AlphaSet) -> float:
    """Expected max-over-alpha reward of the joint estimate at every final sequence."""
    # sigma(z) * max_k <sigma(.|z), alpha_k> == max_k <sigma(., z), alpha_k>
    if len(sigma) == 0:
        return 0.0
    _, rows = sigma.as_array()
    return float((rows @ gamma.vectors.T).max(axis=1).sum())


def expected_true_final_reward(sigma: PlanTimeStatistic, f: ConvexReward) -> float:
    """``sum_z sigma(z) f(sigma(. | z))``."""
    total = 0.0
    for row in sigma.entries.values():
        mass = row.sum()
        total += mass * f(row / mass)
    return float(total)


def sample_simplex(dim: int, count: int, rng) -> np.ndarray:
    """``count`` points drawn uniformly from the ``(dim - 1)``-simplex.

    Uses sorted-uniform spacings; returns an array of shape ``(count, dim)``.
    """
    if dim < 1 or count < 1:
        raise ValueError("dim and count must be >= 1")
    rng = np.random.default_rng(rng)
    if dim == 1:
        return np.ones((count, 1))
    cuts = np.sort(rng.random((count, dim - 1)), axis=1)
    edges = np.concatenate([np.zeros((count, 1)), cuts, np.ones((count, 1))], axis=1)
    return np.diff(edges, axis=1)


class TangentApproximation(BaseEstimator, TransformerMixin):
    """Fit a tangent alpha set to linearization points; transform beliefs to per-alpha scores.

    ``fit(X)`` uses the rows of ``X`` as linearization points, or draws
    ``n_points`` uniform points over ``n_states`` states when ``X`` is None.
    ``transform`` returns ``B @ alphas.T``; ``predict`` returns the
    piecewise-linear reward ``max_k <b, alpha_k>``.
    """

    def __init__(self, reward="negentropy", n_points=3, n_states=None, random_state=None):
        self.reward = reward
        self.n_points = n_points
        self.n_states = n_states
        self.random_state = random_state

    def fit(self, X=None, y=None):
        f = get_reward(self.reward) if isinstance(self.reward, str) else self.reward
        if X is None:
            if self.n_states is None:
                raise ValueError("pass linearization points or set n_states")
            X = sample_simplex(self.n_states, self.n_points, self.random_state)
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        self.gamma_ = AlphaSet.from_points(f, X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "gamma_")
        return np.atleast_2d(np.asarray(X, dtype=np.float64)) @ self.gamma_.vectors.T

    def predict(self, X):
        return self.transform(X).max(axis=1)
