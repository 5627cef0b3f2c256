"""Finite-horizon Dec-POMDP model with time-dependent spaces.

States, actions and observations are dense integer indices. Joint actions and
joint observations are flattened in C order, so agent 0 varies slowest; this
matches the order produced by :func:`enumerate_joint`.

Dynamics at step ``t`` are stored as ``dynamics[t][s, ja, jz, s_next]`` =
P(z_{t+1}=jz, s_{t+1}=s_next | s_t=s, a_t=ja) and rewards as
``rewards[t][s, ja]``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import ModelError

STOCHASTIC_TOL = 1e-9


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class DecPomdpModel:
    """A Dec-POMDP ``<h, I, S, b0, A, Z, T, R>``.

    ``action_sizes[t][i]`` is ``|A_{i,t}|`` for ``t = 0..h-1`` and
    ``observation_sizes[t][i]`` is ``|Z_{i,t+1}|``, i.e. the space of the
    observation received after acting at step ``t``.

    ``factors`` optionally keeps the separate transition table
    ``T[s, ja, s']`` and observation table ``O[ja, s', jz]`` of a
    time-homogeneous model; the `.dpomdp` writer needs them.
    """

    horizon: int
    initial_belief: np.ndarray
    action_sizes: tuple
    observation_sizes: tuple
    dynamics: tuple
    rewards: tuple
    state_names: Optional[tuple] = None
    action_names: Optional[tuple] = None
    observation_names: Optional[tuple] = None
    agent_names: Optional[tuple] = None
    factors: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        h = int(self.horizon)
        if h < 1:
            raise ModelError(f"horizon must be >= 1, got {self.horizon}")
        object.__setattr__(self, "horizon", h)
        object.__setattr__(self, "initial_belief", _frozen(self.initial_belief))
        acts = tuple(tuple(int(x) for x in row) for row in self.action_sizes)
        obs = tuple(tuple(int(x) for x in row) for row in self.observation_sizes)
        if len(acts) != h or len(obs) != h:
            raise ModelError("need one action-size row and one observation-size row per step")
        n = len(acts[0])
        if n < 1 or any(len(r) != n for r in acts + obs):
            raise ModelError("every step must list one space size per agent")
        if any(x < 1 for r in acts + obs for x in r):
            raise ModelError("space sizes must be positive")
        object.__setattr__(self, "action_sizes", acts)
        object.__setattr__(self, "observation_sizes", obs)
        # keep shared arrays shared so homogeneous models stay one table
        seen = {}
        dyn, rew = [], []
        for arr in self.dynamics:
            if id(arr) not in seen:
                seen[id(arr)] = arr if _is_frozen_f64(arr) else _frozen(arr)
            dyn.append(seen[id(arr)])
        for arr in self.rewards:
            if id(arr) not in seen:
                seen[id(arr)] = arr if _is_frozen_f64(arr) else _frozen(arr)
            rew.append(seen[id(arr)])
        if len(dyn) != h or len(rew) != h:
            raise ModelError("need one dynamics table and one reward table per step")
        s = self.initial_belief.shape[0]
        for t in range(h):
            want = (s, _prod(acts[t]), _prod(obs[t]), s)
            if dyn[t].shape != want:
                raise ModelError(f"dynamics[{t}] has shape {dyn[t].shape}, expected {want}")
            if rew[t].shape != (s, want[1]):
                raise ModelError(f"rewards[{t}] has shape {rew[t].shape}, expected {(s, want[1])}")
        object.__setattr__(self, "dynamics", tuple(dyn))
        object.__setattr__(self, "rewards", tuple(rew))
        if self.factors is not None:
            trans, observ = self.factors
            object.__setattr__(self, "factors", (_frozen(trans), _frozen(observ)))

    @classmethod
    def homogeneous(cls, horizon, initial_belief, action_sizes, observation_sizes,
                    dynamics, rewards, **names):
        """Build a time-homogeneous model that stores one table for all steps."""
        dynamics = _frozen(dynamics)
        rewards = _frozen(rewards)
        h = int(horizon)
        return cls(
            horizon=h,
            initial_belief=initial_belief,
            action_sizes=(tuple(action_sizes),) * h,
            observation_sizes=(tuple(observation_sizes),) * h,
            dynamics=(dynamics,) * h,
            rewards=(rewards,) * h,
            **names,
        )

    @classmethod
    def from_factored(cls, horizon, initial_belief, action_sizes, observation_sizes,
                      transitions, observations, rewards, **names):
        """Time-homogeneous model from ``T[s, ja, s']`` and ``O[ja, s', jz]``.

        The combined dynamics is ``O(jz | ja, s') * T(s' | s, ja)``.
        """
        trans = _frozen(transitions)
        observ = _frozen(observations)
        dyn = combine_factors(trans, observ)
        model = cls.homogeneous(horizon, initial_belief, action_sizes, observation_sizes,
                                dyn, rewards, **names)
        object.__setattr__(model, "factors", (trans, observ))
        return model

    @property
    def n_agents(self) -> int:
        return len(self.action_sizes[0])

    @property
    def n_states(self) -> int:
        return self.initial_belief.shape[0]

    @property
    def is_homogeneous(self) -> bool:
        return (all(d is self.dynamics[0] for d in self.dynamics)
                and all(r is self.rewards[0] for r in self.rewards)
                and all(a == self.action_sizes[0] for a in self.action_sizes)
                and all(o == self.observation_sizes[0] for o in self.observation_sizes))

    def n_joint_actions(self, t: int) -> int:
        return _prod(self.action_sizes[t])

    def n_joint_observations(self, t: int) -> int:
        """Number of joint observations received at time ``t`` (1 <= t <= h)."""
        return _prod(self.observation_sizes[t - 1])

    def joint_action_index(self, t: int, actions: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(actions), self.action_sizes[t]))

    def joint_action(self, t: int, index: int) -> tuple:
        return tuple(int(x) for x in np.unravel_index(index, self.action_sizes[t]))

    def joint_observation_index(self, t: int, observations: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(observations), self.observation_sizes[t - 1]))

    def joint_observation(self, t: int, index: int) -> tuple:
        return tuple(int(x) for x in np.unravel_index(index, self.observation_sizes[t - 1]))

    def with_horizon(self, horizon: int) -> "DecPomdpModel":
        """Same time-homogeneous problem with a different horizon."""
        if not self.is_homogeneous:
            raise ModelError("only time-homogeneous models can change horizon")
        h = int(horizon)
        return DecPomdpModel(
            horizon=h,
            initial_belief=self.initial_belief,
            action_sizes=(self.action_sizes[0],) * h,
            observation_sizes=(self.observation_sizes[0],) * h,
            dynamics=(self.dynamics[0],) * h,
            rewards=(self.rewards[0],) * h,
            state_names=self.state_names,
            action_names=self.action_names,
            observation_names=self.observation_names,
            agent_names=self.agent_names,
            factors=self.factors,
        )


def _is_frozen_f64(arr) -> bool:
    return isinstance(arr, np.ndarray) and arr.dtype == np.float64 and not arr.flags.writeable


def _prod(xs) -> int:
    out = 1
    for x in xs:
        out *= int(x)
    return out


def combine_factors(transitions: np.ndarray, observations: np.ndarray) -> np.ndarray:
    """``D[s, a, z, s'] = O[a, s', z] * T[s, a, s']``."""
    trans = np.asarray(transitions, dtype=np.float64)
    observ = np.asarray(observations, dtype=np.float64)
    return observ.transpose(0, 2, 1)[None, :, :, :] * trans[:, :, None, :]


def validate_model(model: DecPomdpModel, tol: float = STOCHASTIC_TOL) -> list:
    """List every violated stochasticity or indexing invariant.

    An empty list means the model is well formed.
    """
    problems = []
    b0 = model.initial_belief
    if not np.all(np.isfinite(b0)) or np.any(b0 < 0):
        problems.append("initial belief has negative or non-finite entries")
    total = float(b0.sum())
    if abs(total - 1.0) > tol:
        problems.append(f"initial belief sums to {total:.12g}")
    checked = set()
    for t, dyn in enumerate(model.dynamics):
        key = id(dyn)
        if key in checked:
            continue
        checked.add(key)
        if not np.all(np.isfinite(dyn)):
            problems.append(f"dynamics at t={t} has non-finite entries")
        neg = np.argwhere(dyn < 0)
        for s, a, _, _ in neg[:10]:
            problems.append(f"negative dynamics entry at (t={t}, s={s}, a={model.joint_action(t, a)})")
        sums = dyn.sum(axis=(2, 3))
        bad = np.argwhere(np.abs(sums - 1.0) > tol)
        for s, a in bad:
            problems.append(
                f"dynamics row (t={t}, s={s}, a={model.joint_action(t, a)}) sums to {sums[s, a]:.12g}")
    for t, rew in enumerate(model.rewards):
        if not np.all(np.isfinite(rew)):
            problems.append(f"rewards at t={t} have non-finite entries")
    return problems


def check_model(model: DecPomdpModel) -> DecPomdpModel:
    """Raise :class:`ModelError` unless ``model`` validates."""
    if not isinstance(model, DecPomdpModel):
        raise ModelError(f"expected a DecPomdpModel, got {type(model).__name__}")
    problems = validate_model(model)
    if problems:
        raise ModelError("invalid model: " + "; ".join(problems[:5]))
    return model


def enumerate_joint(model: DecPomdpModel, t: int, kind: str = "action") -> list:
    """All joint actions (``0 <= t < h``) or joint observations (``1 <= t <= h``).

    Tuples are in lexicographic order with agent 0 varying slowest.
    """
    if kind == "action":
        if not 0 <= t < model.horizon:
            raise ModelError(f"no actions at time t={t} (horizon {model.horizon})")
        sizes = model.action_sizes[t]
    elif kind == "observation":
        if t == 0:
            raise ModelError("no observation at time t=0")
        if not 1 <= t <= model.horizon:
            raise ModelError(f"no observations at time t={t} (horizon {model.horizon})")
        sizes = model.observation_sizes[t - 1]
    else:
        raise ValueError(f"kind must be 'action' or 'observation', not {kind!r}")
    return list(itertools.product(*(range(k) for k in sizes)))
