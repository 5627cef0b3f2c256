"""Built-in toy domains.

``decoupled-chains``
    Each agent owns one static hidden chain variable and can only sense its
    own. Beliefs stay product-form for every policy.
``coupled-tag``
    Two agents look for one static target hidden in one of several cells.
    Both sense the same target, so their observations are correlated.
``single-tiger``
    One agent listens for a static tiger behind one of two doors.

Stage rewards are zero; only the final information reward matters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import DecPomdpModel

DOMAINS = ("decoupled-chains", "coupled-tag", "single-tiger")


@dataclass(frozen=True)
class DomainSpec:
    name: str
    horizon: int = 2
    n_agents: int = 2
    chain_states: int = 2
    n_cells: int = 3
    accuracy: float = None

    def __post_init__(self):
        if self.name not in DOMAINS:
            raise ValueError(f"unknown domain {self.name!r}; choose from {DOMAINS}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.accuracy is not None and not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")


def _joint_index(sizes):
    return list(itertools.product(*(range(k) for k in sizes)))


def single_tiger(horizon: int = 2, accuracy: float = 0.85) -> DecPomdpModel:
    """Action 0 listens (correct with ``accuracy``); action 1 idles (uninformative)."""
    t = np.zeros((2, 2, 2))
    t[:, :, :] = np.eye(2)[:, None, :]
    o = np.empty((2, 2, 2))
    o[0] = [[accuracy, 1 - accuracy], [1 - accuracy, accuracy]]
    o[1] = 0.5
    return DecPomdpModel.from_factored(
        horizon, [0.5, 0.5], (2,), (2,), t, o, np.zeros((2, 2)),
        state_names=("tiger-left", "tiger-right"),
        action_names=(("listen", "idle"),),
        observation_names=(("hear-left", "hear-right"),),
        agent_names=("listener",),
    )


def coupled_tag(horizon: int = 2, n_cells: int = 3, accuracy: float = 0.85) -> DecPomdpModel:
    """Two agents each look into one cell per step and report detect / no detect.

    Looking at the target's cell detects it with ``accuracy``; looking
    elsewhere gives a false detection with ``1 - accuracy``.
    """
    n_agents = 2
    sizes = (n_cells,) * n_agents
    joint_actions = _joint_index(sizes)
    joint_obs = _joint_index((2,) * n_agents)
    s = n_cells
    t = np.broadcast_to(np.eye(s)[:, None, :], (s, len(joint_actions), s)).copy()
    o = np.zeros((len(joint_actions), s, len(joint_obs)))
    for ja, acts in enumerate(joint_actions):
        for target in range(s):
            detect = [accuracy if a == target else 1 - accuracy for a in acts]
            for jz, obs in enumerate(joint_obs):
                o[ja, target, jz] = np.prod([p if z else 1 - p for p, z in zip(detect, obs)])
    return DecPomdpModel.from_factored(
        horizon, np.full(s, 1.0 / s), sizes, (2,) * n_agents, t, o, np.zeros((s, len(joint_actions))),
        state_names=tuple(f"cell{c}" for c in range(s)),
        action_names=tuple(tuple(f"look{c}" for c in range(s)) for _ in range(n_agents)),
        observation_names=(("miss", "detect"),) * n_agents,
        agent_names=("seeker0", "seeker1"),
    )


def decoupled_chains(horizon: int = 2, n_agents: int = 2, chain_states: int = 2,
                     accuracy: float = 0.8) -> DecPomdpModel:
    """Agent ``i`` senses (action 0) or idles (action 1) on its own static variable.

    Sensing reports the true value with ``accuracy`` and each other value with
    ``(1 - accuracy) / (chain_states - 1)``; idling reports uniformly.
    """
    m = chain_states
    states = _joint_index((m,) * n_agents)
    joint_actions = _joint_index((2,) * n_agents)
    joint_obs = _joint_index((m,) * n_agents)
    s = len(states)
    if m > 1:
        sense = np.full((m, m), (1 - accuracy) / (m - 1))
        np.fill_diagonal(sense, accuracy)
    else:
        sense = np.ones((1, 1))
    idle = np.full((m, m), 1.0 / m)
    t = np.broadcast_to(np.eye(s)[:, None, :], (s, len(joint_actions), s)).copy()
    o = np.zeros((len(joint_actions), s, len(joint_obs)))
    for ja, acts in enumerate(joint_actions):
        for si, x in enumerate(states):
            for jz, z in enumerate(joint_obs):
                o[ja, si, jz] = np.prod([(sense if a == 0 else idle)[xi, zi]
                                         for a, xi, zi in zip(acts, x, z)])
    return DecPomdpModel.from_factored(
        horizon, np.full(s, 1.0 / s), (2,) * n_agents, (m,) * n_agents, t, o,
        np.zeros((s, len(joint_actions))),
        state_names=tuple("x" + "".join(map(str, x)) for x in states),
        action_names=(("sense", "idle"),) * n_agents,
        agent_names=tuple(f"agent{i}" for i in range(n_agents)),
    )


def random_instance(rng, n_states: int = 2, n_agents: int = 2, n_actions: int = 2,
                    n_observations: int = 2, horizon: int = 2,
                    stage_rewards: bool = False) -> DecPomdpModel:
    """Random time-homogeneous model with Dirichlet(1) rows throughout."""
    rng = np.random.default_rng(rng)
    n_ja = n_actions ** n_agents
    n_jz = n_observations ** n_agents
    b0 = rng.dirichlet(np.ones(n_states))
    t = rng.dirichlet(np.ones(n_states), size=(n_states, n_ja))
    o = rng.dirichlet(np.ones(n_jz), size=(n_ja, n_states))
    r = rng.uniform(-1, 1, size=(n_states, n_ja)) if stage_rewards else np.zeros((n_states, n_ja))
    return DecPomdpModel.from_factored(horizon, b0, (n_actions,) * n_agents,
                                       (n_observations,) * n_agents, t, o, r)


def build_domain(spec: DomainSpec) -> DecPomdpModel:
    if spec.name == "single-tiger":
        return single_tiger(spec.horizon, 0.85 if spec.accuracy is None else spec.accuracy)
    if spec.name == "coupled-tag":
        return coupled_tag(spec.horizon, spec.n_cells, 0.85 if spec.accuracy is None else spec.accuracy)
    return decoupled_chains(spec.horizon, spec.n_agents, spec.chain_states,
                            0.8 if spec.accuracy is None else spec.accuracy)


def domain_by_name(name: str, horizon: int = 2, **kwargs) -> DecPomdpModel:
    return build_domain(DomainSpec(name, horizon, **kwargs))


def emit_benchmarks(directory, horizon: int = 2) -> list:
    """Write every built-in domain as ``<name>.dpomdp`` into ``directory``."""
    from .io.dpomdp import write_dpomdp

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in DOMAINS:
        path = out / f"{name}.dpomdp"
        path.write_text(write_dpomdp(domain_by_name(name, horizon)), encoding="utf-8")
        paths.append(path)
    return paths
