import numpy as np
import pytest

from decrho import AlphaSet, ConvertedModel, DecPomdpModel, NegativeEntropy, sample_simplex

ACCEPTANCE_LINES = []


def static_two_sensor_model(horizon=1, accuracy=0.8, rewards=None):
    """Two states that never change; each of two agents reports the state with ``accuracy``."""
    trans = np.zeros((2, 1, 2))
    trans[0, 0, 0] = trans[1, 0, 1] = 1.0
    obs = np.zeros((1, 2, 4))
    for s in range(2):
        for z1 in range(2):
            for z2 in range(2):
                p1 = accuracy if z1 == s else 1 - accuracy
                p2 = accuracy if z2 == s else 1 - accuracy
                obs[0, s, 2 * z1 + z2] = p1 * p2
    rew = np.zeros((2, 1)) if rewards is None else np.asarray(rewards, dtype=float).reshape(2, 1)
    return DecPomdpModel.from_factored(horizon, [0.5, 0.5], (1, 1), (2, 2), trans, obs, rew)


def tangent_converted(model, k=3, seed=0):
    """``model`` with prediction actions for ``k`` negative-entropy tangents at seeded uniform points."""
    points = sample_simplex(model.n_states, k, np.random.default_rng(seed))
    return ConvertedModel(model, AlphaSet.from_points(NegativeEntropy(), points))


@pytest.fixture
def two_sensor():
    return static_two_sensor_model()


@pytest.fixture
def negentropy():
    return NegativeEntropy()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance checks")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
