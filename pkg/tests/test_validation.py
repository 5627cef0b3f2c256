import numpy as np
import pytest

from decrho import AlphaSet, ModelError, coupled_tag
from decrho.validation import check_belief, check_beliefs, check_gamma, check_rng


def test_check_belief():
    np.testing.assert_array_equal(check_belief([0.25, 0.75], 2), [0.25, 0.75])
    with pytest.raises(ValueError, match="entries"):
        check_belief([1.0], 2)
    with pytest.raises(ValueError, match="sums"):
        check_belief([0.5, 0.6])
    with pytest.raises(ValueError, match="non-negative"):
        check_belief([1.5, -0.5])


def test_check_beliefs_rows():
    assert check_beliefs([0.5, 0.5]).shape == (1, 2)
    with pytest.raises(ValueError):
        check_beliefs([[0.5, 0.5], [0.9, 0.2]])


def test_check_gamma():
    model = coupled_tag(1)
    gamma = check_gamma(np.zeros((2, 3)), model)
    assert isinstance(gamma, AlphaSet)
    with pytest.raises(ModelError):
        check_gamma(np.zeros((2, 4)), model)
    with pytest.raises(ValueError, match="finite"):
        check_gamma([[np.inf, 0.0, 0.0]])


def test_check_rng_is_reproducible():
    assert check_rng(3).random() == check_rng(3).random()
    rng = np.random.default_rng(0)
    assert check_rng(rng) is rng
