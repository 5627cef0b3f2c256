"""Input validation helpers shared by the estimators and the command line."""

from __future__ import annotations

import numpy as np

from .beliefs import check_belief
from .exceptions import ModelError
from .model import DecPomdpModel, check_model
from .rewards import AlphaSet

__all__ = ["check_model", "check_belief", "check_beliefs", "check_gamma", "check_rng"]


def check_beliefs(beliefs, n_states=None) -> np.ndarray:
    """2-D array of probability vectors, one per row."""
    arr = np.atleast_2d(np.asarray(beliefs, dtype=np.float64))
    if arr.ndim != 2:
        raise ValueError("beliefs must form a 2-D array")
    for row in arr:
        check_belief(row, n_states)
    return arr


def check_gamma(gamma, model: DecPomdpModel = None) -> AlphaSet:
    """Coerce to an :class:`AlphaSet` and match it against ``model``'s state count."""
    if not isinstance(gamma, AlphaSet):
        gamma = AlphaSet(gamma)
    if not np.isfinite(gamma.vectors).all():
        raise ValueError("alpha vectors must be finite")
    if model is not None and gamma.n_states != model.n_states:
        raise ModelError(f"alpha vectors have {gamma.n_states} entries, model has {model.n_states} states")
    return gamma


def check_rng(seed) -> np.random.Generator:
    """A ``Generator`` from ``None``, an int, a ``SeedSequence`` or a ``Generator``."""
    return np.random.default_rng(seed)
