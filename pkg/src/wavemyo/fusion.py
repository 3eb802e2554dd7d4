"""Decision-level fusion of per-window class posteriors.

All rules return 1-based class ids and break ties toward the lowest id.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "FusionDecision",
    "FusionMethod",
    "fuse",
    "fuse_bayesian",
    "fuse_majority",
    "fuse_sum",
]


class FusionMethod(Enum):
    MAJORITY_VOTE = "majority"
    BAYESIAN_PRODUCT = "bayesian"
    SUM_OF_POSTERIORS = "sum"


@dataclass(frozen=True, eq=False)
class FusionDecision:
    chosen_class: int
    scores: np.ndarray
    window_count: int


def _stack(posteriors) -> np.ndarray:
    rows = [getattr(p, "probs", p) for p in posteriors]
    if not rows:
        raise ValueError("cannot fuse an empty list of posteriors")
    P = np.asarray(rows, dtype=np.float64)
    if P.ndim != 2:
        raise ValueError("posteriors must all have the same length")
    if np.any(P < 0) or np.any(P > 1) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("each posterior must lie in [0, 1] and sum to 1")
    return P


def _column_sums(values: np.ndarray) -> np.ndarray:
    # exactly rounded, so the result does not depend on window order
    return np.array([math.fsum(col) for col in values.T])


def _decide(scores: np.ndarray, n: int) -> FusionDecision:
    # np.argmax returns the first maximum, i.e. the lowest class id
    return FusionDecision(int(np.argmax(scores)) + 1, scores, n)


def fuse_majority(posteriors: Sequence) -> FusionDecision:
    """Each window votes for its most probable class; scores are vote counts."""
    P = _stack(posteriors)
    votes = np.bincount(P.argmax(axis=1), minlength=P.shape[1]).astype(np.float64)
    return _decide(votes, P.shape[0])


def fuse_bayesian(posteriors: Sequence, epsilon: float = 0.0) -> FusionDecision:
    """Product rule, evaluated as a sum of logs.

    A class that gets zero probability in any window scores ``-inf``. The
    normalizing constant of the product never affects the argmax and is not
    computed.
    """
    P = _stack(posteriors)
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    with np.errstate(divide="ignore"):
        logs = np.log(P + epsilon)
    scores = np.array([-np.inf if np.isneginf(col).any() else math.fsum(col) for col in logs.T])
    if np.all(np.isneginf(scores)):
        raise ValueError("degenerate posteriors: every class has a zero-probability window")
    return _decide(scores, P.shape[0])


def fuse_sum(posteriors: Sequence) -> FusionDecision:
    P = _stack(posteriors)
    return _decide(_column_sums(P), P.shape[0])


def fuse(method: FusionMethod | str, posteriors: Sequence, epsilon: float = 0.0) -> FusionDecision:
    method = FusionMethod(method)
    if method is FusionMethod.MAJORITY_VOTE:
        return fuse_majority(posteriors)
    if method is FusionMethod.BAYESIAN_PRODUCT:
        return fuse_bayesian(posteriors, epsilon)
    return fuse_sum(posteriors)
