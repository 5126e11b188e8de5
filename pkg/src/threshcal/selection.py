"""Choosing which triples go to the annotation oracle.

Every selector returns ``min(budget, N)`` distinct indices.  Ranked
selectors break ties by the smaller original index.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import Dataset, InputError


class SelectionKind(str, enum.Enum):
    RANDOM = "random"
    DENSITY = "density"
    UNCERTAINTY = "uncertainty"
    DWU = "dwu"


@dataclass(frozen=True)
class SelectionStrategy:
    kind: SelectionKind = SelectionKind.RANDOM
    seed: int = 12345
    density_order: str = "max"

    def __post_init__(self):
        object.__setattr__(self, "kind", SelectionKind(self.kind))
        if self.density_order not in ("max", "min"):
            raise InputError(f"density_order must be 'max' or 'min', got {self.density_order!r}")

    def select(self, dataset: Dataset | np.ndarray, budget: int, rng: np.random.Generator | None = None) -> np.ndarray:
        if self.kind is SelectionKind.RANDOM:
            return select_random(dataset, budget, self.seed if rng is None else rng)
        if self.kind is SelectionKind.DENSITY:
            return select_density(dataset, budget, order=self.density_order)
        if self.kind is SelectionKind.UNCERTAINTY:
            return select_uncertainty(dataset, budget)
        return select_density_weighted_uncertainty(dataset, budget)


def _scores(dataset) -> np.ndarray:
    return dataset.scores if isinstance(dataset, Dataset) else np.asarray(dataset, dtype=float)


def _check_budget(budget: int) -> None:
    if budget < 0:
        raise InputError(f"budget must be >= 0, got {budget}")


def _top(values: np.ndarray, budget: int) -> np.ndarray:
    # stable sort on the negated key keeps the smaller index first among ties
    order = np.argsort(-values, kind="stable")
    return order[: min(budget, values.size)]


def select_random(dataset, budget: int, seed: int | np.random.Generator = 12345) -> np.ndarray:
    _check_budget(budget)
    n = _scores(dataset).size
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.permutation(n)[: min(budget, n)]


def density_scores(scores) -> np.ndarray:
    """``d_i = sum_j (s_j - s_i)**2`` in O(N).

    Uses ``d_i = N*s_i**2 - 2*s_i*sum(s) + sum(s**2)`` on mean-centred scores;
    the sum is shift-invariant and centring avoids cancellation when all
    scores share a large offset.
    """
    s = np.asarray(scores, dtype=float)
    if s.size == 0:
        raise InputError("density of an empty score list")
    c = s - s.mean()
    n = c.size
    d = n * c * c - 2.0 * c * c.sum() + np.dot(c, c)
    return np.maximum(d, 0.0)


def select_density(dataset, budget: int, order: str = "max") -> np.ndarray:
    _check_budget(budget)
    s = _scores(dataset)
    if budget == 0 or s.size == 0:
        return np.empty(0, dtype=np.intp)
    d = density_scores(s)
    return _top(d if order == "max" else -d, budget)


def uncertainty(scores) -> np.ndarray:
    """``1 - 2*|sigmoid(s) - 0.5|``: 1 at score 0, approaching 0 at the extremes."""
    return 1.0 - 2.0 * np.abs(expit(np.asarray(scores, dtype=float)) - 0.5)


def select_uncertainty(dataset, budget: int) -> np.ndarray:
    _check_budget(budget)
    s = _scores(dataset)
    # |sigmoid(s) - 0.5| is increasing in |s|; ranking on |s| avoids spurious
    # ties where the sigmoid saturates in floating point
    return _top(-np.abs(s), budget)


def select_density_weighted_uncertainty(dataset, budget: int) -> np.ndarray:
    _check_budget(budget)
    s = _scores(dataset)
    if budget == 0 or s.size == 0:
        return np.empty(0, dtype=np.intp)
    return _top(dwu_weights(s), budget)


def dwu_weights(scores) -> np.ndarray:
    d = density_scores(scores)
    peak = d.max()
    dnorm = d / peak if peak > 0 else np.ones_like(d)
    return dnorm * uncertainty(scores)
