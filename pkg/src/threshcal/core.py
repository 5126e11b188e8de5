"""Domain types and the elementary thresholding / metric primitives.

Decision rule used throughout the package: a triple is predicted positive
iff ``score >= threshold``.  ``+inf`` rejects everything and ``-inf``
accepts everything, so single-class decision sets stay representable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np


class InputError(ValueError):
    """Raised on malformed or out-of-contract input."""


class Provenance(str, enum.Enum):
    GOLD = "gold"
    AUTO = "auto"


@dataclass(frozen=True, slots=True)
class ScoredTriple:
    head: str
    relation: str
    tail: str
    score: float
    oracle_label: bool | None = None

    def __post_init__(self):
        if not self.relation:
            raise InputError("relation id must be non-empty")
        if not math.isfinite(self.score):
            raise InputError(f"score must be finite, got {self.score!r}")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.head, self.relation, self.tail)


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of scored triples (file order is preserved)."""

    triples: tuple[ScoredTriple, ...]

    def __post_init__(self):
        object.__setattr__(self, "triples", tuple(self.triples))
        seen = set()
        for t in self.triples:
            if t.key in seen:
                raise InputError(f"duplicate triple {t.key}")
            seen.add(t.key)

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)

    @cached_property
    def relations(self) -> frozenset[str]:
        return frozenset(t.relation for t in self.triples)

    @cached_property
    def scores(self) -> np.ndarray:
        arr = np.array([t.score for t in self.triples], dtype=float)
        arr.flags.writeable = False
        return arr

    @cached_property
    def relation_ids(self) -> np.ndarray:
        arr = np.array([t.relation for t in self.triples], dtype=object)
        arr.flags.writeable = False
        return arr

    @cached_property
    def is_labeled(self) -> np.ndarray:
        arr = np.array([t.oracle_label is not None for t in self.triples], dtype=bool)
        arr.flags.writeable = False
        return arr

    @cached_property
    def labels(self) -> np.ndarray:
        """Oracle labels as booleans; unlabeled entries read as False."""
        arr = np.array([bool(t.oracle_label) for t in self.triples], dtype=bool)
        arr.flags.writeable = False
        return arr

    @cached_property
    def indices_by_relation(self) -> dict[str, np.ndarray]:
        out: dict[str, list[int]] = {}
        for i, t in enumerate(self.triples):
            out.setdefault(t.relation, []).append(i)
        return {r: np.asarray(ix, dtype=np.intp) for r, ix in out.items()}

    def require_labels(self) -> None:
        if not self.is_labeled.all():
            missing = int((~self.is_labeled).sum())
            raise InputError(f"{missing} triple(s) carry no oracle label")


@dataclass(frozen=True, slots=True)
class LabeledPoint:
    score: float
    label_weight: float
    provenance: Provenance = Provenance.GOLD

    def __post_init__(self):
        if not 0.0 <= self.label_weight <= 1.0:
            raise InputError(f"label_weight must lie in [0, 1], got {self.label_weight}")
        if self.provenance is Provenance.GOLD and self.label_weight not in (0.0, 1.0):
            raise InputError("gold points must carry a hard label")


@dataclass(frozen=True, eq=False)
class DecisionSet:
    """Labeled (score, weight) pairs over which a threshold is searched.

    Stored column-wise; ``points`` materializes :class:`LabeledPoint` objects
    on demand.
    """

    scores: np.ndarray
    weights: np.ndarray
    gold: np.ndarray
    relation: str | None = None
    degraded: bool = False

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        gold = np.broadcast_to(np.asarray(self.gold, dtype=bool), scores.shape).copy()
        if scores.shape != weights.shape:
            raise InputError("scores and weights differ in length")
        if np.any((weights < 0) | (weights > 1)):
            raise InputError("label weights must lie in [0, 1]")
        for name, arr in (("scores", scores), ("weights", weights), ("gold", gold)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def from_points(cls, points: Iterable[LabeledPoint], relation: str | None = None) -> DecisionSet:
        pts = list(points)
        return cls(
            scores=[p.score for p in pts],
            weights=[p.label_weight for p in pts],
            gold=[p.provenance is Provenance.GOLD for p in pts],
            relation=relation,
        )

    @classmethod
    def hard(cls, scores: Sequence[float], labels: Sequence[bool], relation: str | None = None) -> DecisionSet:
        return cls(scores=scores, weights=np.asarray(labels, dtype=float), gold=True, relation=relation)

    def __len__(self) -> int:
        return self.scores.size

    @property
    def points(self) -> list[LabeledPoint]:
        return [
            LabeledPoint(float(s), float(w), Provenance.GOLD if g else Provenance.AUTO)
            for s, w, g in zip(self.scores, self.weights, self.gold)
        ]

    @property
    def n_auto(self) -> int:
        return int((~self.gold).sum())

    @property
    def is_hard(self) -> bool:
        return bool(np.all((self.weights == 0.0) | (self.weights == 1.0)))


@dataclass(frozen=True)
class ThresholdMap:
    per_relation: Mapping[str, float] = field(default_factory=dict)
    default: float = 0.0

    def __post_init__(self):
        for r, t in self.per_relation.items():
            if math.isnan(t):
                raise InputError(f"threshold for {r!r} is NaN")
        if math.isnan(self.default):
            raise InputError("default threshold is NaN")
        object.__setattr__(self, "per_relation", dict(self.per_relation))

    def threshold_for(self, relation: str) -> float:
        return self.per_relation.get(relation, self.default)

    def predict(self, dataset: Dataset) -> np.ndarray:
        taus = np.array([self.threshold_for(r) for r in dataset.relation_ids], dtype=float)
        return dataset.scores >= taus


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / denom if denom else 0.0


def classify(score: float, threshold: float) -> bool:
    return score >= threshold


def compute_metrics(predictions: Sequence[bool], gold: Sequence[bool]) -> Metrics:
    pred = np.asarray(predictions, dtype=bool)
    truth = np.asarray(gold, dtype=bool)
    if pred.shape != truth.shape:
        raise InputError(f"length mismatch: {pred.size} predictions vs {truth.size} labels")
    if pred.size == 0:
        raise InputError("cannot compute metrics on empty input")
    return Metrics(
        tp=int(np.count_nonzero(pred & truth)),
        fp=int(np.count_nonzero(pred & ~truth)),
        tn=int(np.count_nonzero(~pred & ~truth)),
        fn=int(np.count_nonzero(~pred & truth)),
    )


def evaluate(thresholds: ThresholdMap, dataset: Dataset) -> Metrics:
    """Score a labeled dataset against a threshold map."""
    dataset.require_labels()
    return compute_metrics(thresholds.predict(dataset), dataset.labels)


def _require_points(points: DecisionSet) -> None:
    if len(points) == 0:
        raise InputError("decision set is empty")


def weighted_accuracy(points: DecisionSet, threshold: float) -> float:
    """Accuracy with soft labels: a positive call earns w, a negative call 1 - w."""
    _require_points(points)
    pos = points.scores >= threshold
    w = points.weights
    return float((w[pos].sum() + (1.0 - w[~pos]).sum()) / len(points))


def weighted_f1(points: DecisionSet, threshold: float) -> float:
    _require_points(points)
    pos = points.scores >= threshold
    w = points.weights
    tp = w[pos].sum()
    fp = (1.0 - w[pos]).sum()
    fn = w[~pos].sum()
    denom = 2 * tp + fp + fn
    return float(2 * tp / denom) if denom else 0.0
