"""Threshold estimation: ACTC and the LocalOpt / GlobalOpt baselines.

ACTC runs in three steps:

1. select ``budget`` triples with a :class:`SelectionStrategy` and buy
   their labels from the oracle;
2. per relation (or once, for the uniform scope) top the gold points up to
   ``n`` with classifier-labeled triples drawn from the relation's
   unlabeled remainder;
3. search the decision set's scores for the threshold with the best local
   accuracy (or F1).

Relations are always visited in sorted order so results depend on the
input only through explicit seeds.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np
from scipy.special import logit

from .classifiers import (
    DEFAULT_INV_REG_C,
    ConvergenceError,
    DegenerateLabels,
    LabelMode,
    NumericalError,
    ProbClassifier,
    auto_label,
    fit_gp,
    fit_logistic,
)
from .core import Dataset, DecisionSet, InputError, ThresholdMap
from .kernels import KernelSpec
from .selection import SelectionKind, SelectionStrategy

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.0  # raw-score space; 0.5 in the sigmoid view
DEFAULT_N = 500
DEFAULT_GRID_STEPS = 101


class Metric(str, enum.Enum):
    ACCURACY = "acc"
    F1 = "f1"


class Scope(str, enum.Enum):
    PER_RELATION = "relation"
    UNIFORM = "uniform"


class AutoExtent(str, enum.Enum):
    TOP_UP = "topup"
    ALL = "all"


class ClassifierKind(str, enum.Enum):
    LR = "lr"
    GP = "gp"


# --- threshold search ------------------------------------------------------


def _metric_curves(scores: np.ndarray, weights: np.ndarray, metric: Metric):
    """Metric value for every candidate (sorted distinct scores, then +inf)."""
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    w = weights[order]
    cand, first = np.unique(s, return_index=True)
    # weight mass at or above each position
    pos_ge = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    neg_ge = np.concatenate([np.cumsum((1.0 - w)[::-1])[::-1], [0.0]])
    idx = np.append(first, s.size)
    tp, fp = pos_ge[idx], neg_ge[idx]
    total_pos, total_neg = pos_ge[0], neg_ge[0]
    if metric is Metric.ACCURACY:
        values = (tp + (total_neg - fp)) / s.size
    else:
        fn = total_pos - tp
        denom = 2 * tp + fp + fn
        with np.errstate(invalid="ignore", divide="ignore"):
            values = np.where(denom > 0, 2 * tp / np.where(denom > 0, denom, 1.0), 0.0)
    return np.append(cand, math.inf), values


def estimate_threshold(points: DecisionSet, metric: Metric | str = Metric.ACCURACY) -> float:
    """Best threshold among the set's own scores plus ``+inf``; ties go to the smallest."""
    return estimate_threshold_with_value(points, metric)[0]


def estimate_threshold_with_value(points: DecisionSet, metric: Metric | str = Metric.ACCURACY) -> tuple[float, float]:
    metric = Metric(metric)
    if len(points) == 0:
        raise InputError("cannot estimate a threshold from an empty decision set")
    if points.is_hard and not points.weights.any():
        return math.inf, (1.0 if metric is Metric.ACCURACY else 0.0)
    cand, values = _metric_curves(points.scores, points.weights, metric)
    k = int(np.argmax(values))
    return float(cand[k]), float(values[k])


def _literal_pseudocode_threshold(points: DecisionSet) -> float:
    """Gold-only accuracy scan in input order with a strict improvement test."""
    tau, best = 0.0, 0.0
    for s in points.scores:
        acc = float(np.mean((points.scores >= s) == (points.weights >= 0.5)))
        if acc > best:
            tau, best = float(s), acc
    return tau


# --- oracle ----------------------------------------------------------------


class BudgetExceeded(RuntimeError):
    pass


class AnnotationOracle:
    """Labels looked up from a labeled dataset, charged once per triple."""

    def __init__(self, dataset: Dataset, budget: int):
        dataset.require_labels()
        self._labels = {t.key: bool(t.oracle_label) for t in dataset}
        self._keys = [t.key for t in dataset]
        self.budget = budget
        self._charged: set[tuple[str, str, str]] = set()

    @property
    def spent(self) -> int:
        return len(self._charged)

    def annotate(self, indices: Iterable[int]) -> np.ndarray:
        out = []
        for i in indices:
            key = self._keys[int(i)]
            if key not in self._charged:
                if self.spent >= self.budget:
                    raise BudgetExceeded(f"annotation budget of {self.budget} exhausted")
                self._charged.add(key)
            out.append(self._labels[key])
        return np.asarray(out, dtype=bool)


# --- configuration ---------------------------------------------------------


@dataclass(frozen=True)
class ClassifierConfig:
    kind: ClassifierKind = ClassifierKind.LR
    inv_reg_c: float = DEFAULT_INV_REG_C
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self):
        object.__setattr__(self, "kind", ClassifierKind(self.kind))

    def fit(self, scores, labels) -> ProbClassifier:
        if self.kind is ClassifierKind.LR:
            return fit_logistic(scores, labels, self.inv_reg_c)
        return fit_gp(scores, labels, self.kernel)


@dataclass(frozen=True)
class ActcConfig:
    strategy: SelectionStrategy = field(default_factory=SelectionStrategy)
    budget: int = 10
    n: int = DEFAULT_N
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    label_mode: LabelMode = LabelMode.HARD
    metric: Metric = Metric.ACCURACY
    scope: Scope = Scope.PER_RELATION
    auto_extent: AutoExtent = AutoExtent.TOP_UP
    seed: int = 12345
    strict_pseudocode: bool = False

    def __post_init__(self):
        for name, typ in (("label_mode", LabelMode), ("metric", Metric), ("scope", Scope), ("auto_extent", AutoExtent)):
            object.__setattr__(self, name, typ(getattr(self, name)))
        if self.budget < 0:
            raise InputError("budget must be >= 0")
        if self.n < 1:
            raise InputError("n must be >= 1")


@dataclass
class ActcResult:
    thresholds: ThresholdMap
    spent: int
    decision_sets: dict[str | None, DecisionSet]
    warnings: list[str] = field(default_factory=list)


# --- decision sets ---------------------------------------------------------


def _fit_or_none(cfg: ClassifierConfig, scores, labels, warnings: list[str], where: str):
    try:
        return cfg.fit(scores, labels)
    except DegenerateLabels:
        return None
    except (ConvergenceError, NumericalError, InputError) as exc:
        warnings.append(f"{where}: classifier fit failed ({exc})")
        log.debug("classifier fit failed for %s: %s", where, exc)
        return None


def build_decision_set(
    relation: str | None,
    gold_scores,
    gold_labels,
    pool_scores,
    n: int,
    classifier: ProbClassifier | None,
    rng: np.random.Generator,
    label_mode: LabelMode | str = LabelMode.HARD,
    auto_extent: AutoExtent | str = AutoExtent.TOP_UP,
) -> DecisionSet:
    """Gold points topped up to ``n`` with auto-labeled pool samples.

    ``classifier`` is the already-resolved model from the fallback ladder, or
    None when no model could be trained.  The result is flagged ``degraded``
    when it had to stay below ``n``.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    gold_scores = np.asarray(gold_scores, dtype=float)
    gold_weights = np.asarray(gold_labels, dtype=float)
    pool_scores = np.asarray(pool_scores, dtype=float)
    gold = DecisionSet(gold_scores, gold_weights, True, relation=relation)
    if gold_scores.size >= n:
        return gold
    if classifier is None or pool_scores.size == 0:
        return replace(gold, degraded=True)
    if AutoExtent(auto_extent) is AutoExtent.ALL:
        picked = pool_scores
    else:
        need = n - gold_scores.size
        take = min(need, pool_scores.size)
        picked = pool_scores[rng.choice(pool_scores.size, size=take, replace=False)]
    auto = auto_label(classifier, picked, label_mode)
    return DecisionSet(
        scores=np.concatenate([gold_scores, auto.scores]),
        weights=np.concatenate([gold_weights, auto.weights]),
        gold=np.concatenate([np.ones(gold_scores.size, bool), np.zeros(auto.scores.size, bool)]),
        relation=relation,
        degraded=gold_scores.size + auto.scores.size < n,
    )


def _threshold(ds: DecisionSet, cfg: ActcConfig) -> float | None:
    if cfg.strict_pseudocode:
        gold_only = DecisionSet(ds.scores[ds.gold], ds.weights[ds.gold], True, relation=ds.relation)
        return _literal_pseudocode_threshold(gold_only) if len(gold_only) else None
    if len(ds) == 0:
        return None
    return estimate_threshold(ds, cfg.metric)


def run_actc(dataset: Dataset, cfg: ActcConfig) -> ActcResult:
    """Full ACTC pass on a labeled dataset whose labels act as the oracle.

    A single generator seeded from ``cfg.seed`` drives both random selection
    and the auto-label pool draws, so ``cfg.seed`` overrides the strategy's
    own seed.
    """
    dataset.require_labels()
    rng = np.random.default_rng(cfg.seed)
    strategy = cfg.strategy
    if strategy.kind is SelectionKind.RANDOM:
        selected = strategy.select(dataset, cfg.budget, rng)
    else:
        selected = strategy.select(dataset, cfg.budget)
    oracle = AnnotationOracle(dataset, budget=min(cfg.budget, len(dataset)))
    gold_labels = oracle.annotate(selected)

    scores = dataset.scores
    is_gold = np.zeros(len(dataset), dtype=bool)
    is_gold[selected] = True
    gold_label_full = np.zeros(len(dataset), dtype=bool)
    gold_label_full[selected] = gold_labels

    warnings: list[str] = []
    clf_cfg = cfg.classifier
    global_clf = None
    global_tried = False

    def global_classifier():
        nonlocal global_clf, global_tried
        if not global_tried:
            global_tried = True
            global_clf = _fit_or_none(clf_cfg, scores[selected], gold_labels, warnings, "global")
        return global_clf

    if cfg.scope is Scope.UNIFORM:
        groups = {None: np.arange(len(dataset))}
    else:
        groups = {r: dataset.indices_by_relation[r] for r in sorted(dataset.relations)}

    per_relation: dict[str, float] = {}
    default = DEFAULT_THRESHOLD
    decision_sets: dict[str | None, DecisionSet] = {}
    for rel, idx in groups.items():
        g_idx = idx[is_gold[idx]]
        pool_idx = idx[~is_gold[idx]]
        g_scores, g_labels = scores[g_idx], gold_label_full[g_idx]
        clf = None
        if g_idx.size < cfg.n:
            if g_labels.any() and not g_labels.all():
                clf = _fit_or_none(clf_cfg, g_scores, g_labels, warnings, str(rel))
            if clf is None and rel is not None:
                clf = global_classifier()
        ds = build_decision_set(
            rel, g_scores, g_labels, scores[pool_idx], cfg.n, clf, rng,
            cfg.label_mode, cfg.auto_extent,
        )
        if ds.degraded:
            warnings.append(f"{rel}: decision set of size {len(ds)} below n={cfg.n}")
        decision_sets[rel] = ds
        tau = _threshold(ds, cfg)
        if tau is None:
            continue
        if rel is None:
            default = tau
        else:
            per_relation[rel] = tau
    return ActcResult(ThresholdMap(per_relation, default), oracle.spent, decision_sets, warnings)


def calibrate_actc(dataset: Dataset, cfg: ActcConfig) -> ThresholdMap:
    return run_actc(dataset, cfg).thresholds


# --- baselines -------------------------------------------------------------


def _gold_arrays(gold) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(gold, Dataset):
        gold.require_labels()
        return gold.scores, gold.labels, gold.relation_ids
    triples = list(gold)
    for t in triples:
        if t.oracle_label is None:
            raise InputError(f"gold triple {t.key} carries no label")
    return (
        np.array([t.score for t in triples], dtype=float),
        np.array([bool(t.oracle_label) for t in triples], dtype=bool),
        np.array([t.relation for t in triples], dtype=object),
    )


def calibrate_local_opt(gold, metric: Metric | str = Metric.ACCURACY, scope: Scope | str = Scope.PER_RELATION) -> ThresholdMap:
    """Per-relation thresholds searched over each relation's gold points only."""
    scores, labels, rels = _gold_arrays(gold)
    if scores.size == 0:
        return ThresholdMap({}, DEFAULT_THRESHOLD)
    if Scope(scope) is Scope.UNIFORM:
        return ThresholdMap({}, estimate_threshold(DecisionSet.hard(scores, labels), metric))
    out = {}
    for r in sorted(set(rels)):
        mask = rels == r
        out[r] = estimate_threshold(DecisionSet.hard(scores[mask], labels[mask], r), metric)
    return ThresholdMap(out, DEFAULT_THRESHOLD)


def _f1(pred: np.ndarray, truth: np.ndarray) -> float:
    tp = np.count_nonzero(pred & truth)
    denom = 2 * tp + np.count_nonzero(pred & ~truth) + np.count_nonzero(~pred & truth)
    return 2 * tp / denom if denom else 0.0


def global_opt_grid(grid_steps: int = DEFAULT_GRID_STEPS) -> np.ndarray:
    if grid_steps < 2:
        raise InputError("grid_steps must be >= 2")
    return np.arange(grid_steps) / (grid_steps - 1)


def calibrate_global_opt(gold, grid_steps: int = DEFAULT_GRID_STEPS) -> ThresholdMap:
    """One sorted pass of per-relation grid search on the global F1.

    The grid lives in the sigmoid view; candidate g corresponds to the raw
    threshold logit(g), and classification is done in raw space so search
    and final map agree exactly.  Relations not yet visited use the 0.5
    default.
    """
    grid_raw = logit(global_opt_grid(grid_steps))
    scores, labels, rels = _gold_arrays(gold)
    if scores.size == 0:
        return ThresholdMap({}, DEFAULT_THRESHOLD)
    taus = np.full(scores.size, DEFAULT_THRESHOLD)
    out = {}
    for r in sorted(set(rels)):
        mask = rels == r
        best_val, best_tau = -1.0, DEFAULT_THRESHOLD
        for tau in grid_raw:
            taus[mask] = tau
            val = _f1(scores >= taus, labels)
            if val > best_val:
                best_val, best_tau = val, float(tau)
        taus[mask] = best_tau
        out[r] = best_tau
    return ThresholdMap(out, DEFAULT_THRESHOLD)


# --- shared entry points ---------------------------------------------------


BASELINES = ("local-acc", "local-f1", "global-f1")


def select_gold(dataset: Dataset, budget: int, seed: int) -> Dataset:
    """Randomly chosen labeled subset used by the baselines."""
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.permutation(len(dataset))[: min(budget, len(dataset))])
    return Dataset(tuple(dataset.triples[i] for i in idx))


def calibrate_baseline(
    dataset: Dataset,
    method: str,
    budget: int,
    seed: int,
    scope: Scope | str = Scope.PER_RELATION,
    grid_steps: int = DEFAULT_GRID_STEPS,
) -> ThresholdMap:
    dataset.require_labels()
    gold = select_gold(dataset, budget, seed)
    if method == "local-acc":
        return calibrate_local_opt(gold, Metric.ACCURACY, scope)
    if method == "local-f1":
        return calibrate_local_opt(gold, Metric.F1, scope)
    if method == "global-f1":
        return calibrate_global_opt(gold, grid_steps)
    raise InputError(f"unknown baseline {method!r}")

