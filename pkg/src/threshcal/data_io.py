"""Scored-triple TSV I/O, synthetic data, and report writers.

TSV layout, one triple per line::

    head<TAB>relation<TAB>tail<TAB>score<TAB>label

with ``label`` one of ``0``, ``1`` or ``?`` (unlabeled).  Lines starting
with ``#`` are comments.

Synthetic data is drawn with numpy's ``PCG64`` bit generator seeded
directly from ``SyntheticSpec.seed``; Gaussian variates come from
``Generator.normal`` (ziggurat).  Same seed, same numpy major version,
same bytes on every platform.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from os import PathLike
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit, ndtr

from .core import Dataset, InputError, ScoredTriple
from .report import SweepReport

_LABEL_TOKENS = {"1": True, "0": False, "?": None}


class ParseError(InputError):
    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


def parse_scored_lines(lines, source="<input>") -> Dataset:
    triples = []
    seen: dict[tuple[str, str, str], int] = {}
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 5:
            raise ParseError(source, line_no, f"expected 5 tab-separated columns, got {len(cols)}")
        head, relation, tail, score_tok, label_tok = cols
        if not relation:
            raise ParseError(source, line_no, "empty relation")
        try:
            score = float(score_tok)
        except ValueError:
            raise ParseError(source, line_no, f"non-numeric score {score_tok!r}") from None
        if not math.isfinite(score):
            raise ParseError(source, line_no, f"non-finite score {score_tok!r}")
        if label_tok not in _LABEL_TOKENS:
            raise ParseError(source, line_no, f"bad label token {label_tok!r} (expected 0, 1 or ?)")
        key = (head, relation, tail)
        if key in seen:
            raise ParseError(source, line_no, f"duplicate triple, first seen on line {seen[key]}")
        seen[key] = line_no
        triples.append(ScoredTriple(head, relation, tail, score, _LABEL_TOKENS[label_tok]))
    return Dataset(tuple(triples))


def load_scored_triples(path: str | PathLike) -> Dataset:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_scored_lines(fh, source=str(path))


def format_scored_triple(t: ScoredTriple) -> str:
    label = "?" if t.oracle_label is None else ("1" if t.oracle_label else "0")
    return f"{t.head}\t{t.relation}\t{t.tail}\t{t.score!r}\t{label}\n"


def write_scored_triples(dataset: Dataset, path: str | PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.writelines(format_scored_triple(t) for t in dataset)


def sigmoid_view(dataset: Dataset | Sequence[float] | np.ndarray) -> np.ndarray:
    scores = dataset.scores if isinstance(dataset, Dataset) else np.asarray(dataset, dtype=float)
    return expit(scores)


# --- synthetic data -------------------------------------------------------


@dataclass(frozen=True)
class RelationSpec:
    n_pos: int
    n_neg: int
    mu_pos: float
    mu_neg: float
    sigma: float


@dataclass(frozen=True)
class SyntheticSpec:
    n_relations: int
    per_relation: tuple[RelationSpec, ...]
    seed: int = 12345

    def __post_init__(self):
        rels = tuple(r if isinstance(r, RelationSpec) else RelationSpec(*r) for r in self.per_relation)
        object.__setattr__(self, "per_relation", rels)
        if self.n_relations < 1:
            raise InputError("need at least one relation")
        if len(rels) != self.n_relations:
            raise InputError(f"per_relation has {len(rels)} entries, n_relations is {self.n_relations}")
        for r in rels:
            if not r.sigma > 0:
                raise InputError(f"sigma must be > 0, got {r.sigma}")
            if r.n_pos < 0 or r.n_neg < 0:
                raise InputError("counts must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must be an unsigned 64-bit integer")

    @classmethod
    def uniform(cls, n_relations: int, n_pos: int, n_neg: int, mu_pos: float, mu_neg: float,
                sigma: float = 1.0, seed: int = 12345) -> SyntheticSpec:
        rel = RelationSpec(n_pos, n_neg, mu_pos, mu_neg, sigma)
        return cls(n_relations, (rel,) * n_relations, seed)


@dataclass(frozen=True)
class BayesInfo:
    """Per-relation Bayes-optimal threshold and accuracy (equal priors, equal sigma)."""

    thresholds: dict[str, float]
    accuracies: dict[str, float]

    def overall_accuracy(self, weights: dict[str, float] | None = None) -> float:
        if weights is None:
            return float(np.mean(list(self.accuracies.values())))
        total = sum(weights.values())
        return sum(self.accuracies[r] * w for r, w in weights.items()) / total


def relation_name(index: int, n_relations: int) -> str:
    width = max(2, len(str(n_relations - 1)))
    return f"rel_{index:0{width}d}"


def bayes_threshold(mu_pos: float, mu_neg: float) -> float:
    return (mu_pos + mu_neg) / 2.0


def bayes_accuracy(mu_pos: float, mu_neg: float, sigma: float) -> float:
    return float(ndtr(abs(mu_pos - mu_neg) / (2.0 * sigma)))


def generate_synthetic(spec: SyntheticSpec, prefix: str = "") -> tuple[Dataset, BayesInfo]:
    """Draw equal-variance Gaussian scores per relation and class.

    Within a relation positives are drawn first, then negatives; the whole
    dataset is then shuffled with the same generator so file order carries
    no label information.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    triples = []
    thresholds, accuracies = {}, {}
    for i, rs in enumerate(spec.per_relation):
        rel = relation_name(i, spec.n_relations)
        pos = rng.normal(rs.mu_pos, rs.sigma, size=rs.n_pos)
        neg = rng.normal(rs.mu_neg, rs.sigma, size=rs.n_neg)
        for j, s in enumerate(pos):
            triples.append(ScoredTriple(f"{prefix}h{i}p{j}", rel, f"{prefix}t{i}p{j}", float(s), True))
        for j, s in enumerate(neg):
            triples.append(ScoredTriple(f"{prefix}h{i}n{j}", rel, f"{prefix}t{i}n{j}", float(s), False))
        thresholds[rel] = bayes_threshold(rs.mu_pos, rs.mu_neg)
        accuracies[rel] = bayes_accuracy(rs.mu_pos, rs.mu_neg, rs.sigma)
    order = rng.permutation(len(triples))
    return Dataset(tuple(triples[k] for k in order)), BayesInfo(thresholds, accuracies)


def generate_split(spec: SyntheticSpec) -> tuple[Dataset, Dataset, BayesInfo]:
    """A calibration/test pair from one spec; the test half uses an independent stream."""
    calib, info = generate_synthetic(spec, prefix="c")
    test_seed = int(np.random.SeedSequence(spec.seed).spawn(1)[0].generate_state(1, np.uint64)[0])
    test_spec = SyntheticSpec(spec.n_relations, spec.per_relation, test_seed)
    test, _ = generate_synthetic(test_spec, prefix="t")
    return calib, test, info


# --- reports --------------------------------------------------------------

REPORT_HEADER = ("strategy", "budget", "repeats", "acc_mean", "acc_sem", "f1_mean", "f1_sem")
REPORT_EXTRA = ("n", "warnings")


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def report_rows(report: SweepReport) -> list[list[str]]:
    rows = []
    for c in report.cells:
        rows.append([
            c.method, str(c.budget), str(c.repeats),
            _fmt(c.acc_mean), _fmt(c.acc_sem), _fmt(c.f1_mean), _fmt(c.f1_sem),
            "" if c.n is None else str(c.n), str(c.warnings),
        ])
    return rows


def write_report_csv(report: SweepReport, path: str | PathLike) -> None:
    if not report.cells:
        raise InputError("refusing to write an empty report")
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_HEADER + REPORT_EXTRA)
        writer.writerows(report_rows(report))


def render_report_markdown(report: SweepReport) -> str:
    """Methods x (Acc, F1) averaged over budgets, in whole percent."""
    if not report.cells:
        raise InputError("cannot render an empty report")
    means = report.grand_means()
    show_n = len({n for _, n in means}) > 1
    lines = ["| Method | Acc | F1 |", "|---|---:|---:|"]
    for (method, n), (acc, f1) in sorted(means.items(), key=lambda kv: (kv[0][0], kv[0][1] or -1)):
        label = f"{method} (n={n})" if show_n and n is not None else method
        lines.append(f"| {label} | {round(acc * 100):d} | {round(f1 * 100):d} |")
    return "\n".join(lines) + "\n"
