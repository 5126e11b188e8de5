import math

import numpy as np
import pytest

from threshcal.core import Dataset, ScoredTriple

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    """Collect one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(number, name, passed, detail=""):
        status = "SKIP" if passed is None else "PASS" if passed else "FAIL"
        _ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {name}" + (f" ({detail})" if detail else ""))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# --- independent oracles ----------------------------------------------------


def brute_accuracy(scores, weights, tau):
    total = 0.0
    for s, w in zip(scores, weights):
        total += w if s >= tau else 1.0 - w
    return total / len(scores)


def brute_f1(scores, weights, tau):
    tp = fp = fn = 0.0
    for s, w in zip(scores, weights):
        if s >= tau:
            tp += w
            fp += 1.0 - w
        else:
            fn += w
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def brute_best(scores, weights, metric="acc"):
    fn = brute_accuracy if metric == "acc" else brute_f1
    cands = sorted(set(float(s) for s in scores)) + [math.inf]
    return max(fn(scores, weights, c) for c in cands)


def make_dataset(rows):
    """rows: (relation, score, label) with label in {True, False, None}."""
    return Dataset(tuple(
        ScoredTriple(f"h{i}", rel, f"t{i}", float(score), label) for i, (rel, score, label) in enumerate(rows)
    ))


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)
