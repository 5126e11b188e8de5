"""Aggregated sweep results."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Cell:
    method: str
    budget: int
    n: int | None
    repeats: int
    acc_mean: float
    acc_sem: float | None
    f1_mean: float
    f1_sem: float | None
    warnings: int = 0

    @classmethod
    def aggregate(
        cls,
        method: str,
        budget: int,
        n: int | None,
        accs: Sequence[float],
        f1s: Sequence[float],
        warnings: int = 0,
    ) -> Cell:
        accs = np.asarray(accs, dtype=float)
        f1s = np.asarray(f1s, dtype=float)
        return cls(
            method=method,
            budget=budget,
            n=n,
            repeats=accs.size,
            acc_mean=float(accs.mean()),
            acc_sem=sem(accs),
            f1_mean=float(f1s.mean()),
            f1_sem=sem(f1s),
            warnings=warnings,
        )


def sem(values: np.ndarray) -> float | None:
    """Standard error of the mean (sample sd / sqrt(n)); None below two values."""
    if values.size < 2:
        return None
    return float(values.std(ddof=1) / math.sqrt(values.size))


@dataclass(frozen=True)
class SweepReport:
    cells: tuple[Cell, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ordered = sorted(self.cells, key=lambda c: (c.method, c.budget, -1 if c.n is None else c.n))
        object.__setattr__(self, "cells", tuple(ordered))

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def methods(self) -> list[str]:
        return sorted({c.method for c in self.cells})

    def cell(self, method: str, budget: int, n: int | None = None) -> Cell:
        for c in self.cells:
            if c.method == method and c.budget == budget and (n is None or c.n == n):
                return c
        raise KeyError((method, budget, n))

    def grand_means(self) -> dict[tuple[str, int | None], tuple[float, float]]:
        """(acc, f1) per (method, n), averaged over budgets with equal weight."""
        groups: dict[tuple[str, int | None], list[Cell]] = {}
        for c in self.cells:
            groups.setdefault((c.method, c.n), []).append(c)
        return {
            key: (
                float(np.mean([c.acc_mean for c in cells])),
                float(np.mean([c.f1_mean for c in cells])),
            )
            for key, cells in groups.items()
        }
