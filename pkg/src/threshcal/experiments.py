"""Budget sweeps, repeats and the n-ablation.

Every trial gets its own seed, derived from its cell coordinates rather
than from execution order::

    seed = int.from_bytes(sha256(f"{master}|{label}|{budget}|{n}|{repeat}")[:8], "big")

so cells can run in any order or in parallel, and adding a method never
perturbs the others.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from os import PathLike
from typing import Sequence

from .calibration import (
    BASELINES,
    DEFAULT_GRID_STEPS,
    ActcConfig,
    AutoExtent,
    ClassifierConfig,
    ClassifierKind,
    Metric,
    Scope,
    calibrate_baseline,
    run_actc,
)
from .classifiers import LabelMode
from .core import Dataset, InputError, Metrics, ThresholdMap, evaluate
from .data_io import load_scored_triples
from .kernels import KernelSpec
from .report import Cell, SweepReport
from .selection import SelectionKind, SelectionStrategy

DEFAULT_BUDGETS = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)
DEFAULT_REPEATS = 100
DEFAULT_MASTER_SEED = 12345
THREADS_ENV = "THRESHCAL_THREADS"

_SELECT_TOKENS = {
    "rndm": SelectionKind.RANDOM,
    "dens": SelectionKind.DENSITY,
    "unc": SelectionKind.UNCERTAINTY,
    "dwu": SelectionKind.DWU,
}


@dataclass(frozen=True)
class MethodConfig:
    """One row of a results table.

    ``method`` is ``actc`` or one of the baselines.  Labels of the form
    ``actc-<lr|gp>-<rndm|dens|unc|dwu>[-f1][-uni][-soft][-all][-strict]``
    round-trip through :meth:`parse`.
    """

    label: str
    method: str = "actc"
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    selection: SelectionKind = SelectionKind.RANDOM
    metric: Metric = Metric.ACCURACY
    scope: Scope = Scope.PER_RELATION
    label_mode: LabelMode = LabelMode.HARD
    auto_extent: AutoExtent = AutoExtent.TOP_UP
    strict_pseudocode: bool = False
    density_order: str = "max"
    grid_steps: int = DEFAULT_GRID_STEPS

    @property
    def is_actc(self) -> bool:
        return self.method == "actc"

    @classmethod
    def parse(
        cls,
        label: str,
        kernel: KernelSpec | None = None,
        inv_reg_c: float | None = None,
        grid_steps: int = DEFAULT_GRID_STEPS,
        density_order: str = "max",
    ) -> MethodConfig:
        label = label.strip()
        base = label.removesuffix("-uni")
        if base in BASELINES:
            return cls(label, method=base, metric=Metric.F1 if base.endswith("f1") else Metric.ACCURACY,
                       scope=Scope.UNIFORM if label.endswith("-uni") else Scope.PER_RELATION,
                       grid_steps=grid_steps)
        parts = label.split("-")
        if len(parts) < 3 or parts[0] != "actc":
            raise InputError(f"unknown method label {label!r}")
        try:
            kind = ClassifierKind(parts[1])
            selection = _SELECT_TOKENS[parts[2]]
        except (ValueError, KeyError):
            raise InputError(f"unknown method label {label!r}") from None
        flags = set(parts[3:])
        unknown = flags - {"f1", "uni", "soft", "all", "strict"}
        if unknown:
            raise InputError(f"unknown method modifier(s) {sorted(unknown)} in {label!r}")
        clf_kwargs = {"kind": kind}
        if kernel is not None:
            clf_kwargs["kernel"] = kernel
        if inv_reg_c is not None:
            clf_kwargs["inv_reg_c"] = inv_reg_c
        return cls(
            label,
            classifier=ClassifierConfig(**clf_kwargs),
            selection=selection,
            metric=Metric.F1 if "f1" in flags else Metric.ACCURACY,
            scope=Scope.UNIFORM if "uni" in flags else Scope.PER_RELATION,
            label_mode=LabelMode.SOFT if "soft" in flags else LabelMode.HARD,
            auto_extent=AutoExtent.ALL if "all" in flags else AutoExtent.TOP_UP,
            strict_pseudocode="strict" in flags,
            density_order=density_order,
        )

    def actc_config(self, budget: int, n: int, seed: int) -> ActcConfig:
        return ActcConfig(
            strategy=SelectionStrategy(self.selection, seed, self.density_order),
            budget=budget,
            n=n,
            classifier=self.classifier,
            label_mode=self.label_mode,
            metric=self.metric,
            scope=self.scope,
            auto_extent=self.auto_extent,
            seed=seed,
            strict_pseudocode=self.strict_pseudocode,
        )

    def calibrate(self, dataset: Dataset, budget: int, n: int | None, seed: int) -> tuple[ThresholdMap, int]:
        """Thresholds plus the number of warnings raised while computing them."""
        if self.is_actc:
            if n is None:
                raise InputError("ACTC needs a minimal decision-set size n")
            result = run_actc(dataset, self.actc_config(budget, n, seed))
            return result.thresholds, len(result.warnings)
        return calibrate_baseline(dataset, self.method, budget, seed, self.scope, self.grid_steps), 0


@dataclass(frozen=True)
class SweepConfig:
    budgets: tuple[int, ...] = DEFAULT_BUDGETS
    repeats: int = DEFAULT_REPEATS
    methods: tuple[MethodConfig, ...] = ()
    n_values: tuple[int, ...] = (500,)
    master_seed: int = DEFAULT_MASTER_SEED
    workers: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "budgets", tuple(int(b) for b in self.budgets))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if not self.budgets or any(b < 0 for b in self.budgets):
            raise InputError("budgets must be a non-empty list of non-negative counts")
        if any(a >= b for a, b in zip(self.budgets, self.budgets[1:])):
            raise InputError("budgets must be strictly increasing")
        if self.repeats < 1:
            raise InputError("repeats must be >= 1")
        if any(n < 1 for n in self.n_values):
            raise InputError("n values must be >= 1")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise InputError("method labels must be unique")


def trial_seed(master_seed: int, label: str, budget: int, n: int | None, repeat: int) -> int:
    key = f"{master_seed}|{label}|{budget}|{'-' if n is None else n}|{repeat}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def _as_dataset(x: Dataset | str | PathLike) -> Dataset:
    return x if isinstance(x, Dataset) else load_scored_triples(x)


def run_trial_detailed(calib: Dataset, test: Dataset, method: MethodConfig, budget: int,
                       n: int | None, seed: int) -> tuple[Metrics, int]:
    thresholds, n_warn = method.calibrate(calib, budget, n, seed)
    return evaluate(thresholds, test), n_warn


def run_trial(calib, test, method: MethodConfig, seed: int, budget: int, n: int | None = 500) -> Metrics:
    """Calibrate on ``calib`` (its labels are the oracle) and score on ``test``.

    The test split is only touched by the final evaluation.
    """
    calib, test = _as_dataset(calib), _as_dataset(test)
    calib.require_labels()
    test.require_labels()
    return run_trial_detailed(calib, test, method, budget, n, seed)[0]


def _run_cell(calib: Dataset, test: Dataset, method: MethodConfig, budget: int, n: int | None,
              repeats: int, master_seed: int) -> Cell:
    accs, f1s, warns = [], [], 0
    for rep in range(repeats):
        m, w = run_trial_detailed(calib, test, method, budget, n, trial_seed(master_seed, method.label, budget, n, rep))
        accs.append(m.accuracy)
        f1s.append(m.f1)
        warns += w
    return Cell.aggregate(method.label, budget, n, accs, f1s, warns)


_WORKER_DATA: tuple[Dataset, Dataset] | None = None


def _init_worker(calib: Dataset, test: Dataset) -> None:
    global _WORKER_DATA
    _WORKER_DATA = (calib, test)


def _worker_cell(args) -> Cell:
    calib, test = _WORKER_DATA
    return _run_cell(calib, test, *args)


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        return max(1, value)
    return os.cpu_count() or 1


def _cells(cfg: SweepConfig) -> list[tuple[MethodConfig, int, int | None]]:
    out = []
    for method in cfg.methods:
        for budget in cfg.budgets:
            for n in (cfg.n_values if method.is_actc else (None,)):
                out.append((method, budget, n))
    return out


def run_sweep(cfg: SweepConfig, calib, test) -> SweepReport:
    if not cfg.methods:
        raise InputError("sweep config lists no methods")
    calib, test = _as_dataset(calib), _as_dataset(test)
    calib.require_labels()
    test.require_labels()
    jobs = [(m, b, n, cfg.repeats, cfg.master_seed) for m, b, n in _cells(cfg)]
    workers = min(cfg.workers or default_workers(), len(jobs))
    if workers <= 1:
        cells = [_run_cell(calib, test, *job) for job in jobs]
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(calib, test)) as pool:
            cells = list(pool.map(_worker_cell, jobs))
    # SweepReport orders cells by (method, budget, n) regardless of completion order
    return SweepReport(tuple(cells))


def run_n_ablation(cfg: SweepConfig, calib, test) -> SweepReport:
    if not cfg.n_values:
        raise InputError("n-ablation needs at least one n value")
    methods = tuple(m for m in cfg.methods if m.is_actc) or (MethodConfig.parse("actc-lr-dens"),)
    return run_sweep(replace(cfg, methods=methods), calib, test)


# --- config files ----------------------------------------------------------

_CONFIG_KEYS = {
    "budgets", "repeats", "methods", "n_values", "n", "master_seed", "workers",
    "calibration", "test", "kernel", "length_scale", "nu", "alpha", "jitter",
    "inv_reg_c", "grid_steps", "density_order",
}


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.replace(",", " ").split())


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise InputError(f"config line {line_no}: unknown key {key!r}")
        values[key] = value
    return values


def sweep_config_from_mapping(values: dict[str, str]) -> SweepConfig:
    try:
        kernel_kwargs = {}
        if "kernel" in values:
            kernel_kwargs["kind"] = values["kernel"]
        for key in ("length_scale", "nu", "alpha", "jitter"):
            if key in values:
                kernel_kwargs[key] = float(values[key])
        kernel = KernelSpec(**kernel_kwargs) if kernel_kwargs else None
        inv_reg_c = float(values["inv_reg_c"]) if "inv_reg_c" in values else None
        grid_steps = int(values.get("grid_steps", DEFAULT_GRID_STEPS))
        density_order = values.get("density_order", "max")
        labels = values.get("methods", "actc-lr-rndm, local-acc").replace(",", " ").split()
        methods = tuple(MethodConfig.parse(lbl, kernel, inv_reg_c, grid_steps, density_order) for lbl in labels)
        n_text = values.get("n_values", values.get("n", "500"))
        return SweepConfig(
            budgets=_int_list(values["budgets"]) if "budgets" in values else DEFAULT_BUDGETS,
            repeats=int(values.get("repeats", DEFAULT_REPEATS)),
            methods=methods,
            n_values=_int_list(n_text),
            master_seed=int(values.get("master_seed", DEFAULT_MASTER_SEED)),
            workers=int(values["workers"]) if "workers" in values else None,
        )
    except ValueError as exc:
        raise InputError(f"bad config value: {exc}") from None


def load_sweep_config(path: str | PathLike) -> tuple[SweepConfig, dict[str, str]]:
    """Parse a flat ``key = value`` file; also returns the raw mapping (for file paths)."""
    with open(path, encoding="utf-8") as fh:
        values = parse_config_text(fh.read())
    return sweep_config_from_mapping(values), values


def methods_from_labels(labels: Sequence[str]) -> tuple[MethodConfig, ...]:
    return tuple(MethodConfig.parse(lbl) for lbl in labels)
