"""Decision-threshold calibration for knowledge-graph triple scores."""

from .calibration import (
    ActcConfig,
    AutoExtent,
    ClassifierConfig,
    ClassifierKind,
    Metric,
    Scope,
    build_decision_set,
    calibrate_actc,
    calibrate_global_opt,
    calibrate_local_opt,
    estimate_threshold,
    run_actc,
)
from .classifiers import LabelMode, auto_label, fit_gp, fit_logistic, predict_gp, predict_logistic
from .core import (
    Dataset,
    DecisionSet,
    InputError,
    LabeledPoint,
    Metrics,
    Provenance,
    ScoredTriple,
    ThresholdMap,
    classify,
    compute_metrics,
    evaluate,
    weighted_accuracy,
    weighted_f1,
)
from .data_io import SyntheticSpec, generate_split, generate_synthetic, load_scored_triples, sigmoid_view
from .kernels import KernelKind, KernelSpec, kernel_eval
from .selection import SelectionKind, SelectionStrategy

__version__ = "0.1.0"
