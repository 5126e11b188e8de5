"""Score -> probability classifiers used for auto-labeling.

Both classifiers see only the scalar KGE score.  Labels enter as booleans
(True = positive) and are mapped internally to {-1, +1}.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.special import expit, log_expit

from .core import DecisionSet, InputError
from .kernels import KernelSpec, kernel_matrix

DEFAULT_INV_REG_C = 100.0
DEFAULT_GP_CAP = 2000
# relative rounding allowance when comparing successive Laplace objectives
_OBJ_SLACK = 1e-12


class DegenerateLabels(InputError):
    """Training labels contain a single class."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, iterations: int):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


class NumericalError(RuntimeError):
    pass


class LabelMode(str, enum.Enum):
    HARD = "hard"
    SOFT = "soft"


class ProbClassifier(Protocol):
    def predict_proba(self, scores) -> np.ndarray: ...


def _training_arrays(scores, labels, min_points: int = 2) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float).reshape(-1)
    y = np.asarray(labels, dtype=bool).reshape(-1)
    if s.size != y.size:
        raise InputError("scores and labels differ in length")
    if s.size < min_points:
        raise InputError(f"need at least {min_points} training points, got {s.size}")
    if y.all() or not y.any():
        raise DegenerateLabels("training labels contain a single class")
    if not np.all(np.isfinite(s)):
        raise InputError("training scores must be finite")
    return s, np.where(y, 1.0, -1.0)


# --- logistic regression --------------------------------------------------


def logistic_objective(w: float, b: float, scores, signs, inv_reg_c: float) -> float:
    """0.5 * w**2 + C * sum log(1 + exp(-y (w s + b))); the bias is unpenalized."""
    margin = np.asarray(signs) * (w * np.asarray(scores) + b)
    return 0.5 * w * w - inv_reg_c * float(log_expit(margin).sum())


def logistic_gradient(w: float, b: float, scores, signs, inv_reg_c: float) -> np.ndarray:
    s = np.asarray(scores)
    y = np.asarray(signs)
    r = y * expit(-y * (w * s + b))
    return np.array([w - inv_reg_c * np.dot(r, s), -inv_reg_c * r.sum()])


def _logistic_hessian(w, b, s, inv_reg_c) -> np.ndarray:
    p = expit(w * s + b)
    v = inv_reg_c * p * (1.0 - p)
    return np.array([[1.0 + np.dot(v, s * s), np.dot(v, s)], [np.dot(v, s), v.sum()]])


@dataclass(frozen=True)
class LogisticModel:
    weight: float
    bias: float
    inv_reg_c: float = DEFAULT_INV_REG_C
    iterations: int = 0

    def predict_proba(self, scores) -> np.ndarray:
        return expit(self.weight * np.asarray(scores, dtype=float) + self.bias)


def fit_logistic(
    scores: Sequence[float],
    labels: Sequence[bool],
    inv_reg_c: float = DEFAULT_INV_REG_C,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> LogisticModel:
    """L2-regularized logistic regression on a scalar score by damped Newton.

    Raises:
        DegenerateLabels: if only one class is present.
        ConvergenceError: if the gradient inf-norm stays above ``tol``.
    """
    if not inv_reg_c > 0:
        raise InputError("inv_reg_c must be > 0")
    s, y = _training_arrays(scores, labels)
    theta = np.zeros(2)
    f = logistic_objective(theta[0], theta[1], s, y, inv_reg_c)
    for it in range(1, max_iter + 1):
        g = logistic_gradient(theta[0], theta[1], s, y, inv_reg_c)
        if np.max(np.abs(g)) <= tol:
            return LogisticModel(float(theta[0]), float(theta[1]), inv_reg_c, it - 1)
        H = _logistic_hessian(theta[0], theta[1], s, inv_reg_c)
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = -g / np.max(np.abs(np.diag(H)))
        slope = float(np.dot(g, step))
        if not slope < 0:
            step, slope = -g, -float(np.dot(g, g))
        # near the optimum the decrease drops below rounding in f
        slack = 4 * np.finfo(float).eps * max(1.0, abs(f))
        t = 1.0
        while True:
            cand = theta + t * step
            fc = logistic_objective(cand[0], cand[1], s, y, inv_reg_c)
            if fc <= f + 1e-4 * t * slope + slack:
                break
            t *= 0.5
            if t < 1e-12:
                gc = np.max(np.abs(g))
                raise ConvergenceError(f"line search stalled with gradient norm {gc:.3e}", it)
        theta, f = cand, fc
    g = logistic_gradient(theta[0], theta[1], s, y, inv_reg_c)
    if np.max(np.abs(g)) <= tol:
        return LogisticModel(float(theta[0]), float(theta[1]), inv_reg_c, max_iter)
    raise ConvergenceError("logistic regression did not converge", max_iter)


def predict_logistic(model: LogisticModel, score: float) -> float:
    return float(expit(model.weight * score + model.bias))


# --- Gaussian-process classification (Laplace) -----------------------------


@dataclass(frozen=True, eq=False)
class GpPosterior:
    train_scores: np.ndarray
    kernel: KernelSpec
    mode: np.ndarray
    site_precisions: np.ndarray
    grad_loglik: np.ndarray
    chol_b: np.ndarray
    jitter: float
    objective_trace: tuple[float, ...] = field(default=())

    def latent(self, scores) -> tuple[np.ndarray, np.ndarray]:
        """Predictive latent mean and variance at the query scores."""
        xs = np.asarray(scores, dtype=float).reshape(-1)
        ks = kernel_matrix(self.kernel, self.train_scores, xs)
        mean = ks.T @ self.grad_loglik
        sw = np.sqrt(self.site_precisions)
        v = solve_triangular(self.chol_b, sw[:, None] * ks, lower=True)
        var = np.maximum(1.0 - np.einsum("ij,ij->j", v, v), 0.0)
        return mean, var

    def predict_proba(self, scores) -> np.ndarray:
        mean, var = self.latent(scores)
        return expit(mean / np.sqrt(1.0 + math.pi * var / 8.0))


def _neg_log_posterior(a: np.ndarray, f: np.ndarray, y: np.ndarray) -> float:
    # -log p(y|f) + 0.5 f^T K^-1 f with f = K a
    return 0.5 * float(a @ f) - float(log_expit(y * f).sum())


def _psd_kernel(spec: KernelSpec, s: np.ndarray) -> tuple[np.ndarray, float]:
    K0 = kernel_matrix(spec, s)
    jitter = spec.jitter
    while True:
        K = K0 + jitter * np.eye(s.size)
        try:
            cho_factor(K, lower=True)
            return K, jitter
        except np.linalg.LinAlgError:
            jitter = max(jitter * 10.0, 1e-10)
            if jitter > 1e-2:
                raise NumericalError("kernel matrix not positive definite after jitter escalation") from None


def fit_gp(
    scores: Sequence[float],
    labels: Sequence[bool],
    spec: KernelSpec | None = None,
    tol: float = 1e-8,
    max_iter: int = 100,
    cap: int = DEFAULT_GP_CAP,
) -> GpPosterior:
    """Laplace mode of a Bernoulli-logit GP, by stabilized Newton iteration.

    Works with B = I + W^1/2 K W^1/2 so only well-conditioned Cholesky
    factors are needed.  Each Newton step is halved until the negative log
    posterior does not increase.
    """
    spec = spec or KernelSpec()
    s, y = _training_arrays(scores, labels)
    if s.size > cap:
        raise InputError(f"{s.size} training points exceed the GP cap of {cap}")
    K, jitter = _psd_kernel(spec, s)
    t = (y + 1.0) / 2.0
    n = s.size
    eye = np.eye(n)

    f = np.zeros(n)
    a = np.zeros(n)
    obj = _neg_log_posterior(a, f, y)
    trace = [obj]
    for it in range(1, max_iter + 1):
        pi = expit(f)
        grad = t - pi
        if np.max(np.abs(grad - a)) <= tol:
            break
        W = pi * (1.0 - pi)
        sw = np.sqrt(W)
        L = np.linalg.cholesky(eye + sw[:, None] * K * sw[None, :])
        b = W * f + grad
        c = cho_solve((L, True), sw * (K @ b))
        a_new = b - sw * c
        step = a_new - a
        for _ in range(30):
            a_try = a + step
            f_try = K @ a_try
            obj_try = _neg_log_posterior(a_try, f_try, y)
            if obj_try <= obj + _OBJ_SLACK * max(1.0, abs(obj)):
                break
            step *= 0.5
        else:
            raise ConvergenceError("Laplace line search failed to decrease the objective", it)
        a, f, obj = a_try, f_try, obj_try
        trace.append(obj)
    else:
        pi = expit(f)
        if np.max(np.abs((t - pi) - a)) > tol:
            raise ConvergenceError("Laplace mode search did not converge", max_iter)

    pi = expit(f)
    W = pi * (1.0 - pi)
    sw = np.sqrt(W)
    L = np.linalg.cholesky(eye + sw[:, None] * K * sw[None, :])
    return GpPosterior(
        train_scores=s,
        kernel=spec,
        mode=f,
        site_precisions=W,
        grad_loglik=t - pi,
        chol_b=L,
        jitter=jitter,
        objective_trace=tuple(trace),
    )


def predict_gp(posterior: GpPosterior, score: float) -> float:
    return float(posterior.predict_proba([score])[0])


# --- auto-labeling ---------------------------------------------------------


def auto_label(classifier: ProbClassifier, scores, mode: LabelMode | str = LabelMode.HARD) -> DecisionSet:
    """Label scores with a fitted classifier; hard labels use p >= 0.5."""
    mode = LabelMode(mode)
    s = np.asarray(scores, dtype=float).reshape(-1)
    p = classifier.predict_proba(s) if s.size else np.empty(0)
    weights = (p >= 0.5).astype(float) if mode is LabelMode.HARD else p
    return DecisionSet(scores=s, weights=weights, gold=False)
