"""Stationary 1-D covariance functions: RBF, Matern, RationalQuadratic.

All kernels are normalized so that k(x, x) = 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, kv

from .core import InputError

_CLOSED_FORM_NU = (0.5, 1.5, 2.5)


class KernelKind(str, enum.Enum):
    RBF = "rbf"
    MATERN = "matern"
    RQ = "rq"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind = KernelKind.MATERN
    length_scale: float = 0.1
    nu: float = 1.5
    alpha: float = 1.0
    jitter: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if not self.length_scale > 0:
            raise InputError(f"length_scale must be > 0, got {self.length_scale}")
        if not self.nu > 0:
            raise InputError(f"nu must be > 0, got {self.nu}")
        if not self.alpha > 0:
            raise InputError(f"alpha must be > 0, got {self.alpha}")
        if not self.jitter >= 0:
            raise InputError(f"jitter must be >= 0, got {self.jitter}")


def matern_bessel(d, length_scale: float, nu: float) -> np.ndarray:
    """Matern covariance through the modified Bessel function of the second kind.

    k(d) = 2**(1 - nu) / Gamma(nu) * z**nu * K_nu(z),  z = sqrt(2 nu) d / l,
    with the removable singularity k(0) = 1.
    """
    d = np.abs(np.asarray(d, dtype=float))
    z = math.sqrt(2.0 * nu) * d / length_scale
    out = np.ones_like(z)
    nz = z > 0
    zz = z[nz]
    with np.errstate(over="ignore", invalid="ignore"):
        val = (2.0 ** (1.0 - nu) / gamma(nu)) * zz**nu * kv(nu, zz)
    # K_nu overflows only for z so small that k(z) == 1 to double precision
    val = np.where(np.isfinite(val), val, 1.0)
    out[nz] = val
    return out


def matern_closed_form(d, length_scale: float, nu: float) -> np.ndarray:
    if nu not in _CLOSED_FORM_NU:
        raise InputError(f"no closed form for nu={nu}; use one of {_CLOSED_FORM_NU}")
    d = np.abs(np.asarray(d, dtype=float))
    if nu == 0.5:
        return np.exp(-d / length_scale)
    if nu == 1.5:
        z = math.sqrt(3.0) * d / length_scale
        return (1.0 + z) * np.exp(-z)
    z = math.sqrt(5.0) * d / length_scale
    return (1.0 + z + z * z / 3.0) * np.exp(-z)


def _stationary(spec: KernelSpec, d: np.ndarray) -> np.ndarray:
    l = spec.length_scale
    if spec.kind is KernelKind.RBF:
        return np.exp(-(d * d) / (2.0 * l * l))
    if spec.kind is KernelKind.RQ:
        return (1.0 + (d * d) / (2.0 * spec.alpha * l * l)) ** (-spec.alpha)
    if spec.nu in _CLOSED_FORM_NU:
        return matern_closed_form(d, l, spec.nu)
    return matern_bessel(d, l, spec.nu)


def kernel_eval(spec: KernelSpec, x: float, y: float) -> float:
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InputError("kernel inputs must be finite")
    return float(_stationary(spec, np.array([abs(x - y)]))[0])


def kernel_matrix(spec: KernelSpec, x, y=None) -> np.ndarray:
    """Cross-covariance between 1-D point sets (no jitter)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = x if y is None else np.asarray(y, dtype=float).reshape(-1)
    d = np.abs(x[:, None] - y[None, :])
    return _stationary(spec, d)
