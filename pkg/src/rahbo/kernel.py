"""Stationary and linear covariance functions with ARD lengthscales.

All inputs are expected in the unit cube; callers map domain points there
before evaluating a kernel. With ``output_scale == 1`` the squared
exponential and Matern-5/2 kernels satisfy ``k(x, x) == 1`` and the linear
kernel is normalised so that ``k(x, x') <= 1`` on the cube.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from rahbo.errors import InputError


class KernelFamily(str, enum.Enum):
    SQUARED_EXPONENTIAL = "squared_exponential"
    MATERN52 = "matern52"
    LINEAR = "linear"


_ALIASES = {
    "se": KernelFamily.SQUARED_EXPONENTIAL,
    "rbf": KernelFamily.SQUARED_EXPONENTIAL,
    "squaredexponential": KernelFamily.SQUARED_EXPONENTIAL,
    "squared_exponential": KernelFamily.SQUARED_EXPONENTIAL,
    "matern52": KernelFamily.MATERN52,
    "matern_52": KernelFamily.MATERN52,
    "linear": KernelFamily.LINEAR,
}


def parse_family(name: str | KernelFamily) -> KernelFamily:
    if isinstance(name, KernelFamily):
        return name
    key = str(name).strip().lower().replace("-", "_").replace(" ", "")
    try:
        return _ALIASES[key]
    except KeyError:
        raise InputError(f"unknown kernel family {name!r}") from None


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, one lengthscale per input dimension, and output scale."""

    family: KernelFamily
    lengthscales: tuple[float, ...]
    output_scale: float = 1.0
    _ls: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "family", parse_family(self.family))
        ls = tuple(float(v) for v in np.atleast_1d(self.lengthscales))
        if len(ls) == 0:
            raise InputError("at least one lengthscale is required")
        if not all(np.isfinite(v) and v > 0 for v in ls):
            raise InputError(f"lengthscales must be strictly positive, got {ls}")
        if not (np.isfinite(self.output_scale) and self.output_scale > 0):
            raise InputError(f"output_scale must be > 0, got {self.output_scale}")
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "output_scale", float(self.output_scale))
        object.__setattr__(self, "_ls", np.asarray(ls))

    @property
    def dim(self) -> int:
        return len(self.lengthscales)

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "lengthscales": list(self.lengthscales),
            "output_scale": self.output_scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(d["family"], tuple(d["lengthscales"]), d.get("output_scale", 1.0))


def _as_points(X, dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        if X.size == 0:
            return X.reshape(0, dim)
        X = X.reshape(-1, dim) if dim == 1 else X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != dim:
        raise InputError(f"expected points of dimension {dim}, got array of shape {X.shape}")
    return X


def cross_kernel(spec: KernelSpec, A, B) -> np.ndarray:
    """Matrix ``K[i, j] = k(A[i], B[j])`` for two point sets."""
    A = _as_points(A, spec.dim)
    B = _as_points(B, spec.dim)
    if spec.family is KernelFamily.LINEAR:
        # <x, x'> <= d on the unit cube
        return spec.output_scale * (A @ B.T) / max(1.0, float(spec.dim))
    diff = (A[:, None, :] - B[None, :, :]) / spec._ls
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    if spec.family is KernelFamily.SQUARED_EXPONENTIAL:
        return spec.output_scale * np.exp(-0.5 * sq)
    r5 = np.sqrt(5.0 * sq)
    return spec.output_scale * (1.0 + r5 + 5.0 * sq / 3.0) * np.exp(-r5)


def kernel_diag(spec: KernelSpec, X) -> np.ndarray:
    """``k(x, x)`` for every row of ``X``."""
    X = _as_points(X, spec.dim)
    if spec.family is KernelFamily.LINEAR:
        return spec.output_scale * (X * X).sum(1) / max(1.0, float(spec.dim))
    return np.full(X.shape[0], spec.output_scale)


def eval_kernel(spec: KernelSpec, x, x_prime) -> float:
    x = np.asarray(x, dtype=float).ravel()
    x_prime = np.asarray(x_prime, dtype=float).ravel()
    if x.size != spec.dim or x_prime.size != spec.dim:
        raise InputError(
            f"points must have dimension {spec.dim}, got {x.size} and {x_prime.size}"
        )
    if spec.family is KernelFamily.LINEAR:
        return spec.output_scale * float(x @ x_prime) / max(1.0, float(spec.dim))
    diff = (x - x_prime) / spec._ls
    sq = float(diff @ diff)
    if spec.family is KernelFamily.SQUARED_EXPONENTIAL:
        return spec.output_scale * float(np.exp(-0.5 * sq))
    r5 = np.sqrt(5.0 * sq)
    return spec.output_scale * float((1.0 + r5 + 5.0 * sq / 3.0) * np.exp(-r5))


def kernel_matrix(spec: KernelSpec, X) -> np.ndarray:
    X = _as_points(X, spec.dim)
    return cross_kernel(spec, X, X)


def kernel_vector(spec: KernelSpec, X, x) -> np.ndarray:
    X = _as_points(X, spec.dim)
    x = np.asarray(x, dtype=float).ravel()
    if x.size != spec.dim:
        raise InputError(f"query point must have dimension {spec.dim}, got {x.size}")
    return cross_kernel(spec, X, x[None, :])[:, 0]
