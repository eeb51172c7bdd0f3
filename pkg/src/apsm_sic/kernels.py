"""
Kernel functions on real input vectors.

Three kernels are supported: linear ``u.v``, Gaussian
``exp(-xi * ||u - v||^2)`` and the hybrid weighted sum
``w_lin * linear + w_gauss * gaussian``. The hybrid kernel reproduces the
sum space of the linear and Gaussian RKHSs; its weighted inner product is
never formed explicitly, everything goes through kernel evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist


class KernelKind(str, Enum):
    LINEAR = "linear"
    GAUSSIAN = "gaussian"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class KernelSpec:
    """Closed description of a kernel.

    Parameters
    ----------
    kind : KernelKind
        Linear, Gaussian or hybrid.
    xi : float, optional
        Gaussian width. Required for Gaussian and hybrid kernels.
    w_lin, w_gauss : float, optional
        Weights of the linear and Gaussian parts. Hybrid only.
    """

    kind: KernelKind
    xi: Optional[float] = None
    w_lin: Optional[float] = None
    w_gauss: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind is KernelKind.LINEAR:
            if self.xi is not None or self.w_lin is not None or self.w_gauss is not None:
                raise ValueError("linear kernel takes no parameters")
            return
        if self.xi is None or not self.xi > 0:
            raise ValueError(f"xi must be > 0, got {self.xi!r}")
        if self.kind is KernelKind.GAUSSIAN:
            if self.w_lin is not None or self.w_gauss is not None:
                raise ValueError("weights are only valid for the hybrid kernel")
            return
        if self.w_lin is None or not self.w_lin > 0:
            raise ValueError(f"w_lin must be > 0, got {self.w_lin!r}")
        if self.w_gauss is None or not self.w_gauss > 0:
            raise ValueError(f"w_gauss must be > 0, got {self.w_gauss!r}")

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(KernelKind.LINEAR)

    @classmethod
    def gaussian(cls, xi: float) -> "KernelSpec":
        return cls(KernelKind.GAUSSIAN, xi=xi)

    @classmethod
    def hybrid(cls, w_lin: float, w_gauss: float, xi: float) -> "KernelSpec":
        return cls(KernelKind.HYBRID, xi=xi, w_lin=w_lin, w_gauss=w_gauss)

    @property
    def linear_part(self) -> Optional["KernelSpec"]:
        """Linear component (unweighted), or None for a pure Gaussian."""
        if self.kind is KernelKind.GAUSSIAN:
            return None
        return KernelSpec.linear()

    @property
    def gaussian_part(self) -> Optional["KernelSpec"]:
        """Gaussian component (unweighted), or None for a pure linear kernel."""
        if self.kind is KernelKind.LINEAR:
            return None
        return KernelSpec.gaussian(self.xi)

    def __call__(self, u, v) -> float:
        return kernel_eval(self, u, v)

    def matrix(self, a, b) -> np.ndarray:
        """Cross-kernel matrix ``K[i, j] = k(a[i], b[j])`` for row-stacked points."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.ndim != 2 or b.ndim != 2:
            raise ValueError("points must be 2-d arrays (n_points, dim)")
        if a.shape[1] != b.shape[1]:
            raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
        if self.kind is KernelKind.LINEAR:
            return a @ b.T
        if a.shape[0] == 0 or b.shape[0] == 0:
            return np.zeros((a.shape[0], b.shape[0]))
        # direct squared distances; the |a|^2 + |b|^2 - 2ab expansion cancels badly
        gauss = np.exp(-self.xi * cdist(a, b, "sqeuclidean"))
        if self.kind is KernelKind.GAUSSIAN:
            return gauss
        return self.w_lin * (a @ b.T) + self.w_gauss * gauss

    def diag(self, a) -> np.ndarray:
        """``k(a[i], a[i])`` for each row of ``a``."""
        a = np.asarray(a, dtype=float)
        if a.ndim != 2:
            raise ValueError("points must be a 2-d array (n_points, dim)")
        if self.kind is KernelKind.GAUSSIAN:
            return np.ones(a.shape[0])
        sq = np.einsum("ij,ij->i", a, a)
        if self.kind is KernelKind.LINEAR:
            return sq
        return self.w_lin * sq + self.w_gauss

    def describe(self) -> str:
        if self.kind is KernelKind.LINEAR:
            return "linear"
        if self.kind is KernelKind.GAUSSIAN:
            return f"gaussian(xi={self.xi:g})"
        return f"hybrid(w_lin={self.w_lin:g},w_gauss={self.w_gauss:g},xi={self.xi:g})"


def kernel_eval(spec: KernelSpec, u, v) -> float:
    """Evaluate ``spec`` at the pair ``(u, v)``."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.size < 1 or u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    if spec.kind is KernelKind.LINEAR:
        return float(u @ v)
    d = u - v
    gauss = float(np.exp(-spec.xi * (d @ d)))
    if spec.kind is KernelKind.GAUSSIAN:
        return gauss
    return spec.w_lin * float(u @ v) + spec.w_gauss * gauss


def gram_matrix(spec: KernelSpec, points) -> np.ndarray:
    """Symmetric Gram matrix of ``points`` (shape ``(B, L)``)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    g = spec.matrix(points, points)
    # cdist is symmetric already; this removes last-bit asymmetry from the matmul
    return 0.5 * (g + g.T)
