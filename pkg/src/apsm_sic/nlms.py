"""NLMS baseline on the same real-stacked regressor as the kernel filter."""

from __future__ import annotations

import numpy as np


class NlmsFilter:
    """Pair of real NLMS filters, one for the real and one for the imaginary part.

    Parameters
    ----------
    dim : int
        Regressor length.
    mu : float
        Step size in (0, 2].
    delta : float
        Regularizer added to ``x.x`` in the normalization.
    """

    def __init__(self, dim: int, mu: float = 0.1, delta: float = 1e-8):
        if not 0 < mu <= 2:
            raise ValueError(f"mu must be in (0, 2], got {mu!r}")
        if not delta > 0:
            raise ValueError(f"delta must be > 0, got {delta!r}")
        self.dim = int(dim)
        self.mu = float(mu)
        self.delta = float(delta)
        self.w_real = np.zeros(self.dim)
        self.w_imag = np.zeros(self.dim)
        self.n_skipped = 0

    def predict(self, x) -> complex:
        x = self._check(x)
        return complex(self.w_real @ x, self.w_imag @ x)

    def predict_many(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return points @ self.w_real + 1j * (points @ self.w_imag)

    def step(self, x, y) -> complex:
        """Update with one sample and return the a-priori residual.

        Non-finite samples are skipped: the weights are left untouched,
        ``n_skipped`` is incremented and ``nan`` is returned.
        """
        x = self._check(x)
        y = complex(y)
        if not (np.all(np.isfinite(x)) and np.isfinite(y.real) and np.isfinite(y.imag)):
            self.n_skipped += 1
            return complex(np.nan, np.nan)
        e_re = y.real - self.w_real @ x
        e_im = y.imag - self.w_imag @ x
        g = self.mu / (x @ x + self.delta)
        self.w_real += (g * e_re) * x
        self.w_imag += (g * e_im) * x
        return complex(e_re, e_im)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.dim:
            raise ValueError(f"dimension mismatch: expected {self.dim}, got {x.size}")
        return x


def nlms_step(state: NlmsFilter, x, y) -> complex:
    return state.step(x, y)
