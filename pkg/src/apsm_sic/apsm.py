"""
Kernel APSM filter with parallel hyperslab projections.

Each sample ``(x_j, y_j)`` defines a hyperslab ``{f : |f(x_j) - y_j| <= eps}``.
At every step the current estimate is projected onto the ``q`` most recent
hyperslabs, the projections are combined with convex weights and the
combined displacement is applied with step ``mu`` times the extrapolation
factor ``M``. Real and imaginary parts of the target are tracked by two real
estimates sharing one dictionary.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .kernels import KernelSpec
from .rkhs_dict import Dictionary

# below this squared displacement norm the "f unchanged" branch applies (M = 1)
DENOM_GUARD = 1e-12


@dataclass(frozen=True)
class Hyperslab:
    x: np.ndarray
    y: float
    eps: float

    def __post_init__(self):
        if not self.eps >= 0:
            raise ValueError(f"eps must be >= 0, got {self.eps!r}")

    def contains(self, f_eval: float) -> bool:
        return abs(f_eval - self.y) <= self.eps


def beta_coefficient(f_eval: float, slab: Hyperslab, kxx: float) -> float:
    """Coefficient of ``k(x_j, .)`` in the projection of ``f`` onto ``slab``.

    ``f_eval`` is ``f(x_j)`` and ``kxx`` is ``k(x_j, x_j)``.
    """
    if not kxx > 0:
        raise ValueError(f"k(x, x) must be > 0, got {kxx!r}")
    r = slab.y - f_eval
    if r > slab.eps:
        return (r - slab.eps) / kxx
    if r < -slab.eps:
        return (r + slab.eps) / kxx
    return 0.0


def slab_betas(f_evals, ys, eps: float, kxx) -> np.ndarray:
    """Vectorized :func:`beta_coefficient`; slabs with ``kxx <= 0`` get 0."""
    r = np.asarray(ys, dtype=float) - np.asarray(f_evals, dtype=float)
    kxx = np.asarray(kxx, dtype=float)
    shrink = np.sign(r) * np.maximum(np.abs(r) - eps, 0.0)
    out = np.zeros_like(r)
    ok = kxx > 0
    out[ok] = shrink[ok] / kxx[ok]
    return out


def combine_projections(betas, k_window, weights, mu: float) -> Tuple[np.ndarray, float]:
    """Combine per-slab projections into one relaxed step.

    Parameters
    ----------
    betas : array (m,)
        Projection coefficients, one per slab.
    k_window : array (m, m)
        Kernel matrix among the slab inputs.
    weights : array (m,)
        Convex weights.
    mu : float
        Relaxation in (0, 2].

    Returns
    -------
    step : array (m,)
        Coefficient added to each slab input's kernel section,
        ``mu * M * w_j * beta_j``.
    m_factor : float
        Extrapolation factor ``M >= 1``.
    """
    betas = np.asarray(betas, dtype=float)
    weights = np.asarray(weights, dtype=float)
    wb = weights * betas
    num = float(np.sum(wb * betas * np.diag(k_window)))
    den = float(wb @ k_window @ wb)
    m_factor = num / den if den >= DENOM_GUARD else 1.0
    return mu * m_factor * wb, m_factor


@dataclass(frozen=True)
class ApsmConfig:
    """Hyperparameters of :class:`ComplexApsmFilter`.

    ``weights`` only supports ``"uniform"`` (``1/q`` over the window).
    """

    kernel: KernelSpec
    mu: float = 0.1
    q: int = 1
    eps: float = 1e-3
    alpha: float = 0.1
    weights: str = "uniform"
    jitter: float = 1e-8
    max_atoms: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.mu <= 2:
            raise ValueError(f"mu must be in (0, 2], got {self.mu!r}")
        if int(self.q) != self.q or self.q < 1:
            raise ValueError(f"q must be a positive integer, got {self.q!r}")
        if not self.eps >= 0:
            raise ValueError(f"eps must be >= 0, got {self.eps!r}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha!r}")
        if self.weights != "uniform":
            raise ValueError(f"unsupported weight scheme {self.weights!r}")


@dataclass(frozen=True)
class UpdateReport:
    m_real: float
    m_imag: float
    admitted: bool
    residual_pre: complex
    skipped: bool = False


@dataclass
class _Slab:
    x: np.ndarray
    y_real: float
    y_imag: float
    kxx: float
    atom: Optional[int]  # dictionary index when the input was admitted
    proj: Optional[np.ndarray]  # span coefficients otherwise (length at time of test)


class ComplexApsmFilter:
    """Complex-valued APSM filter over a real-stacked regressor.

    Parameters
    ----------
    config : ApsmConfig
        Hyperparameters.
    dictionary : Dictionary, optional
        Shared dictionary; a fresh one is built from ``config`` if omitted.
    """

    def __init__(self, config: ApsmConfig, dictionary: Optional[Dictionary] = None):
        self.config = config
        if dictionary is None:
            dictionary = Dictionary(config.kernel, config.alpha, jitter=config.jitter,
                                    max_atoms=config.max_atoms)
        self.dict = dictionary
        self.f_real = dictionary.new_estimate()
        self.f_imag = dictionary.new_estimate()
        self.window: collections.deque = collections.deque(maxlen=config.q)
        self.n_steps = 0
        self.n_skipped = 0

    @property
    def kernel(self) -> KernelSpec:
        return self.dict.kernel

    def predict(self, x) -> complex:
        return complex(self.dict.evaluate(self.f_real, x), self.dict.evaluate(self.f_imag, x))

    def predict_many(self, points, batch: int = 2048) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty(points.shape[0], dtype=complex)
        coef = np.stack([self.f_real.coeffs, self.f_imag.coeffs])
        for s in range(0, points.shape[0], batch):
            chunk = points[s:s + batch]
            if len(self.dict) == 0:
                out[s:s + batch] = 0.0
                continue
            vals = coef @ self.dict.kernel.matrix(self.dict.atoms, chunk)
            out[s:s + batch] = vals[0] + 1j * vals[1]
        return out

    def step(self, x, y) -> UpdateReport:
        """Feed one sample and update both estimates."""
        x = np.asarray(x, dtype=float).ravel()
        y = complex(y)
        if not (np.all(np.isfinite(x)) and np.isfinite(y.real) and np.isfinite(y.imag)):
            self.n_skipped += 1
            return UpdateReport(1.0, 1.0, False, complex(np.nan, np.nan), skipped=True)

        res = self.dict.admit_or_project(x)
        kxx = float(self.kernel.diag(x[None, :])[0])
        self.window.append(_Slab(x, y.real, y.imag, kxx, res.index,
                                 None if res.admitted else res.coeffs))

        slabs = list(self.window)
        xw = np.stack([s.x for s in slabs])
        kw = self.kernel.matrix(xw, xw)
        kdiag = np.array([s.kxx for s in slabs])
        np.fill_diagonal(kw, kdiag)
        if len(self.dict):
            k_aw = self.kernel.matrix(self.dict.atoms, xw)
            f_re = self.f_real.coeffs @ k_aw
            f_im = self.f_imag.coeffs @ k_aw
        else:
            f_re = f_im = np.zeros(len(slabs))
        residual = complex(y.real - f_re[-1], y.imag - f_im[-1])

        weights = np.full(len(slabs), 1.0 / len(slabs))
        eps, mu = self.config.eps, self.config.mu
        step_re, m_re = combine_projections(
            slab_betas(f_re, [s.y_real for s in slabs], eps, kdiag), kw, weights, mu)
        step_im, m_im = combine_projections(
            slab_betas(f_im, [s.y_imag for s in slabs], eps, kdiag), kw, weights, mu)

        for s, c_re, c_im in zip(slabs, step_re, step_im):
            if c_re == 0.0 and c_im == 0.0:
                continue
            if s.atom is not None:
                self.f_real.coeffs[s.atom] += c_re
                self.f_imag.coeffs[s.atom] += c_im
            elif s.proj.size:
                n = s.proj.size
                self.f_real.coeffs[:n] += c_re * s.proj
                self.f_imag.coeffs[:n] += c_im * s.proj
        self.n_steps += 1
        return UpdateReport(m_re, m_im, res.admitted, residual)


def apsm_step(filt: ComplexApsmFilter, x, y) -> UpdateReport:
    return filt.step(x, y)


def predict(filt: ComplexApsmFilter, x) -> complex:
    return filt.predict(x)
