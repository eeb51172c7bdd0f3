"""
Sparsified kernel dictionary with approximate-linear-dependency admission.

A :class:`Dictionary` stores the atoms ``x_b`` whose kernel sections span the
subspace in which every estimate lives, together with the Gram matrix and the
inverse of the jittered Gram matrix ``(G + jitter * I)^-1``. The inverse is
grown by a block (Schur complement) update on each admission and recomputed
from scratch every ``reinvert_every`` admissions.

Estimates (:class:`FunctionEstimate`) are coefficient vectors over the atoms.
Estimates registered with a dictionary grow a zero coefficient whenever an
atom is admitted, so all of them stay aligned with the atom list.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .kernels import KernelSpec

logger = logging.getLogger(__name__)

# reinvert early once the rank-one updates have drifted this far from the identity
DRIFT_TOL = 1e-8


@dataclass
class FunctionEstimate:
    """Function ``f(.) = sum_b coeffs[b] * k(atoms[b], .)``."""

    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float).copy()

    def __len__(self):
        return self.coeffs.size


@dataclass(frozen=True)
class AdmitResult:
    """Outcome of an admission test.

    ``coeffs`` always represents the candidate's kernel section in the atom
    basis after the call: the unit vector on the new atom when admitted, the
    projection coefficients onto the span otherwise.
    """

    admitted: bool
    index: Optional[int]
    coeffs: np.ndarray
    distance: float

    @property
    def proj_coeffs(self) -> np.ndarray:
        return self.coeffs


class Dictionary:
    """Shared atom dictionary.

    Parameters
    ----------
    kernel : KernelSpec
        Kernel whose Gram matrix drives the novelty test.
    alpha : float
        ALD threshold. A candidate is admitted when its distance to the
        current span is ``>= alpha``; ``alpha = 0`` admits everything.
    jitter : float
        Diagonal regularization added before inversion.
    max_atoms : int, optional
        Hard cap on the dictionary size.
    reinvert_every : int
        Number of admissions between full re-inversions of the Gram matrix.
    """

    def __init__(self, kernel: KernelSpec, alpha: float, jitter: float = 1e-8,
                 max_atoms: Optional[int] = None, reinvert_every: int = 512):
        if not alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {alpha!r}")
        if not jitter > 0:
            raise ValueError(f"jitter must be > 0, got {jitter!r}")
        if max_atoms is not None and max_atoms < 1:
            raise ValueError(f"max_atoms must be a positive integer, got {max_atoms!r}")
        self.kernel = kernel
        self.alpha = float(alpha)
        self.jitter = float(jitter)
        self.max_atoms = max_atoms
        self.reinvert_every = int(reinvert_every)
        self.n_capped = 0  # candidates refused only because max_atoms was reached
        self._dim: Optional[int] = None
        self._n = 0
        self._cap = 0
        self._atoms = np.zeros((0, 0))
        self._gram = np.zeros((0, 0))
        self._ginv = np.zeros((0, 0))
        self._since_reinvert = 0
        self._drift_floor = 0.0
        self._estimates: List[FunctionEstimate] = []

    # -- read access -------------------------------------------------------

    def __len__(self):
        return self._n

    @property
    def size(self) -> int:
        return self._n

    @property
    def dim(self) -> Optional[int]:
        return self._dim

    @property
    def atoms(self) -> np.ndarray:
        return self._atoms[: self._n]

    @property
    def gram(self) -> np.ndarray:
        return self._gram[: self._n, : self._n]

    @property
    def gram_inv(self) -> np.ndarray:
        return self._ginv[: self._n, : self._n]

    # -- estimates ---------------------------------------------------------

    def register(self, estimate: FunctionEstimate) -> FunctionEstimate:
        if len(estimate) != self._n:
            raise ValueError(f"estimate has {len(estimate)} coefficients, dictionary has {self._n} atoms")
        self._estimates.append(estimate)
        return estimate

    def new_estimate(self) -> FunctionEstimate:
        """Zero function, registered so it tracks future admissions."""
        return self.register(FunctionEstimate(np.zeros(self._n)))

    def kernel_vector(self, x) -> np.ndarray:
        """``k[b] = k(atoms[b], x)``."""
        x = self._check_point(x)
        if self._n == 0:
            return np.zeros(0)
        return self.kernel.matrix(self.atoms, x[None, :])[:, 0]

    def evaluate(self, f: FunctionEstimate, u) -> float:
        return eval_estimate(self, f, u)

    def evaluate_many(self, f: FunctionEstimate, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if len(f) != self._n:
            raise ValueError(f"estimate has {len(f)} coefficients, dictionary has {self._n} atoms")
        if self._n == 0:
            return np.zeros(points.shape[0])
        return f.coeffs @ self.kernel.matrix(self.atoms, points)

    # -- novelty test ------------------------------------------------------

    def ald_distance(self, x) -> Tuple[float, np.ndarray]:
        """Distance of ``k(x, .)`` to the span of the atoms.

        Returns ``(dist, proj_coeffs)`` where ``proj_coeffs`` are the
        coefficients of the projection in the atom basis.
        """
        x = self._check_point(x)
        kxx = float(self.kernel.diag(x[None, :])[0])
        if self._n == 0:
            return float(np.sqrt(max(kxx, 0.0))), np.zeros(0)
        k = self.kernel_vector(x)
        a = self.gram_inv @ k
        d2 = kxx - k @ a
        return float(np.sqrt(max(d2, 0.0))), a

    def admit_or_project(self, x) -> AdmitResult:
        """Admit ``x`` as a new atom if it is novel, else return its projection."""
        x = self._check_point(x)
        kxx = float(self.kernel.diag(x[None, :])[0])
        if self._n == 0:
            k = np.zeros(0)
            a = np.zeros(0)
            d2 = kxx
        else:
            k = self.kernel_vector(x)
            a = self.gram_inv @ k
            d2 = kxx - k @ a
        dist = float(np.sqrt(max(d2, 0.0)))
        if dist < self.alpha:
            return AdmitResult(False, None, a, dist)
        if self.max_atoms is not None and self._n >= self.max_atoms:
            self.n_capped += 1
            if self.n_capped == 1 or self.n_capped % 1000 == 0:
                logger.warning("dictionary full at %d atoms; %d novel candidates projected",
                               self._n, self.n_capped)
            return AdmitResult(False, None, a, dist)
        idx = self._append(x, k, a, kxx, d2)
        unit = np.zeros(self._n)
        unit[idx] = 1.0
        return AdmitResult(True, idx, unit, dist)

    # -- internals ---------------------------------------------------------

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if self._dim is None:
            if x.size < 1:
                raise ValueError("empty input vector")
            return x
        if x.size != self._dim:
            raise ValueError(f"dimension mismatch: expected {self._dim}, got {x.size}")
        return x

    def _grow(self, dim: int):
        cap = max(16, 2 * self._cap)
        atoms = np.zeros((cap, dim))
        gram = np.zeros((cap, cap))
        ginv = np.zeros((cap, cap))
        n = self._n
        if n:
            atoms[:n] = self._atoms[:n]
            gram[:n, :n] = self._gram[:n, :n]
            ginv[:n, :n] = self._ginv[:n, :n]
        self._atoms, self._gram, self._ginv, self._cap = atoms, gram, ginv, cap

    def _append(self, x, k, a, kxx, d2) -> int:
        if self._dim is None:
            self._dim = x.size
        if self._n == self._cap:
            self._grow(self._dim)
        n = self._n
        self._atoms[n] = x
        self._gram[n, :n] = k
        self._gram[:n, n] = k
        self._gram[n, n] = kxx
        # Schur complement of the jittered Gram; d2 already excludes the jitter term
        s = max(d2, 0.0) + self.jitter
        p = self._ginv[:n, :n]
        p += np.outer(a, a) / s
        self._ginv[:n, n] = -a / s
        self._ginv[n, :n] = -a / s
        self._ginv[n, n] = 1.0 / s
        self._n = n + 1
        self._since_reinvert += 1
        if (self._since_reinvert >= self.reinvert_every
                or self._column_drift() > max(DRIFT_TOL, 100.0 * self._drift_floor)):
            self.reinvert()
        for est in self._estimates:
            est.coeffs = np.append(est.coeffs, 0.0)
        return n

    def _column_drift(self) -> float:
        # residual of (G + jitter I) times the newest inverse column against e_n
        n = self._n
        col = self._ginv[:n, n - 1]
        r = self._gram[:n, :n] @ col + self.jitter * col
        r[n - 1] -= 1.0
        return float(np.abs(r).max())

    def reinvert(self):
        """Recompute the inverse of the jittered Gram matrix from scratch."""
        n = self._n
        if n:
            g = self.gram + self.jitter * np.eye(n)
            inv = np.linalg.inv(g)
            self._ginv[:n, :n] = 0.5 * (inv + inv.T)
            # a fresh inverse of an ill-conditioned Gram is itself only this accurate
            self._drift_floor = self._column_drift()
        self._since_reinvert = 0


def ald_distance(dictionary: Dictionary, x) -> Tuple[float, np.ndarray]:
    return dictionary.ald_distance(x)


def admit_or_project(dictionary: Dictionary, x) -> AdmitResult:
    return dictionary.admit_or_project(x)


def eval_estimate(dictionary: Dictionary, f: FunctionEstimate, u) -> float:
    """``sum_b f.coeffs[b] * k(atoms[b], u)``."""
    if len(f) != len(dictionary):
        raise ValueError(f"estimate has {len(f)} coefficients, dictionary has {len(dictionary)} atoms")
    if len(dictionary) == 0:
        dictionary._check_point(u)
        return 0.0
    return float(f.coeffs @ dictionary.kernel_vector(u))


def save_snapshot(path, dictionary: Dictionary, estimates: Dict[str, FunctionEstimate]):
    """Write atoms and coefficients as CSV, one row per atom.

    Columns: ``atom``, one column per named estimate, then ``x0 .. x{L-1}``.
    """
    names = list(estimates)
    for name in names:
        if len(estimates[name]) != len(dictionary):
            raise ValueError(f"estimate {name!r} is not aligned with the dictionary")
    dim = dictionary.dim or 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["atom", *names, *(f"x{i}" for i in range(dim))])
        for b in range(len(dictionary)):
            w.writerow([b, *(repr(float(estimates[n].coeffs[b])) for n in names),
                        *(repr(float(v)) for v in dictionary.atoms[b])])


def load_snapshot(path) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    """Read a snapshot written by :func:`save_snapshot`.

    Returns ``(atoms, coeffs_by_name)``; the atom count is ``len(atoms)``.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    names = [h for h in header[1:] if not (h.startswith("x") and h[1:].isdigit())]
    n_coef = len(names)
    data = np.array([[float(v) for v in r[1:]] for r in body]).reshape(len(body), -1)
    coeffs = {name: data[:, i].copy() for i, name in enumerate(names)}
    return data[:, n_coef:].copy(), coeffs
