"""
Experiment runner: learning curves, test MSE and dictionary sizes.

Each realization ``r`` uses seed ``seed + r * seed_stride``. With the
synthetic channel the transmit samples are drawn from ``2 * seed_r`` and the
receiver noise from ``2 * seed_r + 1``. A realization streams ``n_train``
samples through a fresh filter, then freezes it and scores ``n_test``
following samples. The first ``m_post`` samples of a segment only feed the
regressor window and are never scored; the last ``m_pre`` likewise.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .apsm import ComplexApsmFilter
from .config import ConfigError, ExperimentConfig, sweep_grid
from .nlms import NlmsFilter
from .rkhs_dict import save_snapshot
from .si_signal import build_regressors, generate_si, generate_tx, load_iq

logger = logging.getLogger(__name__)

MSE_FLOOR_DB = -300.0
CURVE_HEADER = ["iteration", "mse_db"]
SUMMARY_HEADER = ["filter", "kernel", "mu", "q", "eps", "alpha", "test_mse_db", "dict_size"]


def mse_db(residuals) -> float:
    """``10 log10(mean |r|^2)``, or ``MSE_FLOOR_DB`` when the mean underflows."""
    r = np.asarray(residuals).ravel()
    if r.size == 0:
        raise ValueError("mse_db needs at least one residual")
    return _db(float(np.mean(np.abs(r) ** 2)))


def _db(power: float) -> float:
    if not power >= 1e-300:
        return MSE_FLOOR_DB
    return 10.0 * math.log10(power)


def smooth_windows(sq_err, window: int) -> np.ndarray:
    """Replace each value by the mean of its non-overlapping window.

    The output has the same length as the input; a trailing partial window
    is averaged over the samples it holds.
    """
    e = np.asarray(sq_err, dtype=float)
    out = np.empty_like(e)
    for s in range(0, e.size, window):
        out[s:s + window] = e[s:s + window].mean()
    return out


@dataclass
class RealizationResult:
    seed: int
    curve: np.ndarray  # smoothed squared error, linear scale, length n_train
    test_mse: float  # linear scale
    dict_size: int
    min_extrapolation: float  # smallest M over all steps, 1.0 for NLMS
    n_skipped: int


@dataclass
class LearningCurve:
    iterations: np.ndarray
    mse_db: np.ndarray
    test_mse_db: float
    dict_size: float
    dict_linear: float  # linear capacity share of dict_size (hybrid accounting)
    dict_gauss: float
    runs: List[RealizationResult]

    @property
    def min_extrapolation(self) -> float:
        return min(r.min_extrapolation for r in self.runs)

    def dict_report(self) -> str:
        if self.dict_gauss and self.dict_linear:
            return f"{self.dict_linear:g} + {self.dict_gauss:g}"
        return f"{self.dict_size:g}"


def realization_seed(cfg: ExperimentConfig, r: int) -> int:
    return cfg.seed + r * cfg.seed_stride


def segment_length(cfg: ExperimentConfig) -> int:
    return cfg.m_post + cfg.n_train + cfg.n_test + cfg.m_pre


def realization_data(cfg: ExperimentConfig, r: int) -> Tuple[np.ndarray, np.ndarray]:
    """Transmit and received samples for realization ``r``."""
    n = segment_length(cfg)
    if cfg.tx_file is not None:
        tx = load_iq(cfg.tx_file).astype(complex)
        rx = load_iq(cfg.rx_file).astype(complex)
        if tx.size != rx.size:
            raise ConfigError(f"rx_file: {rx.size} samples but tx_file has {tx.size}")
        need = n * cfg.realizations
        if tx.size < need:
            raise ConfigError(f"tx_file: {tx.size} samples, {cfg.realizations} realizations "
                              f"of {n} samples need {need}")
        return tx[r * n:(r + 1) * n], rx[r * n:(r + 1) * n]
    s = realization_seed(cfg, r)
    tx = generate_tx(n, cfg.tx_power, seed=2 * s)
    rx = generate_si(cfg.channel_model(seed=2 * s + 1), tx)
    return tx, rx


def make_filter(cfg: ExperimentConfig):
    if cfg.filter == "nlms":
        return NlmsFilter(cfg.taps_config.dim, mu=cfg.mu, delta=cfg.nlms_delta)
    return ComplexApsmFilter(cfg.apsm_config())


def _dict_size(filt) -> int:
    return len(filt.dict) if isinstance(filt, ComplexApsmFilter) else 0


def run_realization(cfg: ExperimentConfig, r: int, keep_filter: bool = False):
    tx, rx = realization_data(cfg, r)
    taps = cfg.taps_config
    train_idx = np.arange(cfg.m_post, cfg.m_post + cfg.n_train)
    test_idx = np.arange(cfg.m_post + cfg.n_train, cfg.m_post + cfg.n_train + cfg.n_test)
    x_train = cfg.input_scale * build_regressors(tx, train_idx, taps)
    y_train = rx[train_idx]

    filt = make_filter(cfg)
    sq = np.empty(cfg.n_train)
    m_min = 1.0
    if isinstance(filt, ComplexApsmFilter):
        for i in range(cfg.n_train):
            rep = filt.step(x_train[i], y_train[i])
            sq[i] = abs(rep.residual_pre) ** 2
            if not rep.skipped:
                m_min = min(m_min, rep.m_real, rep.m_imag)
    else:
        for i in range(cfg.n_train):
            sq[i] = abs(filt.step(x_train[i], y_train[i])) ** 2
    # skipped samples carry nan; score the rest
    if np.isnan(sq).any():
        sq = np.where(np.isnan(sq), np.nanmean(sq) if np.isfinite(sq).any() else 0.0, sq)

    test_se = 0.0
    for s in range(0, test_idx.size, 50000):
        idx = test_idx[s:s + 50000]
        x_test = cfg.input_scale * build_regressors(tx, idx, taps)
        test_se += float(np.sum(np.abs(rx[idx] - filt.predict_many(x_test)) ** 2))

    res = RealizationResult(
        seed=realization_seed(cfg, r),
        curve=smooth_windows(sq, cfg.smoothing),
        test_mse=test_se / test_idx.size,
        dict_size=_dict_size(filt),
        min_extrapolation=m_min,
        n_skipped=filt.n_skipped,
    )
    return (res, filt) if keep_filter else res


def _run_one(args):
    cfg, r = args
    return run_realization(cfg, r)


def average_runs(cfg: ExperimentConfig, runs: List[RealizationResult]) -> LearningCurve:
    """Uniform (linear-scale) average of per-realization results."""
    curve = np.mean([r.curve for r in runs], axis=0)
    dict_size = float(np.mean([r.dict_size for r in runs]))
    if cfg.filter == "apsm" and cfg.kernel == "hybrid":
        dim = cfg.taps_config.dim
        lin = float(np.mean([min(r.dict_size, dim) for r in runs]))
        gauss = dict_size - lin
    elif cfg.filter == "apsm" and cfg.kernel == "linear":
        lin, gauss = dict_size, 0.0
    elif cfg.filter == "apsm":
        lin, gauss = 0.0, dict_size
    else:
        lin = gauss = 0.0
    return LearningCurve(
        iterations=np.arange(1, cfg.n_train + 1),
        mse_db=np.array([_db(v) for v in curve]),
        test_mse_db=_db(float(np.mean([r.test_mse for r in runs]))),
        dict_size=dict_size,
        dict_linear=lin,
        dict_gauss=gauss,
        runs=runs,
    )


def run_experiment(cfg: ExperimentConfig) -> LearningCurve:
    """Run every realization and average them uniformly."""
    jobs = [(cfg, r) for r in range(cfg.realizations)]
    if cfg.workers > 1 and cfg.realizations > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, cfg.realizations)) as ex:
            runs = list(ex.map(_run_one, jobs))
    else:
        runs = []
        for job in jobs[:-1]:
            runs.append(_run_one(job))
        if cfg.snapshot:
            last, filt = run_realization(cfg, cfg.realizations - 1, keep_filter=True)
            runs.append(last)
            if isinstance(filt, ComplexApsmFilter):
                save_snapshot(cfg.snapshot, filt.dict, {"real": filt.f_real, "imag": filt.f_imag})
        else:
            runs.append(_run_one(jobs[-1]))
    return average_runs(cfg, runs)


def _num(v: float) -> str:
    return f"{v:.6f}"


def write_curve_csv(path, curve: LearningCurve):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for it, v in zip(curve.iterations, curve.mse_db):
            w.writerow([int(it), _num(v)])


def summary_row(cfg: ExperimentConfig, curve: LearningCurve) -> List[str]:
    kernel = cfg.kernel if cfg.filter == "apsm" else "none"
    dict_size = _num(curve.dict_size) if cfg.filter == "apsm" else ""
    return [cfg.filter, kernel, f"{cfg.mu:g}", str(cfg.q), f"{cfg.eps:g}", f"{cfg.alpha:g}",
            _num(curve.test_mse_db), dict_size]


def write_summary_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerows(rows)


def cell_name(cfg: ExperimentConfig) -> str:
    kernel = cfg.kernel if cfg.filter == "apsm" else "none"
    return f"{cfg.filter}_{kernel}_mu{cfg.mu:g}_q{cfg.q}"


def run_sweep(cfg: ExperimentConfig, out_dir) -> List[Path]:
    """One experiment per ``(kernel, mu, q)`` cell plus ``summary.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows, files = [], []
    for kernel, mu, q in sweep_grid(cfg):
        cell = cfg.replace(kernel=kernel, mu=mu, q=q, snapshot=None)
        curve = run_experiment(cell)
        path = out / f"{cell_name(cell)}.csv"
        write_curve_csv(path, curve)
        rows.append(summary_row(cell, curve))
        files.append(path)
        logger.info("%s: test MSE %.2f dB, dictionary %s", cell_name(cell), curve.test_mse_db,
                    curve.dict_report())
    summary = out / "summary.csv"
    write_summary_csv(summary, rows)
    files.append(summary)
    return files
