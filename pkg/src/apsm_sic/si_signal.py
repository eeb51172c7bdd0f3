"""
Regressors, synthetic self-interference and IQ file I/O.

The synthetic channel is a memory polynomial with odd orders 3 and 5, a
linear FIR part, an IQ-imbalance image term and complex AWGN::

    y[n] = sum_m h[m] x[n-m]
         + sum_m sum_{p in (3, 5)} a[m, p] x[n-m] |x[n-m]|^(p-1)
         + c * conj(x[n]) + z[n]
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np


class MalformedFileError(ValueError):
    pass


@dataclass(frozen=True)
class TapConfig:
    """Regressor window ``[x[n+m_pre], ..., x[n], ..., x[n-m_post]]``."""

    m_pre: int = 10
    m_post: int = 10

    def __post_init__(self):
        if self.m_pre < 0 or self.m_post < 0:
            raise ValueError("m_pre and m_post must be >= 0")

    @property
    def memory(self) -> int:
        return self.m_pre + self.m_post + 1

    @property
    def dim(self) -> int:
        return 2 * self.memory


def build_regressors(stream, indices, cfg: TapConfig) -> np.ndarray:
    """Stack the regressors at ``indices`` into an array of shape ``(n, 2M)``.

    Samples outside the stream are zero. Each row holds the real parts of the
    window followed by its imaginary parts.
    """
    x = np.asarray(stream, dtype=complex).ravel()
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= x.size):
        raise IndexError("regressor index out of range")
    padded = np.concatenate([np.zeros(cfg.m_post, complex), x, np.zeros(cfg.m_pre, complex)])
    # window entry i is x[n + m_pre - i], stored at padded[n + m_pre - i + m_post]
    offs = cfg.m_pre + cfg.m_post - np.arange(cfg.memory)
    win = padded[idx[:, None] + offs[None, :]]
    return np.hstack([win.real, win.imag])


def build_regressor(stream, n: int, cfg: TapConfig) -> np.ndarray:
    return build_regressors(stream, [n], cfg)[0]


def _default_nl():
    return np.array([[0.08 - 0.05j, 0.01]])


@dataclass(frozen=True)
class SiChannelModel:
    """Memory-polynomial SI channel.

    Parameters
    ----------
    taps : complex array
        Linear FIR taps ``h[m]``.
    nl_coeffs : complex array, shape (K, 2)
        ``nl_coeffs[m] = (a[m, 3], a[m, 5])``.
    iq_imbalance : complex
        Gain of the ``conj(x[n])`` image.
    noise_std : float
        Noise standard deviation per real dimension.
    seed : int
        Noise seed.
    """

    taps: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.3 - 0.2j, 0.1j]))
    nl_coeffs: np.ndarray = field(default_factory=_default_nl)
    iq_imbalance: complex = 0.05
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        taps = np.atleast_1d(np.asarray(self.taps, dtype=complex))
        nl = np.asarray(self.nl_coeffs, dtype=complex)
        if nl.size == 0:
            nl = np.zeros((0, 2), complex)
        nl = nl.reshape(-1, 2)
        if not np.any(taps != 0):
            raise ValueError("at least one linear tap must be nonzero")
        if not self.noise_std >= 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std!r}")
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "nl_coeffs", nl)
        object.__setattr__(self, "iq_imbalance", complex(self.iq_imbalance))

    def with_(self, **changes) -> "SiChannelModel":
        kw = dict(taps=self.taps, nl_coeffs=self.nl_coeffs, iq_imbalance=self.iq_imbalance,
                  noise_std=self.noise_std, seed=self.seed)
        kw.update(changes)
        return SiChannelModel(**kw)

    # Powers below assume x i.i.d. circular complex Gaussian with E|x|^2 = P,
    # for which E|x|^(2k) = k! P^k.

    def linear_power(self, tx_power: float) -> float:
        return float(np.sum(np.abs(self.taps) ** 2) * tx_power)

    def nonlinear_power(self, tx_power: float) -> float:
        p = tx_power
        a3, a5 = self.nl_coeffs[:, 0], self.nl_coeffs[:, 1]
        return float(np.sum(np.abs(a3) ** 2 * 6 * p ** 3 + np.abs(a5) ** 2 * 120 * p ** 5
                            + 2 * np.real(np.conj(a3) * a5) * 24 * p ** 4))

    def si_power(self, tx_power: float) -> float:
        """Expected noiseless output power, including linear/nonlinear cross terms."""
        p = tx_power
        k = max(self.taps.size, self.nl_coeffs.shape[0])
        h = np.zeros(k, complex)
        h[: self.taps.size] = self.taps
        a = np.zeros((k, 2), complex)
        a[: self.nl_coeffs.shape[0]] = self.nl_coeffs
        a3, a5 = a[:, 0], a[:, 1]
        per_tap = (np.abs(h) ** 2 * p + np.abs(a3) ** 2 * 6 * p ** 3 + np.abs(a5) ** 2 * 120 * p ** 5
                   + 2 * np.real(np.conj(h) * a3) * 2 * p ** 2
                   + 2 * np.real(np.conj(h) * a5) * 6 * p ** 3
                   + 2 * np.real(np.conj(a3) * a5) * 24 * p ** 4)
        return float(np.sum(per_tap) + abs(self.iq_imbalance) ** 2 * p)

    def nonlinear_to_linear_db(self, tx_power: float) -> float:
        return 10 * math.log10(self.nonlinear_power(tx_power) / self.linear_power(tx_power))

    def noise_std_for_snr(self, tx_power: float, snr_db: float) -> float:
        """Per-dimension noise std giving ``snr_db`` relative to the SI power."""
        return math.sqrt(self.si_power(tx_power) / 10 ** (snr_db / 10) / 2)

    @classmethod
    def default(cls, tx_power: float = 1.0, snr_db: float = 40.0, seed: int = 0) -> "SiChannelModel":
        m = cls(seed=seed)
        return m.with_(noise_std=m.noise_std_for_snr(tx_power, snr_db))


def _causal_fir(x, h):
    return np.convolve(x, h)[: x.size] if h.size else np.zeros_like(x)


def si_components(model: SiChannelModel, x):
    """Noiseless ``(linear, nonlinear, iq_image)`` parts of the SI signal."""
    x = np.asarray(x, dtype=complex).ravel()
    lin = _causal_fir(x, model.taps)
    mag2 = np.abs(x) ** 2
    nl = _causal_fir(x * mag2, model.nl_coeffs[:, 0]) + _causal_fir(x * mag2 ** 2, model.nl_coeffs[:, 1])
    iq = model.iq_imbalance * np.conj(x)
    return lin, nl, iq


def generate_si(model: SiChannelModel, x) -> np.ndarray:
    """Received SI for transmit samples ``x``; noise drawn from ``model.seed``."""
    x = np.asarray(x, dtype=complex).ravel()
    if x.size < 1:
        raise ValueError("need at least one sample")
    lin, nl, iq = si_components(model, x)
    y = lin + nl + iq
    if model.noise_std > 0:
        rng = np.random.default_rng(model.seed)
        y = y + model.noise_std * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
    return y


def generate_tx(n: int, power: float = 1.0, seed: int = 0) -> np.ndarray:
    """I.i.d. circular complex Gaussian samples with ``E|x|^2 = power``."""
    rng = np.random.default_rng(seed)
    s = math.sqrt(power / 2)
    return s * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def save_iq(path, samples):
    """Write interleaved little-endian float32 I/Q pairs, no header."""
    s = np.asarray(samples, dtype=np.complex64).ravel()
    out = np.empty(2 * s.size, dtype="<f4")
    out[0::2] = s.real
    out[1::2] = s.imag
    out.tofile(path)


def load_iq(path, fmt: str = "f32-interleaved-le") -> np.ndarray:
    """Read a file written by :func:`save_iq`."""
    if fmt != "f32-interleaved-le":
        raise ValueError(f"unsupported IQ format {fmt!r}")
    nbytes = os.path.getsize(path)
    if nbytes % 8:
        raise MalformedFileError(f"{path}: {nbytes} bytes is not a whole number of I/Q float32 pairs")
    raw = np.fromfile(path, dtype="<f4")
    return (raw[0::2] + 1j * raw[1::2]).astype(np.complex64)
