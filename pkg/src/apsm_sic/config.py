"""
Experiment configuration and its ``key = value`` file format.

Lines are ``key = value``; ``#`` starts a comment; blank lines are ignored.
Lists (``taps``, ``nl3``, ``nl5``, ``sweep_*``) are comma separated and
complex numbers use Python syntax (``0.3-0.2j``).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .apsm import ApsmConfig
from .kernels import KernelSpec
from .si_signal import SiChannelModel, TapConfig


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


FILTERS = ("apsm", "nlms")
KERNELS = ("linear", "gaussian", "hybrid")


@dataclass
class ExperimentConfig:
    filter: str = "apsm"
    kernel: str = "linear"
    xi_gauss: float = 0.0715
    xi_hybrid: float = 0.225
    w_lin: float = 0.1
    w_gauss: float = 0.9
    mu: float = 0.1
    q: int = 1
    eps: float = 0.001
    alpha: float = 0.1
    jitter: float = 1e-8
    max_atoms: Optional[int] = None
    nlms_delta: float = 1e-8

    m_pre: int = 10
    m_post: int = 10

    n_train: int = 10000
    n_test: int = 500000
    realizations: int = 100
    seed: int = 0
    seed_stride: int = 1
    smoothing: int = 100
    workers: int = 1

    # synthetic channel
    tx_power: float = 0.3
    input_scale: float = 1.0
    taps: List[complex] = field(default_factory=lambda: [1.0, 0.3 - 0.2j, 0.1j])
    nl3: List[complex] = field(default_factory=lambda: [0.08 - 0.05j])
    nl5: List[complex] = field(default_factory=lambda: [0.01])
    iq_imbalance: complex = 0.05
    snr_db: float = 40.0

    # recorded data instead of the synthetic channel
    tx_file: Optional[str] = None
    rx_file: Optional[str] = None

    out: Optional[str] = None
    snapshot: Optional[str] = None

    sweep_mu: List[float] = field(default_factory=list)
    sweep_q: List[int] = field(default_factory=list)
    sweep_kernel: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    # -- derived objects ---------------------------------------------------

    @property
    def taps_config(self) -> TapConfig:
        return TapConfig(self.m_pre, self.m_post)

    def kernel_spec(self) -> KernelSpec:
        if self.kernel == "linear":
            return KernelSpec.linear()
        if self.kernel == "gaussian":
            return KernelSpec.gaussian(self.xi_gauss)
        return KernelSpec.hybrid(self.w_lin, self.w_gauss, self.xi_hybrid)

    def apsm_config(self) -> ApsmConfig:
        return ApsmConfig(self.kernel_spec(), mu=self.mu, q=self.q, eps=self.eps,
                          alpha=self.alpha, jitter=self.jitter, max_atoms=self.max_atoms)

    def channel_model(self, seed: int = 0) -> SiChannelModel:
        k = max(len(self.nl3), len(self.nl5))
        nl = np.zeros((k, 2), complex)
        nl[: len(self.nl3), 0] = self.nl3
        nl[: len(self.nl5), 1] = self.nl5
        m = SiChannelModel(taps=np.array(self.taps, complex), nl_coeffs=nl,
                           iq_imbalance=self.iq_imbalance, seed=seed)
        return m.with_(noise_std=m.noise_std_for_snr(self.tx_power, self.snr_db))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # -- validation --------------------------------------------------------

    def validate(self):
        def bad(name, why):
            raise ConfigError(f"{name}: {why} (got {getattr(self, name)!r})")

        if self.filter not in FILTERS:
            bad("filter", f"must be one of {', '.join(FILTERS)}")
        if self.kernel not in KERNELS:
            bad("kernel", f"must be one of {', '.join(KERNELS)}")
        for name in ("xi_gauss", "xi_hybrid", "w_lin", "w_gauss", "jitter", "nlms_delta",
                     "tx_power", "input_scale"):
            if not getattr(self, name) > 0:
                bad(name, "must be > 0")
        if not 0 < self.mu <= 2:
            bad("mu", "must be in (0, 2]")
        for name in ("eps", "alpha"):
            if not getattr(self, name) >= 0:
                bad(name, "must be >= 0")
        for name in ("q", "n_train", "n_test", "realizations", "smoothing", "workers"):
            if getattr(self, name) < 1:
                bad(name, "must be >= 1")
        for name in ("m_pre", "m_post", "seed_stride"):
            if getattr(self, name) < 0:
                bad(name, "must be >= 0")
        if self.max_atoms is not None and self.max_atoms < 1:
            bad("max_atoms", "must be >= 1")
        if not any(t != 0 for t in self.taps):
            bad("taps", "needs at least one nonzero tap")
        if (self.tx_file is None) != (self.rx_file is None):
            bad("tx_file", "tx_file and rx_file must be given together")
        for mu in self.sweep_mu:
            if not 0 < mu <= 2:
                bad("sweep_mu", "entries must be in (0, 2]")
        for q in self.sweep_q:
            if q < 1:
                bad("sweep_q", "entries must be >= 1")
        for k in self.sweep_kernel:
            if k not in KERNELS:
                bad("sweep_kernel", f"entries must be among {', '.join(KERNELS)}")


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}

_INT = {"q", "m_pre", "m_post", "n_train", "n_test", "realizations", "seed", "seed_stride",
        "smoothing", "workers", "max_atoms"}
_STR = {"filter", "kernel", "tx_file", "rx_file", "out", "snapshot"}
_COMPLEX = {"iq_imbalance"}
_COMPLEX_LIST = {"taps", "nl3", "nl5"}
_LISTS = {"sweep_mu": float, "sweep_q": int, "sweep_kernel": str}


def _convert(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _STR:
            return raw
        if key == "max_atoms":
            return None if raw.lower() in ("", "none") else int(raw)
        if key in _INT:
            return int(raw)
        if key in _COMPLEX:
            return complex(raw.replace(" ", ""))
        if key in _COMPLEX_LIST:
            return [complex(v.replace(" ", "")) for v in raw.split(",") if v.strip()]
        if key in _LISTS:
            conv = _LISTS[key]
            return [conv(v.strip()) for v in raw.split(",") if v.strip()]
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} ({exc})") from None


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _convert(key, raw)
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(p)!r}: {exc.strerror or exc}") from None
    return parse_config_text(text, source=str(p))


def _fmt(v) -> str:
    if isinstance(v, list):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, complex):
        return repr(v).strip("()")
    return str(v)


def dump_config(cfg: ExperimentConfig) -> str:
    """Render ``cfg`` in the file format, skipping unset optional fields."""
    lines = []
    for name in _FIELDS:
        v = getattr(cfg, name)
        if v is None or (isinstance(v, list) and not v and name in _LISTS):
            continue
        lines.append(f"{name} = {_fmt(v)}")
    return "\n".join(lines) + "\n"


def sweep_grid(cfg: ExperimentConfig) -> List[Tuple[str, float, int]]:
    """``(kernel, mu, q)`` cells; unset axes fall back to the base values."""
    kernels = cfg.sweep_kernel or [cfg.kernel]
    mus = cfg.sweep_mu or [cfg.mu]
    qs = cfg.sweep_q or [cfg.q]
    return [(k, mu, q) for k in kernels for mu in mus for q in qs]
