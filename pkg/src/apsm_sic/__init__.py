"""Kernel APSM adaptive filtering for digital self-interference cancellation."""

from .apsm import ApsmConfig, ComplexApsmFilter, Hyperslab, UpdateReport, beta_coefficient
from .config import ConfigError, ExperimentConfig, load_config
from .harness import LearningCurve, mse_db, run_experiment
from .kernels import KernelKind, KernelSpec, gram_matrix, kernel_eval
from .nlms import NlmsFilter
from .rkhs_dict import AdmitResult, Dictionary, FunctionEstimate, eval_estimate
from .si_signal import (SiChannelModel, TapConfig, build_regressor, build_regressors, generate_si,
                        generate_tx, load_iq, save_iq)

__all__ = [
    "AdmitResult", "ApsmConfig", "ComplexApsmFilter", "ConfigError", "Dictionary",
    "ExperimentConfig", "FunctionEstimate", "Hyperslab", "KernelKind", "KernelSpec",
    "LearningCurve", "NlmsFilter", "SiChannelModel", "TapConfig", "UpdateReport",
    "beta_coefficient", "build_regressor", "build_regressors", "eval_estimate", "generate_si",
    "generate_tx", "gram_matrix", "kernel_eval", "load_config", "load_iq", "mse_db",
    "run_experiment", "save_iq",
]
